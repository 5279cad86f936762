"""Experiment configuration: a line-oriented ``key = value`` format.

Keys are dotted (``solver.t_end = 0.5``); ``#`` starts a comment; blank
lines are ignored; every key may appear at most once and unknown keys are
errors.  Initial data live under ``initial.<name>.kind`` plus
``initial.<name>.<parameter>`` (names ``u`` and ``v``).  See ``KEYS`` for
the full table and README.md for examples.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .admissible import DiffusionParams, ParameterError, RegionClass, check_n, classify
from .grid import TorusGrid
from .solver import INITIAL_KINDS, SolverConfig, make_initial

SCENARIOS = ("region", "matrices", "simulate", "contract", "gradient", "directional",
             "gradflow", "sweep", "validate")
# scenarios whose analysis needs (alpha, p) inside the admissible set
NEEDS_PAIR = ("contract", "gradient", "directional")
NEEDS_CONTRACTION_RANGE = ("region", "matrices", "contract", "gradient", "directional",
                           "gradflow", "sweep")


class ConfigError(ParameterError):
    def __init__(self, message, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(s):
    v = float(s)
    if v != int(v):
        raise ValueError("must be an integer")
    return int(v)


def _float_list(s):
    return tuple(_float(x) for x in s.split(",") if x.strip())


def _int_list(s):
    return tuple(_int(x) for x in s.split(",") if x.strip())


def _eps(s):
    return None if s.strip().lower() == "auto" else _float(s)


def _scenario(s):
    s = s.strip()
    if s not in SCENARIOS:
        raise ValueError(f"unknown scenario {s!r}")
    return s


def _kind(s):
    s = s.strip()
    if s not in INITIAL_KINDS:
        raise ValueError(f"unknown initial data kind {s!r} (choose from {', '.join(INITIAL_KINDS)})")
    return s


# key -> (parser, default)
KEYS = {
    "scenario": (_scenario, None),
    "seed": (_int, 0),
    "diffusion.m": (_float, 1.5),
    "diffusion.d": (_int, 1),
    "exponents.alpha": (_float, None),
    "exponents.p": (_float, None),
    "grid.N": (_int, 128),
    "grid.L": (_float, 2.0 * math.pi),
    "solver.t_end": (_float, 0.5),
    "solver.sample_every": (_float, 0.005),
    "solver.cfl_fraction": (_float, 0.4),
    "solver.epsilon_floor": (_eps, None),
    "region.alpha_steps": (_int, 100),
    "region.p_max": (_float, 12.0),
    "region.p_steps": (_int, 221),
    "region.tol": (_float, 1e-9),
    "matrices.w_min": (_float, 1e-3),
    "matrices.w_max": (_float, 1.0),
    "matrices.steps": (_int, 2000),
    "matrices.samples": (_int, 200),
    "matrices.n_list": (_float_list, (-0.9, -0.5, -0.1, 0.1, 0.5, 0.9)),
    "directional.xi_t": (_int, 0),
    "directional.xi_x": (_int_list, None),
    "directional.eta_steps": (_int, 4),
    "sweep.n": (_float_list, None),
    "sweep.alpha_steps": (_int, 5),
    "sweep.p_steps": (_int, 5),
    "sweep.p_cap": (_float, 6.0),
    "validate.N_list": (_int_list, (128, 256, 512)),
    "check.monotone_tol": (_float, 1e-8),
    "check.balance_tol": (_float, None),
    "check.directional_tol": (_float, 1e-6),
    "check.gradflow_tol": (_float, 5e-2),
    "check.convexity_floor": (_float, -1e-10),
}

_KEY_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)*$")
_INITIAL_RE = re.compile(r"^initial\.(u|v)\.([A-Za-z_][A-Za-z0-9_]*)$")


@dataclass
class InitialSpec:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    """Validated configuration; ``values`` holds every key of ``KEYS``."""

    scenario: str
    values: dict
    initial: dict  # name -> InitialSpec
    raw_lines: dict = field(default_factory=dict, repr=False, compare=False)

    def __getitem__(self, key):
        return self.values[key]

    @property
    def seed(self) -> int:
        return self.values["seed"]

    @property
    def diffusion(self) -> DiffusionParams:
        return DiffusionParams(self["diffusion.m"], self["diffusion.d"])

    @property
    def n(self) -> float:
        return self["diffusion.m"] - 1.0

    @property
    def grid(self) -> TorusGrid:
        return TorusGrid(self["diffusion.d"], self["grid.N"], self["grid.L"])

    @property
    def exponents(self):
        a, p = self["exponents.alpha"], self["exponents.p"]
        return None if a is None or p is None else (a, p)

    def solver_config(self, alpha=None, grid_N=None, **overrides) -> SolverConfig:
        kw = dict(params=self.diffusion, t_end=self["solver.t_end"],
                  sample_every=self["solver.sample_every"],
                  cfl_fraction=self["solver.cfl_fraction"],
                  epsilon_floor=self["solver.epsilon_floor"], alpha=alpha)
        kw.update(overrides)
        return SolverConfig(**kw)

    def initial_field(self, name: str, grid: TorusGrid | None = None):
        spec = self.initial[name]
        params = dict(spec.params)
        if spec.kind == "random_modes":
            params.setdefault("seed", self.seed + (0 if name == "u" else 1))
        return make_initial(spec.kind, grid or self.grid, self.diffusion, **params)

    def to_text(self) -> str:
        """Serialise to the line format; ``parse_config(cfg.to_text())`` round-trips."""
        lines = [f"scenario = {self.scenario}"]
        for key, (_, default) in KEYS.items():
            if key == "scenario":
                continue
            val = self.values[key]
            if val is None:
                continue
            lines.append(f"{key} = {_fmt(val)}")
        for name in sorted(self.initial):
            spec = self.initial[name]
            lines.append(f"initial.{name}.kind = {spec.kind}")
            for k in sorted(spec.params):
                lines.append(f"initial.{name}.{k} = {_fmt(spec.params[k])}")
        return "\n".join(lines) + "\n"


def _fmt(val) -> str:
    if isinstance(val, tuple):
        return ", ".join(_fmt(v) for v in val)
    if isinstance(val, float):
        return repr(val)
    return str(val)


def parse_config(text: str, scenario: str | None = None) -> ExperimentConfig:
    """Parse and validate.  ``scenario`` (from the command line) must agree
    with a ``scenario`` key when both are given."""
    if not text.strip() and scenario is None:
        raise ConfigError("empty configuration")
    values, lines_of, initial_raw = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if not _KEY_RE.match(key):
            raise ConfigError(f"malformed key {key!r}", lineno)
        if key in lines_of:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines_of[key]})", lineno)
        if val == "":
            raise ConfigError(f"missing value for {key!r}", lineno)
        lines_of[key] = lineno
        m = _INITIAL_RE.match(key)
        if m:
            name, param = m.groups()
            try:
                parsed = _kind(val) if param == "kind" else _float(val)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}", lineno) from None
            initial_raw.setdefault(name, {})[param] = parsed
            continue
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        try:
            values[key] = KEYS[key][0](val)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None

    if scenario is not None and "scenario" in values and values["scenario"] != scenario:
        raise ConfigError(f"config scenario {values['scenario']!r} conflicts with "
                          f"command {scenario!r}", lines_of["scenario"])
    scen = scenario or values.get("scenario")
    if scen is None:
        raise ConfigError("no scenario given")
    full = {k: default for k, (_, default) in KEYS.items()}
    full.update(values)
    full["scenario"] = scen

    initial = {}
    for name, params in initial_raw.items():
        params = dict(params)
        if "kind" not in params:
            raise ConfigError(f"initial.{name}.kind is required",
                              min(lines_of[k] for k in lines_of if k.startswith(f"initial.{name}.")))
        kind = params.pop("kind")
        for k in ("mode", "modes", "seed", "subcells"):
            if k in params:
                params[k] = int(params[k])
        initial[name] = InitialSpec(kind, params)
    cfg = ExperimentConfig(scen, full, initial, lines_of)
    validate(cfg)
    return cfg


def _line(cfg, *keys):
    for k in keys:
        if k in cfg.raw_lines:
            return cfg.raw_lines[k]
    return None


def validate(cfg: ExperimentConfig) -> None:
    """Range and consistency checks; raises :class:`ConfigError`."""
    v = cfg.values
    s = cfg.scenario

    def err(msg, *keys):
        raise ConfigError(msg, _line(cfg, *keys))

    try:
        params = cfg.diffusion
    except ParameterError as exc:
        err(str(exc), "diffusion.m", "diffusion.d")
    if s in NEEDS_CONTRACTION_RANGE and s != "sweep":
        try:
            check_n(params.n)
        except ParameterError as exc:
            err(str(exc), "diffusion.m")
    try:
        grid = cfg.grid
    except ParameterError as exc:
        err(str(exc), "grid.N", "grid.L", "diffusion.d")
    try:
        cfg.solver_config()
    except ParameterError as exc:
        err(str(exc), "solver.t_end", "solver.sample_every", "solver.cfl_fraction",
            "solver.epsilon_floor")

    alpha, p = v["exponents.alpha"], v["exponents.p"]
    if (alpha is None) != (p is None):
        err("exponents.alpha and exponents.p must be given together",
            "exponents.alpha", "exponents.p")
    if s in NEEDS_PAIR:
        if alpha is None:
            err(f"scenario {s!r} needs exponents.alpha and exponents.p")
        if not (0 < alpha <= 1) or p < 1:
            err(f"need alpha in (0, 1] and p >= 1, got ({alpha}, {p})",
                "exponents.alpha", "exponents.p")
        if classify(params.n, (alpha, p)) is RegionClass.OUTSIDE:
            hint = f" (alpha must be >= |n| = {abs(params.n)})" if alpha < abs(params.n) else ""
            err(f"(alpha, p) = ({alpha}, {p}) lies outside the admissible set for "
                f"n = {params.n}{hint}", "exponents.alpha", "exponents.p")
        if p == 1 and alpha != 1:
            err("p = 1 is only admissible with alpha = 1", "exponents.p")
    if s == "simulate" and alpha is not None and not (0 < alpha <= 1):
        err("exponents.alpha must lie in (0, 1]", "exponents.alpha")
    if s == "gradflow":
        if not (-2.0 / 3.0 - 1e-12 <= params.n <= 0.0):
            err("the gradient-flow case needs n in [-2/3, 0]", "diffusion.m")
        a_gf = 1.0 + 0.5 * params.n
        if alpha is not None and (abs(alpha - a_gf) > 1e-12 or p != 2):
            err(f"gradflow requires (alpha, p) = (1 + n/2, 2) = ({a_gf}, 2)",
                "exponents.alpha", "exponents.p")

    needed = {"contract": ("u", "v"), "gradient": ("u",), "directional": ("u",),
              "gradflow": ("u",), "simulate": ("u",), "sweep": ("u", "v")}.get(s, ())
    for name in needed:
        if name not in cfg.initial:
            err(f"scenario {s!r} needs initial.{name}.kind")
    for name in cfg.initial:
        try:
            f = cfg.initial_field(name, grid)
        except ParameterError as exc:
            err(f"initial.{name}: {exc}", f"initial.{name}.kind")
        if params.m < 1 and f.values.min() <= 0 and v["solver.epsilon_floor"] == 0:
            err(f"initial.{name} vanishes somewhere; fast diffusion needs epsilon_floor > 0",
                "solver.epsilon_floor")

    if s == "region":
        if v["region.alpha_steps"] < 2 or v["region.p_steps"] < 2 or v["region.p_max"] <= 1:
            err("region grid needs >= 2 steps per axis and p_max > 1",
                "region.alpha_steps", "region.p_steps", "region.p_max")
        if v["region.tol"] <= 0:
            err("region.tol must be positive", "region.tol")
    if s == "matrices":
        if not (0 < v["matrices.w_min"] <= v["matrices.w_max"]) or v["matrices.steps"] < 2:
            err("need 0 < w_min <= w_max and steps >= 2", "matrices.w_min", "matrices.w_max",
                "matrices.steps")
        if v["matrices.samples"] < 0:
            err("matrices.samples must be >= 0", "matrices.samples")
        for n in v["matrices.n_list"]:
            if not -1 < n < 1:
                err(f"matrices.n_list entry {n} outside (-1, 1)", "matrices.n_list")
        if alpha is not None and alpha == 1 and p == 1:
            pass
        elif alpha is not None and (not (0 < alpha <= 1) or p <= 1):
            err("matrix scans need alpha in (0, 1] and p > 1", "exponents.alpha", "exponents.p")
    if s == "directional":
        xi_x = v["directional.xi_x"] or (1,) + (0,) * (grid.d - 1)
        if len(xi_x) != grid.d:
            err(f"directional.xi_x needs {grid.d} components", "directional.xi_x")
        if v["directional.xi_t"] == 0 and not any(xi_x):
            err("direction must be nonzero", "directional.xi_x", "directional.xi_t")
        if v["directional.eta_steps"] < 2:
            err("directional.eta_steps must be >= 2", "directional.eta_steps")
        v["directional.xi_x"] = tuple(xi_x)
    if s == "sweep":
        ns = v["sweep.n"] or (params.n,)
        for n in ns:
            if not -1 < n < 1:
                err(f"sweep.n entry {n} outside (-1, 1)", "sweep.n")
        if v["sweep.alpha_steps"] < 1 or v["sweep.p_steps"] < 1:
            err("sweep needs at least one step per axis", "sweep.alpha_steps", "sweep.p_steps")
        if v["sweep.p_cap"] <= 1:
            err("sweep.p_cap must exceed 1", "sweep.p_cap")
        v["sweep.n"] = tuple(ns)
    if s == "validate":
        Ns = v["validate.N_list"]
        if len(Ns) < 2 or any(N < 8 for N in Ns) or list(Ns) != sorted(set(Ns)):
            err("validate.N_list needs >= 2 increasing sizes >= 8", "validate.N_list")
    for key in ("check.monotone_tol", "check.directional_tol", "check.gradflow_tol"):
        if v[key] < 0:
            err(f"{key} must be nonnegative", key)
