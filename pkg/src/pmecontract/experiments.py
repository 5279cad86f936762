"""Scenario pipelines behind the command line.

Every pipeline takes a validated :class:`ExperimentConfig` and an output
directory, writes its CSV files there and returns the list of checks it ran.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .admissible import DiffusionParams, RegionClass, classify, p_bounds, sample_region
from .config import ExperimentConfig
from .functionals import (DirectionVector, contraction_balance, directional_quotient,
                          energy_E, energy_second_differences, gradient_balance,
                          gradient_flow_alpha, gradient_flow_residuals, max_positive_jump,
                          relative_residual, write_diagnostics_csv, write_directional_csv)
from .grid import TorusGrid
from .io import save_trajectory
from .quadforms import (m_matrix, q_positivity_scan, q_scan_table, log_w_grid,
                        region_equivalence_rows, write_region_equivalence_csv, write_scan_csv)
from .solver import (SolverConfig, barenblatt_cell_average, evolve, make_initial, mass,
                     mode_amplitude)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "value": self.value, "tol": self.tol, "passed": self.passed}


def at_most(name, value, tol) -> Check:
    return Check(name, float(value), float(tol), bool(value <= tol))


def at_least(name, value, tol) -> Check:
    return Check(name, float(value), float(tol), bool(value >= tol))


def tag(n=None, alpha=None, p=None, N=None, seed=None) -> str:
    """File-name fragment such as ``n0.5_a0.75_p2_N256_s0``."""
    parts = []
    for key, val in (("n", n), ("a", alpha), ("p", p), ("N", N), ("s", seed)):
        if val is not None:
            parts.append(f"{key}{val:g}" if isinstance(val, float) else f"{key}{val}")
    return "_".join(parts)


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)
                        for x in row])


# --------------------------------------------------------------------------

def run_region(cfg: ExperimentConfig, out: Path) -> list[Check]:
    n = cfg.n
    reg = sample_region(n, cfg["region.alpha_steps"], cfg["region.p_max"],
                        cfg["region.p_steps"], cfg["region.tol"])
    with open(out / f"region_{tag(n=n)}.csv", "w", newline="") as fh:
        reg.write_csv(fh)
    # below alpha = |n| nothing may be admissible
    bad = sum(1 for a, _, c in reg.rows() if a < abs(n) - cfg["region.tol"] and c.admissible)
    return [at_most("admissible_points_below_abs_n", bad, 0)]


def run_matrices(cfg: ExperimentConfig, out: Path) -> list[Check]:
    checks = []
    w_min, w_max, steps = cfg["matrices.w_min"], cfg["matrices.w_max"], cfg["matrices.steps"]
    if cfg.exponents is not None:
        a, p = cfg.exponents
        n = cfg.n
        w = log_w_grid(w_min, w_max, steps)
        with open(out / f"scan_{tag(n=n, alpha=a, p=p)}.csv", "w", newline="") as fh:
            write_scan_csv(fh, q_scan_table(n, a, p, w))
        if classify(n, (a, p)) is RegionClass.INTERIOR:
            rep = q_positivity_scan(n, a, p, w_min, w_max, steps)
            checks.append(at_least("scan_min_eig", rep.min_scaled_eig, -1e-10))
    if cfg["matrices.samples"]:
        rng = np.random.default_rng(cfg.seed)
        rows = region_equivalence_rows(cfg["matrices.n_list"], cfg["matrices.samples"], rng,
                                       steps=steps)
        with open(out / f"equivalence_{tag(seed=cfg.seed)}.csv", "w", newline="") as fh:
            write_region_equivalence_csv(fh, rows)
        interior = [r for r in rows if r[3] is RegionClass.INTERIOR]
        outside = [r for r in rows if r[3] is RegionClass.OUTSIDE]
        if interior:
            checks.append(at_least("interior_min_eig_q", min(r[4] for r in interior), -1e-10))
            checks.append(at_least("interior_min_eig_m", min(r[6] for r in interior), 1e-12))
        if outside:
            checks.append(at_most("outside_max_witness_eig", max(r[4] for r in outside), -1e-8))
    return checks


def run_simulate(cfg: ExperimentConfig, out: Path) -> list[Check]:
    U0 = cfg.initial_field("u")
    traj = evolve(U0, cfg.solver_config())
    m0 = mass(traj.field(0))
    drift = max(abs(mass(f) - m0) for f in traj.fields()) / m0
    hi = traj.values.max(axis=tuple(range(1, traj.values.ndim)))
    lo = traj.values.min(axis=tuple(range(1, traj.values.ndim)))
    save_trajectory(out / "trajectory", traj.to_u(cfg.exponents[0]) if cfg.exponents else traj)
    _write_rows(out / f"summary_{tag(n=cfg.n, N=cfg.grid.N, seed=cfg.seed)}.csv",
                ["t", "mass", "min", "max"],
                [(t, mass(f), a, b) for t, f, a, b in zip(traj.times, traj.fields(), lo, hi)])
    return [at_most("mass_relative_drift", drift, 1e-10),
            at_most("max_principle_excess", max(np.max(np.diff(hi)), 0.0), 1e-12),
            at_most("min_principle_deficit", max(-np.min(np.diff(lo)), 0.0), 1e-12)]


def _monotone_check(name, rows, tol_rel):
    l0 = rows[0].lyapunov
    jump = max_positive_jump([r.lyapunov for r in rows])
    return at_most(name, jump / l0 if l0 else jump, tol_rel)


def contraction_pair(cfg: ExperimentConfig, alpha: float, p: float,
                     grid: TorusGrid | None = None):
    """Run both initial data and return the contraction diagnostics."""
    grid = grid or cfg.grid
    scfg = cfg.solver_config(alpha=alpha)
    tu = evolve(cfg.initial_field("u", grid), scfg)
    tv = evolve(cfg.initial_field("v", grid), scfg)
    return contraction_balance(tu, tv, cfg.n, alpha, p)


def run_contract(cfg: ExperimentConfig, out: Path) -> list[Check]:
    a, p = cfg.exponents
    rows = contraction_pair(cfg, a, p)
    name = f"contract_{tag(cfg.n, a, p, cfg.grid.N, cfg.seed)}.csv"
    with open(out / name, "w", newline="") as fh:
        write_diagnostics_csv(fh, rows)
    checks = [_monotone_check("lyapunov_max_positive_jump", rows, cfg["check.monotone_tol"])]
    if cfg["check.balance_tol"] is not None:
        checks.append(at_most("balance_residual", relative_residual(rows),
                              cfg["check.balance_tol"]))
    return checks


def run_gradient(cfg: ExperimentConfig, out: Path) -> list[Check]:
    a, p = cfg.exponents
    traj = evolve(cfg.initial_field("u"), cfg.solver_config(alpha=a))
    rows = gradient_balance(traj, cfg.n, a, p)
    name = f"gradient_{tag(cfg.n, a, p, cfg.grid.N, cfg.seed)}.csv"
    with open(out / name, "w", newline="") as fh:
        write_diagnostics_csv(fh, rows)
    checks = [_monotone_check("lyapunov_max_positive_jump", rows, cfg["check.monotone_tol"])]
    if cfg["check.balance_tol"] is not None:
        checks.append(at_most("balance_residual", relative_residual(rows),
                              cfg["check.balance_tol"]))
    return checks


def run_directional(cfg: ExperimentConfig, out: Path) -> list[Check]:
    a, p = cfg.exponents
    traj = evolve(cfg.initial_field("u"), cfg.solver_config(alpha=a))
    xi = DirectionVector(cfg["directional.xi_t"], cfg["directional.xi_x"])
    rep = directional_quotient(traj, xi, cfg["directional.eta_steps"], p)
    name = f"directional_{tag(cfg.n, a, p, cfg.grid.N, cfg.seed)}.csv"
    with open(out / name, "w", newline="") as fh:
        write_directional_csv(fh, rep)
    return [at_most("excess_over_c_xi", rep.max_excess, cfg["check.directional_tol"])]


def run_gradflow(cfg: ExperimentConfig, out: Path) -> list[Check]:
    n = cfg.n
    a = gradient_flow_alpha(n)
    gamma = n / a
    traj = evolve(cfg.initial_field("u"), cfg.solver_config(alpha=a))
    energy = np.array([energy_E(f, gamma) for f in traj.fields()])
    rt, res = gradient_flow_residuals(traj, n)
    resid_at = dict(zip(rt.tolist(), res.tolist()))
    _write_rows(out / f"gradflow_{tag(n, a, 2.0, cfg.grid.N, cfg.seed)}.csv",
                ["t", "energy", "residual"],
                [(t, e, resid_at.get(float(t), float("nan"))) for t, e in zip(traj.times, energy)])
    rng = np.random.default_rng(cfg.seed)
    d2 = energy_second_differences(cfg.grid, gamma, 100, rng)
    return [at_most("energy_max_positive_jump", max_positive_jump(energy) / energy[0],
                    cfg["check.monotone_tol"]),
            at_most("gradient_flow_residual", float(res.max()) if len(res) else 0.0,
                    cfg["check.gradflow_tol"]),
            at_least("convexity_min_second_difference", float(d2.min()),
                     cfg["check.convexity_floor"])]


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True)
class SweepRow:
    n: float
    alpha: float
    p: float
    region: str
    min_eig_q: float
    min_eig_m: float
    max_jump: float
    final_residual: float
    monotone: bool


SWEEP_COLUMNS = tuple(f.name for f in fields(SweepRow))


@dataclass
class SweepReport:
    rows: list

    def write_csv(self, path) -> None:
        _write_rows(Path(path), SWEEP_COLUMNS, [astuple(r) for r in self.rows])

    @property
    def all_monotone(self) -> bool:
        return all(r.monotone for r in self.rows)


def sweep_points(n: float, alpha_steps: int, p_steps: int, p_cap: float):
    """Interior lattice of the admissible set: ``alpha_steps x p_steps`` points.

    ``alpha`` is spread over the open interval ``(|n|, 1)`` and, for each
    ``alpha``, ``p`` over the open interval ``(P_-, min(P_+, p_cap))``.
    For ``n = 0`` the bounds are ``alpha > 1/p_cap`` and ``1/alpha < p < p_cap``.
    """
    # with n = 0 the region is alpha p >= 1, so alpha starts at 1 / p_cap
    lo = abs(n) if n != 0 else 1.0 / p_cap
    pts = []
    for i in range(1, alpha_steps + 1):
        a = lo + (1.0 - lo) * i / (alpha_steps + 1)
        pm, pp = p_bounds(n, a) if n != 0 else (1.0 / a, p_cap)
        pp = min(pp, p_cap)
        for j in range(1, p_steps + 1):
            pts.append((a, pm + (pp - pm) * j / (p_steps + 1)))
    return pts


def _sweep_point(args) -> SweepRow:
    cfg, n, a, p, tol = args
    params = DiffusionParams(1.0 + n, cfg["diffusion.d"])
    grid = cfg.grid
    scfg = cfg.solver_config(alpha=a, params=params)
    spec_u, spec_v = cfg.initial["u"], cfg.initial["v"]
    tu = evolve(make_initial(spec_u.kind, grid, params, **_with_seed(spec_u, cfg.seed)), scfg)
    tv = evolve(make_initial(spec_v.kind, grid, params, **_with_seed(spec_v, cfg.seed + 1)), scfg)
    rows = contraction_balance(tu, tv, n, a, p)
    l0 = rows[0].lyapunov
    jump = max_positive_jump([r.lyapunov for r in rows])
    jump = jump / l0 if l0 else jump
    rep = q_positivity_scan(n, a, p)
    return SweepRow(n, a, p, str(classify(n, (a, p))), rep.min_scaled_eig,
                    float(m_matrix(n, a, p).min_eig), jump,
                    rows[-1].balance_residual / l0 if l0 else 0.0, bool(jump <= tol))


def _with_seed(spec, seed):
    params = dict(spec.params)
    if spec.kind == "random_modes":
        params.setdefault("seed", seed)
    return params


def run_sweep_points(cfg: ExperimentConfig, workers: int = 1) -> SweepReport:
    tol = cfg["check.monotone_tol"]
    jobs = [(cfg, n, a, p, tol) for n in cfg["sweep.n"]
            for a, p in sweep_points(n, cfg["sweep.alpha_steps"], cfg["sweep.p_steps"],
                                     cfg["sweep.p_cap"])]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    return SweepReport(rows)


def run_sweep(cfg: ExperimentConfig, out: Path, workers: int = 1) -> list[Check]:
    rep = run_sweep_points(cfg, workers)
    rep.write_csv(out / f"sweep_{tag(N=cfg.grid.N, seed=cfg.seed)}.csv")
    return [at_most("non_monotone_points", sum(not r.monotone for r in rep.rows), 0)]


# --------------------------------------------------------------------------
# solver validation

def fourier_decay_error(N: int, t_end: float = 0.5, amplitude: float = 0.1) -> float:
    """|measured - exact| decay rate of the first mode for the heat equation."""
    grid = TorusGrid(1, N)
    U0 = make_initial("constant_plus_cosine", grid, base=1.0, amplitude=amplitude)
    cfg = SolverConfig(DiffusionParams(1.0), t_end, t_end, epsilon_floor=0.0)
    traj = evolve(U0, cfg)
    rate = -math.log(mode_amplitude(traj.field(-1)) / mode_amplitude(traj.field(0))) / t_end
    return abs(rate - 1.0)


def barenblatt_errors(Ns, m: float = 2.0, L: float = 12.0, t0: float = 0.5,
                      t1: float = 2.0) -> list[float]:
    """L^1 distance to the cell-averaged source solution after ``t1 - t0``."""
    errs = []
    for N in Ns:
        grid = TorusGrid(1, N, L)
        U0 = make_initial("barenblatt", grid, DiffusionParams(m), t0=t0)
        cfg = SolverConfig(DiffusionParams(m), t1 - t0, t1 - t0, epsilon_floor=0.0)
        U1 = evolve(U0, cfg).values[-1]
        ref = barenblatt_cell_average(grid, t1, m)
        errs.append(float(grid.cell_volume * np.abs(U1 - ref).sum()))
    return errs


def l1_contraction_jump(cfg: ExperimentConfig) -> float:
    grid = cfg.grid
    U0 = cfg.initial_field("u") if "u" in cfg.initial else \
        make_initial("constant_plus_cosine", grid, base=1.0, amplitude=0.3)
    V0 = cfg.initial_field("v") if "v" in cfg.initial else \
        make_initial("gaussian", grid, base=0.5, height=1.0)
    scfg = cfg.solver_config()
    tu, tv = evolve(U0, scfg), evolve(V0, scfg)
    dist = [grid.cell_volume * np.abs(a - b).sum() for a, b in zip(tu.values, tv.values)]
    return max_positive_jump(dist) / dist[0] if dist[0] else 0.0


def run_validate(cfg: ExperimentConfig, out: Path) -> list[Check]:
    Ns = cfg["validate.N_list"]
    checks = [at_most("fourier_decay_rate_error", fourier_decay_error(Ns[-1]), 1e-3)]
    errs = barenblatt_errors(Ns)
    ratios = [errs[i] / errs[i + 1] for i in range(len(errs) - 1)]
    checks.append(at_least("barenblatt_min_error_ratio", min(ratios), 2.0))
    U0 = cfg.initial_field("u") if "u" in cfg.initial else \
        make_initial("constant_plus_cosine", cfg.grid, base=1.0, amplitude=0.3)
    traj = evolve(U0, cfg.solver_config())
    m0 = mass(traj.field(0))
    checks.append(at_most("mass_relative_drift",
                          max(abs(mass(f) - m0) for f in traj.fields()) / m0, 1e-10))
    checks.append(at_most("l1_contraction_max_jump", l1_contraction_jump(cfg), 1e-8))
    _write_rows(out / f"barenblatt_{tag(seed=cfg.seed)}.csv", ["N", "l1_error"],
                list(zip(Ns, errs)))
    _write_rows(out / f"validate_{tag(N=cfg.grid.N, seed=cfg.seed)}.csv",
                ["check", "value", "tol", "passed"],
                [(c.name, c.value, c.tol, c.passed) for c in checks])
    return checks


PIPELINES = {
    "region": run_region,
    "matrices": run_matrices,
    "simulate": run_simulate,
    "contract": run_contract,
    "gradient": run_gradient,
    "directional": run_directional,
    "gradflow": run_gradflow,
    "sweep": run_sweep,
    "validate": run_validate,
}
