"""Explicit time integration of ``m U_t = Lap U^m`` on the periodic torus.

The update ``U <- U + (dt/m) Lap_h(U^m)`` is conservative and, under
``dt <= h^2 / (2 d max U^(m-1))``, monotone: it preserves order, positivity,
the maximum principle and the L^1 contraction.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from ._kernels_py import _laplacian_sum as laplacian_sum, power_m
from .admissible import DiffusionParams, ParameterError
from .grid import ScalarField, TorusGrid


class InstabilityError(RuntimeError):
    """The explicit scheme produced negative or non-finite values."""


@dataclass(frozen=True)
class SolverConfig:
    """Run settings.

    ``epsilon_floor=None`` lifts the data by ``1e-3 * max(U0)``; pass ``0.0``
    to keep degenerate data untouched.  With ``alpha`` set, snapshots store
    ``u = U^alpha`` instead of ``U``.
    """

    params: DiffusionParams
    t_end: float
    sample_every: float
    cfl_fraction: float = 0.4
    epsilon_floor: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        if not (0.0 < self.cfl_fraction < 1.0):
            raise ParameterError(f"cfl_fraction must lie in (0, 1), got {self.cfl_fraction}")
        if not self.t_end >= 0:
            raise ParameterError(f"t_end must be nonnegative, got {self.t_end}")
        if not self.sample_every > 0:
            raise ParameterError(f"sample_every must be positive, got {self.sample_every}")
        if self.epsilon_floor is not None and self.epsilon_floor < 0:
            raise ParameterError("epsilon_floor must be nonnegative")
        if self.alpha is not None and not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")

    @property
    def variable(self) -> str:
        return "U" if self.alpha is None else "u"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = {"m": self.params.m, "d": self.params.d}
        return out


@dataclass
class Trajectory:
    """Snapshots ``values[k]`` at ``times[k]``.

    ``alpha`` is ``None`` when the stored variable is ``U`` itself.
    """

    grid: TorusGrid
    times: np.ndarray
    values: np.ndarray
    config: SolverConfig
    epsilon: float = 0.0
    alpha: float | None = None
    steps: int = 0
    backend: str = field(default=_backend.BACKEND)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.values):
            raise ParameterError("times and snapshots differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ParameterError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def field(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.values[k])

    def fields(self):
        for k in range(len(self)):
            yield self.field(k)

    @property
    def sample_every(self) -> float:
        return self.config.sample_every

    def to_u(self, alpha: float) -> "Trajectory":
        """Same run in the variable ``u = U^alpha``."""
        if self.alpha is not None:
            raise ParameterError("trajectory is already stored as U^alpha")
        if not (0.0 < alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
        vals = self.values if alpha == 1.0 else self.values ** alpha
        return Trajectory(self.grid, self.times.copy(), vals, self.config,
                          self.epsilon, alpha, self.steps, self.backend)

    def to_U(self) -> "Trajectory":
        if self.alpha is None:
            return self
        vals = self.values if self.alpha == 1.0 else self.values ** (1.0 / self.alpha)
        return Trajectory(self.grid, self.times.copy(), vals, self.config,
                          self.epsilon, None, self.steps, self.backend)


def stable_dt(U: ScalarField, params: DiffusionParams, cfl_fraction: float = 0.4) -> float:
    """``cfl h^2 / (2 d max U^(m-1))``; the max sits at min U when m < 1."""
    vals = U.values
    h = U.grid.h
    m = params.m
    if m == 1.0:
        dmax = 1.0
    elif m > 1.0:
        dmax = float(vals.max()) ** (m - 1.0) if vals.max() > 0 else 0.0
    else:
        umin = float(vals.min())
        if umin <= 0:
            raise ParameterError("fast diffusion needs U > 0 everywhere (apply the epsilon lift)")
        dmax = umin ** (m - 1.0)
    if dmax == 0.0:
        return math.inf
    return cfl_fraction * h * h / (2.0 * U.grid.d * dmax)


def step(U: ScalarField, dt: float, params: DiffusionParams) -> ScalarField:
    """One explicit Euler step ``U + (dt/m) Lap_h(U^m)``."""
    vals = U.values.reshape(-1).copy()
    g = U.grid
    Um = power_m(vals, params.m)
    lap = laplacian_sum(Um, g.d, g.N)
    vals += dt / params.m / (g.h * g.h) * lap
    if not np.all(np.isfinite(vals)):
        raise InstabilityError("non-finite value after step")
    if vals.min() < -1e-13:
        raise InstabilityError(f"negative value {vals.min():.3e} after step")
    return ScalarField(g, vals.reshape(g.shape))


def sample_times(t_end: float, sample_every: float) -> np.ndarray:
    """``0, s, 2s, ...`` strictly below ``t_end`` (up to 1e-9 s), then ``t_end``."""
    if t_end == 0:
        return np.zeros(1)
    k = int(math.floor(t_end / sample_every * (1 + 1e-12)))
    ts = np.arange(k + 1) * sample_every
    ts = ts[ts < t_end - 1e-9 * sample_every]
    return np.append(ts, t_end)


def evolve(U0: ScalarField, config: SolverConfig, backend: str | None = None) -> Trajectory:
    """Integrate from ``U0`` (after the epsilon lift) to ``config.t_end``.

    Snapshots are taken at exactly the sample times: the step before each
    one is shortened rather than interpolated.
    """
    params = config.params
    grid = U0.grid
    if grid.d != params.d:
        raise ParameterError(f"grid dimension {grid.d} differs from params.d={params.d}")
    if np.any(U0.values < 0):
        raise ParameterError("initial data must be nonnegative")
    umax = float(U0.values.max())
    eps = 1e-3 * umax if config.epsilon_floor is None else config.epsilon_floor
    if umax > 0 and eps >= umax:
        raise ParameterError("epsilon_floor must stay below the initial maximum")
    U = (U0.values + eps).reshape(-1).astype(float).copy()
    if params.m < 1.0 and U.min() <= 0:
        raise ParameterError("fast diffusion needs strictly positive data; use epsilon_floor > 0")

    kernel = _backend.get_kernel(backend)
    times = sample_times(config.t_end, config.sample_every)
    snaps = np.empty((len(times),) + grid.shape)
    snaps[0] = U.reshape(grid.shape)
    total = 0
    for k in range(1, len(times)):
        steps, status, _ = kernel(U, float(params.m), grid.h, grid.d, grid.N,
                                  config.cfl_fraction, float(times[k] - times[k - 1]))
        total += steps
        if status == _backend.STATUS_NEGATIVE:
            raise InstabilityError(f"negative value near t={times[k]:.6g} (min {U.min():.3e})")
        if status == _backend.STATUS_NONFINITE:
            raise InstabilityError(f"non-finite value near t={times[k]:.6g}")
        if status == _backend.STATUS_ZERO_FDE:
            raise InstabilityError("fast diffusion reached U <= 0")
        snaps[k] = U.reshape(grid.shape)
    traj = Trajectory(grid, times, snaps, config, eps, None, total,
                      backend or _backend.BACKEND)
    if config.alpha is not None:
        traj = traj.to_u(config.alpha)
    return traj


# --------------------------------------------------------------------------
# initial data

def _periodic_offsets(grid: TorusGrid, center) -> list[np.ndarray]:
    c = np.broadcast_to(np.asarray(center, dtype=float), (grid.d,))
    out = []
    for x, ck in zip(grid.coords(), c):
        dx = x - ck
        out.append(dx - grid.L * np.round(dx / grid.L))
    return out


def barenblatt_profile(t, r, m: float, d: int = 1, C: float = 1.0):
    """Source solution of ``m U_t = Lap U^m`` (m > 1) at distance ``r``.

    With ``tau = t/m`` this is the classical profile
    ``tau^-a (C - k r^2 tau^(-2a/d))_+^(1/(m-1))``, ``a = d/(d(m-1)+2)``,
    ``k = a (m-1)/(2 m d)``.
    """
    if m <= 1.0:
        raise ParameterError("the Barenblatt profile needs m > 1")
    tau = np.asarray(t, dtype=float) / m
    a = d / (d * (m - 1.0) + 2.0)
    b = a / d
    k = (m - 1.0) * b / (2.0 * m)
    z = C - k * np.asarray(r, dtype=float) ** 2 * tau ** (-2.0 * b)
    return tau ** (-a) * np.maximum(z, 0.0) ** (1.0 / (m - 1.0))


def barenblatt_cell_average(grid: TorusGrid, t: float, m: float, C: float = 1.0,
                            center=None, subcells: int = 16) -> np.ndarray:
    """Barenblatt profile averaged over each cell ``[x_i - h/2, x_i + h/2]^d``.

    Averaging keeps the discretisation error of the front independent of
    where it falls relative to the nodes.
    """
    center = grid.L / 2 if center is None else center
    offs = _periodic_offsets(grid, center)
    sub = (np.arange(subcells) + 0.5) / subcells - 0.5
    acc = np.zeros(grid.shape)
    if grid.d == 1:
        for s in sub:
            acc += barenblatt_profile(t, np.abs(offs[0] + s * grid.h), m, 1, C)
        return acc / subcells
    for s in sub:
        for q in sub:
            r = np.hypot(offs[0] + s * grid.h, offs[1] + q * grid.h)
            acc += barenblatt_profile(t, r, m, 2, C)
    return acc / subcells ** 2


def make_initial(kind: str, grid: TorusGrid, params: DiffusionParams | None = None,
                 **kw) -> ScalarField:
    """Initial data by name.

    ``constant_plus_cosine``: ``base + amplitude * mean_k cos(2 pi mode x_k / L + phase)``.
    ``gaussian``: ``base + height * exp(-|x - center|^2 / (2 width^2))``
    (periodic distance).  ``bump``: ``base + height * exp(1 - 1/(1 - r^2/R^2))``
    for ``r < R`` and ``base`` elsewhere.  ``barenblatt``: the cell-averaged
    source solution at time ``t0``.  ``random_modes``: ``base`` plus a few
    low Fourier modes with seeded random coefficients scaled so the
    oscillation never exceeds ``amplitude``.
    """
    kw = dict(kw)
    if kind == "constant_plus_cosine":
        base = float(kw.pop("base", 1.0))
        amp = float(kw.pop("amplitude", 0.0))
        mode = int(kw.pop("mode", 1))
        phase = float(kw.pop("phase", 0.0))
        _no_extra(kind, kw)
        if abs(amp) >= base:
            raise ParameterError("constant_plus_cosine needs |amplitude| < base for positivity")
        wave = sum(np.cos(2 * np.pi * mode * x / grid.L + phase) for x in grid.coords())
        vals = base + amp * wave / grid.d
    elif kind == "gaussian":
        center = kw.pop("center", grid.L / 2)
        width = float(kw.pop("width", grid.L / 10))
        height = float(kw.pop("height", 1.0))
        base = float(kw.pop("base", 0.0))
        _no_extra(kind, kw)
        if width <= 0 or height < 0 or base < 0:
            raise ParameterError("gaussian needs width > 0, height >= 0, base >= 0")
        r2 = sum(o * o for o in _periodic_offsets(grid, center))
        vals = base + height * np.exp(-r2 / (2 * width * width))
    elif kind == "bump":
        center = kw.pop("center", grid.L / 2)
        radius = float(kw.pop("radius", grid.L / 4))
        height = float(kw.pop("height", 1.0))
        base = float(kw.pop("base", 0.0))
        _no_extra(kind, kw)
        if radius <= 0 or radius > grid.L / 2 or height < 0 or base < 0:
            raise ParameterError("bump needs 0 < radius <= L/2, height >= 0, base >= 0")
        s = sum(o * o for o in _periodic_offsets(grid, center)) / radius ** 2
        inside = s < 1.0
        vals = np.full(grid.shape, base)
        vals[inside] += height * np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    elif kind == "barenblatt":
        if params is None:
            raise ParameterError("barenblatt initial data needs the diffusion parameters")
        t0 = float(kw.pop("t0", 1.0))
        C = float(kw.pop("C", 1.0))
        center = kw.pop("center", None)
        subcells = int(kw.pop("subcells", 16))
        _no_extra(kind, kw)
        if t0 <= 0 or C <= 0:
            raise ParameterError("barenblatt needs t0 > 0 and C > 0")
        vals = barenblatt_cell_average(grid, t0, params.m, C, center, subcells)
    elif kind == "random_modes":
        seed = int(kw.pop("seed", 0))
        base = float(kw.pop("base", 1.0))
        amp = float(kw.pop("amplitude", 0.3))
        modes = int(kw.pop("modes", 3))
        _no_extra(kind, kw)
        if not 0 <= amp < base or modes < 1:
            raise ParameterError("random_modes needs 0 <= amplitude < base and modes >= 1")
        rng = np.random.default_rng(seed)
        xs = grid.coords()
        wave = np.zeros(grid.shape)
        for _ in range(modes):
            k = rng.integers(-modes, modes + 1, size=grid.d)
            if not k.any():
                k[0] = 1
            ph = rng.uniform(0, 2 * np.pi)
            arg = sum(kk * x for kk, x in zip(k, xs)) * (2 * np.pi / grid.L) + ph
            wave += rng.uniform(-1, 1) * np.cos(arg)
        scale = np.abs(wave).max()
        vals = base + (amp * wave / scale if scale > 0 else wave)
    else:
        raise ParameterError(f"unknown initial data kind {kind!r}")
    return ScalarField(grid, np.broadcast_to(vals, grid.shape).copy())


def _no_extra(kind, kw):
    if kw:
        raise ParameterError(f"unexpected parameters for {kind}: {sorted(kw)}")


INITIAL_KINDS = ("constant_plus_cosine", "gaussian", "bump", "barenblatt", "random_modes")


def mass(U: ScalarField) -> float:
    return float(U.grid.cell_volume * U.values.sum())


def mode_amplitude(U: ScalarField, mode: int = 1) -> float:
    """Coefficient of ``cos(2 pi mode x / L)`` along the first axis (1D)."""
    x = U.grid.axis()
    vals = U.values if U.grid.d == 1 else U.values.mean(axis=1)
    return float(2.0 / U.grid.N * np.sum(vals * np.cos(2 * np.pi * mode * x / U.grid.L)))
