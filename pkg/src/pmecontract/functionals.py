"""Lyapunov functionals, dissipation integrals and balance diagnostics.

Every ``*_balance`` function works on trajectories stored in the variable
``u = U^alpha`` and reports, per sample time,

    residual(t) = lyapunov(t) + p * int_0^t dissipation - lyapunov(0),

which vanishes for smooth positive solutions on the torus.  The time
integral uses the trapezoidal rule on the sample times.
"""
from __future__ import annotations

import csv
from dataclasses import astuple, dataclass, fields
from typing import TextIO

import numpy as np

from .admissible import ParameterError
from .grid import ScalarField, TorusGrid, gradient, hessian, laplacian
from .quadforms import dissipation_e, dissipation_ebar
from .solver import Trajectory


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    lyapunov: float
    dissipation: float
    cumulative_dissipation: float
    balance_residual: float


DIAGNOSTICS_COLUMNS = tuple(f.name for f in fields(DiagnosticsRow))


def write_diagnostics_csv(fh: TextIO, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(DIAGNOSTICS_COLUMNS)
    for r in rows:
        writer.writerow([repr(float(x)) for x in astuple(r)])


def cumulative_trapezoid(t, y) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def _rows(times, lyap, diss, p) -> list[DiagnosticsRow]:
    cum = cumulative_trapezoid(times, diss)
    resid = np.asarray(lyap) + p * cum - lyap[0]
    return [DiagnosticsRow(float(t), float(a), float(b), float(c), float(r))
            for t, a, b, c, r in zip(times, lyap, diss, cum, resid)]


def max_positive_jump(series) -> float:
    """Largest increase between consecutive entries (0 for a nonincreasing series)."""
    s = np.asarray(series, dtype=float)
    if len(s) < 2:
        return 0.0
    return float(max(np.max(np.diff(s)), 0.0))


def relative_residual(rows) -> float:
    """``max_t |residual(t)| / lyapunov(0)``."""
    l0 = rows[0].lyapunov
    return float(max(abs(r.balance_residual) for r in rows) / l0) if l0 else 0.0


# --------------------------------------------------------------------------
# Psi_{delta,p}

def psi_delta(delta: float, p: float, w):
    """``(w^p/p - delta^(p-1) w - delta^p (1/p - 1)) 1_{w > delta}``.

    At ``delta = 0`` this is ``w_+^p / p``; :func:`positive_power` gives the
    unnormalised ``w_+^p`` that appears in the functionals.
    """
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    w = np.asarray(w, dtype=float)
    ws = np.where(w > delta, w, delta)
    val = ws ** p / p - delta ** (p - 1.0) * ws - delta ** p * (1.0 / p - 1.0)
    return np.where(w > delta, val, 0.0)[()]


def psi_delta_prime(delta: float, p: float, w):
    w = np.asarray(w, dtype=float)
    ws = np.where(w > delta, w, delta)
    return np.where(w > delta, ws ** (p - 1.0) - delta ** (p - 1.0), 0.0)[()]


def positive_power(w, p: float):
    return np.maximum(np.asarray(w, dtype=float), 0.0) ** p


# --------------------------------------------------------------------------
# contraction of two solutions

def _same_grid(a: ScalarField, b: ScalarField):
    if a.grid != b.grid:
        raise ParameterError("fields live on different grids")


def contraction_functional(v: ScalarField, u: ScalarField, p: float) -> float:
    """Integral of ``(v - u)_+^p``."""
    _same_grid(v, u)
    return float(v.grid.cell_volume * np.sum(positive_power(v.values - u.values, p)))


def contraction_mask(v: ScalarField, u: ScalarField, u_floor: float = 0.0) -> np.ndarray:
    """``{v - u > 1e-12 max v} & {u > u_floor}``."""
    gap = 1e-12 * float(np.max(np.abs(v.values)))
    return (v.values - u.values > gap) & (u.values > u_floor)


def dissipation_integral(v: ScalarField, u: ScalarField, n, alpha, p,
                         u_floor: float = 0.0) -> float:
    _same_grid(v, u)
    mask = contraction_mask(v, u, u_floor)
    if not mask.any():
        return 0.0
    gv = gradient(v)[:, mask]
    gu = gradient(u)[:, mask]
    e = dissipation_e(n, alpha, p, v.values[mask], u.values[mask], gv, gu, check=False)
    return float(v.grid.cell_volume * np.sum(e))


def default_u_floor(traj: Trajectory) -> float:
    """``(10 eps)^alpha``: the set ``{U > 10 eps}`` expressed in ``u``."""
    if traj.epsilon <= 0:
        return 0.0
    return (10.0 * traj.epsilon) ** (traj.alpha if traj.alpha is not None else 1.0)


def _check_u_traj(traj: Trajectory, alpha):
    if traj.alpha is None:
        raise ParameterError("trajectory must be stored in u = U^alpha (use Trajectory.to_u)")
    if alpha is not None and abs(traj.alpha - alpha) > 1e-15:
        raise ParameterError(f"trajectory stored with alpha={traj.alpha}, requested {alpha}")


def contraction_balance(traj_u: Trajectory, traj_v: Trajectory, n, alpha, p,
                        u_floor: float | None = None) -> list[DiagnosticsRow]:
    """Diagnostics for ``int (v - u)_+^p`` along two synchronized runs."""
    _check_u_traj(traj_u, alpha)
    _check_u_traj(traj_v, alpha)
    if traj_u.grid != traj_v.grid or len(traj_u) != len(traj_v) \
            or not np.array_equal(traj_u.times, traj_v.times):
        raise ParameterError("trajectories are not synchronized")
    if u_floor is None:
        u_floor = max(default_u_floor(traj_u), default_u_floor(traj_v))
    lyap = np.empty(len(traj_u))
    diss = np.empty(len(traj_u))
    for k in range(len(traj_u)):
        u, v = traj_u.field(k), traj_v.field(k)
        lyap[k] = contraction_functional(v, u, p)
        diss[k] = dissipation_integral(v, u, n, alpha, p, u_floor)
    return _rows(traj_u.times, lyap, diss, p)


# --------------------------------------------------------------------------
# gradient decay

def gradient_functional(u: ScalarField, p: float) -> float:
    """Integral of ``|grad u|^p`` with centered differences."""
    g = gradient(u)
    return float(u.grid.cell_volume * np.sum(np.sum(g * g, axis=0) ** (0.5 * p)))


def gradient_dissipation(u: ScalarField, n, alpha, p, u_floor=0.0, g_floor=0.0) -> float:
    """Integral of the gradient-decay integrand over ``{|grad u| > g_floor, u > u_floor}``.

    At ``p = 2`` the integrand extends continuously to ``grad u = 0`` with
    value ``u^gamma |D^2 u|^2``, so nodes below ``g_floor`` contribute that
    value instead of being dropped.  For ``p > 2`` the extension is 0 and
    for ``p < 2`` the integrand is singular there.
    """
    g = gradient(u)
    gnorm = np.sqrt(np.sum(g * g, axis=0))
    positive = u.values > u_floor
    mask = (gnorm > g_floor) & (gnorm > 0) & positive
    H = hessian(u)
    total = 0.0
    if mask.any():
        total += float(np.sum(dissipation_ebar(n, alpha, p, u.values[mask], g[:, mask],
                                               H[:, :, mask])))
    flat = positive & ~mask
    if p == 2.0 and flat.any() and not (alpha == 1.0 and p == 1.0):
        gamma = n / alpha
        total += float(np.sum(u.values[flat] ** gamma
                              * np.sum(H[:, :, flat] ** 2, axis=(0, 1))))
    return u.grid.cell_volume * total


def gradient_balance(traj_u: Trajectory, n, alpha, p, u_floor: float | None = None,
                     g_floor: float | None = None) -> list[DiagnosticsRow]:
    """Diagnostics for ``int |grad u|^p``.

    The default ``g_floor`` is ``1e-8 max |grad u(0)|``.
    """
    _check_u_traj(traj_u, alpha)
    if u_floor is None:
        u_floor = default_u_floor(traj_u)
    if g_floor is None:
        g0 = gradient(traj_u.field(0))
        g_floor = 1e-8 * float(np.sqrt(np.sum(g0 * g0, axis=0)).max())
    lyap = np.empty(len(traj_u))
    diss = np.empty(len(traj_u))
    for k in range(len(traj_u)):
        u = traj_u.field(k)
        lyap[k] = gradient_functional(u, p)
        diss[k] = gradient_dissipation(u, n, alpha, p, u_floor, g_floor)
    return _rows(traj_u.times, lyap, diss, p)


# --------------------------------------------------------------------------
# directional derivative

@dataclass(frozen=True)
class DirectionVector:
    """Direction in lattice units.

    A step of size ``eta = j h`` moves ``j * xi_t_samples`` sample intervals
    in time and ``j * xi_x`` cells in space, i.e. the physical direction is
    ``(xi_t_samples * sample_every / h, xi_x)``.
    """

    xi_t_samples: int
    xi_x: tuple[int, ...]

    def __post_init__(self):
        xi_x = tuple(int(k) for k in np.atleast_1d(self.xi_x))
        if any(k != v for k, v in zip(xi_x, np.atleast_1d(self.xi_x))) \
                or int(self.xi_t_samples) != self.xi_t_samples:
            raise ParameterError("direction components must be integers (no interpolation)")
        object.__setattr__(self, "xi_x", xi_x)
        object.__setattr__(self, "xi_t_samples", int(self.xi_t_samples))
        if self.xi_t_samples == 0 and not any(xi_x):
            raise ParameterError("direction must be nonzero")

    def physical(self, h: float, sample_every: float) -> tuple[float, tuple[float, ...]]:
        return self.xi_t_samples * sample_every / h, tuple(float(k) for k in self.xi_x)


@dataclass
class DirectionalReport:
    times: np.ndarray
    etas: np.ndarray          # physical step sizes, decreasing
    quotients: np.ndarray     # shape (len(times), len(etas))
    extrapolated: np.ndarray  # eta -> 0 estimate per time
    c_xi: float
    max_excess: float         # max over t > 0 of (extrapolated - c_xi) / c_xi
    per_eta_jump: np.ndarray  # max positive jump of each fixed-eta series


def richardson(values, order: int = 2) -> float:
    """Extrapolate ``values[k] = f(eta_k)`` with ``eta_k`` halving to ``eta = 0``.

    Assumes ``f(eta) = f0 + c1 eta + c2 eta^2 + ...`` and eliminates up to
    ``order`` terms using the smallest steps.
    """
    vals = [float(v) for v in values]
    k = min(order, len(vals) - 1)
    table = vals[len(vals) - 1 - k:]
    for level in range(1, k + 1):
        f = 2.0 ** level
        table = [(f * table[i + 1] - table[i]) / (f - 1.0) for i in range(len(table) - 1)]
    return table[-1]


def directional_quotient(traj_u: Trajectory, xi: DirectionVector, eta_steps: int, p: float,
                         order: int = 2) -> DirectionalReport:
    """Difference quotients ``int |u((t,x) + eta xi) - u(t,x)|^p / eta^p``.

    ``eta`` runs over ``2^k h`` for ``k = eta_steps-1, ..., 0``; only shifts
    by whole cells and whole sample intervals are used.  The ``eta -> 0``
    value at ``t = 0`` is the estimate of ``C_xi``.
    """
    if eta_steps < 1:
        raise ParameterError("eta_steps must be >= 1")
    grid = traj_u.grid
    if len(xi.xi_x) != grid.d:
        raise ParameterError(f"xi_x must have {grid.d} components")
    if traj_u.alpha is None:
        raise ParameterError("trajectory must be stored in u = U^alpha")
    dt_s = np.diff(traj_u.times)
    if xi.xi_t_samples and len(dt_s) and not np.allclose(dt_s[:-1], traj_u.sample_every,
                                                         rtol=1e-9, atol=0):
        raise ParameterError("time shifts need uniformly spaced samples")
    js = [2 ** k for k in range(eta_steps - 1, -1, -1)]
    max_t_shift = js[0] * abs(xi.xi_t_samples)
    # the final sample may be a shortened interval; keep it out of time shifts
    usable = len(traj_u) if xi.xi_t_samples == 0 else len(traj_u) - 1
    n_times = usable - max_t_shift
    if n_times < 1:
        raise ParameterError("trajectory too short for the requested time shifts")
    etas = np.array([j * grid.h for j in js])
    Q = np.empty((n_times, len(js)))
    for ti in range(n_times):
        base = traj_u.values[ti]
        for ji, j in enumerate(js):
            shifted = traj_u.values[ti + j * xi.xi_t_samples]
            off = tuple(-j * k for k in xi.xi_x)
            shifted = np.roll(shifted, off, axis=tuple(range(grid.d)))
            diff = np.abs(shifted - base) / etas[ji]
            Q[ti, ji] = grid.cell_volume * np.sum(diff ** p)
    extrap = np.array([richardson(Q[ti], order) for ti in range(n_times)])
    c_xi = float(extrap[0])
    excess = 0.0
    if n_times > 1 and c_xi > 0:
        excess = float(np.max(extrap[1:] - c_xi) / c_xi)
    jumps = np.array([max_positive_jump(Q[:, ji]) for ji in range(len(js))])
    return DirectionalReport(traj_u.times[:n_times].copy(), etas, Q, extrap, c_xi,
                             excess, jumps)


def write_directional_csv(fh: TextIO, rep: DirectionalReport) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t"] + [f"eta={e!r}" for e in rep.etas] + ["extrapolated"])
    for t, row, ex in zip(rep.times, rep.quotients, rep.extrapolated):
        writer.writerow([repr(float(t))] + [repr(float(x)) for x in row] + [repr(float(ex))])


# --------------------------------------------------------------------------
# the gradient-flow case alpha = 1 + n/2, p = 2

def energy_E(u: ScalarField, gamma: float) -> float:
    """``int u^gamma |grad u|^2 / 2``."""
    g = gradient(u)
    return float(u.grid.cell_volume * np.sum(u.values ** gamma * np.sum(g * g, axis=0)) / 2.0)


def energy_variation(u: ScalarField, gamma: float) -> np.ndarray:
    """L^2 gradient ``-u^gamma Lap u - (gamma/2) u^(gamma-1) |grad u|^2``."""
    g = gradient(u)
    lap = laplacian(u).values
    return -(u.values ** gamma) * lap - 0.5 * gamma * u.values ** (gamma - 1.0) * np.sum(g * g, axis=0)


def gradient_flow_alpha(n: float) -> float:
    return 1.0 + 0.5 * n


def gradient_flow_residuals(traj_u: Trajectory, n: float) -> tuple[np.ndarray, np.ndarray]:
    """``||u_t + dE/du||_2 / ||u_t||_2`` at interior sample times.

    ``u_t`` is the centered difference of neighbouring snapshots.
    """
    alpha = gradient_flow_alpha(n)
    if traj_u.alpha is None or abs(traj_u.alpha - alpha) > 1e-12:
        raise ParameterError(f"gradient-flow check needs alpha = 1 + n/2 = {alpha}")
    gamma = n / alpha
    t = traj_u.times
    out_t, out = [], []
    for k in range(1, len(traj_u) - 1):
        ut = (traj_u.values[k + 1] - traj_u.values[k - 1]) / (t[k + 1] - t[k - 1])
        var = energy_variation(traj_u.field(k), gamma)
        den = np.sqrt(np.sum(ut * ut))
        if den == 0:
            continue
        out_t.append(t[k])
        out.append(np.sqrt(np.sum((ut + var) ** 2)) / den)
    return np.asarray(out_t), np.asarray(out)


def gradient_flow_residual(traj_u: Trajectory, n: float) -> float:
    _, r = gradient_flow_residuals(traj_u, n)
    return float(r.max()) if len(r) else 0.0


def energy_second_differences(grid: TorusGrid, gamma: float, n_directions: int,
                              rng: np.random.Generator, step: float = 1e-3,
                              base=1.0, amplitude=0.5) -> np.ndarray:
    """``E(u + s d) - 2 E(u) + E(u - s d)`` at random positive ``u`` and
    random directions ``d`` of unit max-norm."""
    out = np.empty(n_directions)
    for i in range(n_directions):
        u = base + amplitude * rng.uniform(-1.0, 1.0, grid.shape)
        d = rng.standard_normal(grid.shape)
        d /= np.abs(d).max()
        e0 = energy_E(grid.field(u), gamma)
        ep = energy_E(grid.field(u + step * d), gamma)
        em = energy_E(grid.field(u - step * d), gamma)
        out[i] = ep - 2.0 * e0 + em
    return out

