"""Pure numpy fallback for :mod:`pmecontract._kernels`."""
import numpy as np

STATUS_OK = 0
STATUS_NEGATIVE = 1
STATUS_NONFINITE = 2
STATUS_ZERO_FDE = 3


def _diffusivity_max(U, m):
    if m == 1.0:
        return 1.0, STATUS_OK
    if m > 1.0:
        umax = U.max()
        return (0.0 if umax <= 0.0 else umax ** (m - 1.0)), STATUS_OK
    umin = U.min()
    if umin <= 0.0:
        return 0.0, STATUS_ZERO_FDE
    return umin ** (m - 1.0), STATUS_OK


def _laplacian_sum(Um, d, N):
    if d == 1:
        return np.roll(Um, 1) - 2.0 * Um + np.roll(Um, -1)
    a = Um.reshape(N, N)
    out = ((np.roll(a, 1, 0) - 2.0 * a + np.roll(a, -1, 0))
           + (np.roll(a, 1, 1) - 2.0 * a + np.roll(a, -1, 1)))
    return out.reshape(-1)


def power_m(U, m):
    """``U**m`` with exact fast paths matching the compiled kernel."""
    if m == 1.0:
        return U.copy()
    if m == 2.0:
        return U * U
    if m == 1.5:
        return U * np.sqrt(U)
    if m == 0.5:
        return np.sqrt(U)
    return U ** m


def advance(U, m, h, d, N, cfl, duration, neg_tol=1e-13):
    """Advance the flattened field ``U`` in place by ``duration``.

    Returns ``(steps, status, elapsed)``.
    """
    if duration <= 0.0:
        return 0, STATUS_OK, 0.0
    base_dt = cfl * h * h / (2.0 * d)
    inv_m = 1.0 / m
    t = 0.0
    steps = 0
    last = False
    while not last:
        dmax, status = _diffusivity_max(U, m)
        if status != STATUS_OK:
            return steps, status, t
        if dmax == 0.0 or base_dt / dmax >= duration - t:
            dt = duration - t
            last = True
        else:
            dt = base_dt / dmax
        Um = power_m(U, m)
        lam = dt * inv_m / (h * h)
        U += lam * _laplacian_sum(Um, d, N)
        steps += 1
        t = duration if last else t + dt
        if not np.all(np.isfinite(U)):
            return steps, STATUS_NONFINITE, t
        if U.min() < -neg_tol:
            return steps, STATUS_NEGATIVE, t
    return steps, STATUS_OK, t
