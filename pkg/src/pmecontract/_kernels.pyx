# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled explicit stepping for m U_t = Lap U^m on the periodic grid.

Mirrors ``_kernels_py.advance`` operation by operation.
"""
from libc.math cimport pow, sqrt, isfinite
import numpy as np

cdef enum:
    STATUS_OK = 0
    STATUS_NEGATIVE = 1
    STATUS_NONFINITE = 2
    STATUS_ZERO_FDE = 3


cdef inline double _diffusivity_max(double[::1] U, Py_ssize_t size, double m, int *status):
    cdef Py_ssize_t i
    cdef double umin = U[0], umax = U[0]
    for i in range(1, size):
        if U[i] < umin:
            umin = U[i]
        if U[i] > umax:
            umax = U[i]
    if m == 1.0:
        return 1.0
    if m > 1.0:
        if umax <= 0.0:
            return 0.0
        return pow(umax, m - 1.0)
    if umin <= 0.0:
        status[0] = STATUS_ZERO_FDE
        return 0.0
    return pow(umin, m - 1.0)


def advance(double[::1] U, double m, double h, int d, int N, double cfl,
            double duration, double neg_tol=1e-13):
    """Advance the flattened field ``U`` in place by ``duration``.

    Returns ``(steps, status, elapsed)``.
    """
    cdef Py_ssize_t size = U.shape[0]
    cdef Py_ssize_t i, j, r, im, ip, jm, jp
    cdef double[::1] Um = np.empty(size)
    cdef double t = 0.0, dt, dmax, lam, inv_m = 1.0 / m, umin, val
    cdef double base_dt = cfl * h * h / (2.0 * d)
    cdef long steps = 0
    cdef int status = STATUS_OK
    cdef bint last = False

    if duration <= 0.0:
        return 0, STATUS_OK, 0.0
    while not last:
        dmax = _diffusivity_max(U, size, m, &status)
        if status != STATUS_OK:
            return steps, status, t
        if dmax == 0.0 or base_dt / dmax >= duration - t:
            dt = duration - t
            last = True
        else:
            dt = base_dt / dmax
        if m == 1.0:
            for i in range(size):
                Um[i] = U[i]
        elif m == 2.0:
            for i in range(size):
                Um[i] = U[i] * U[i]
        elif m == 1.5:
            for i in range(size):
                Um[i] = U[i] * sqrt(U[i])
        elif m == 0.5:
            for i in range(size):
                Um[i] = sqrt(U[i])
        else:
            for i in range(size):
                Um[i] = pow(U[i], m)
        lam = dt * inv_m / (h * h)
        umin = 0.0
        if d == 1:
            for i in range(size):
                im = i - 1 if i > 0 else size - 1
                ip = i + 1 if i < size - 1 else 0
                val = U[i] + lam * (Um[im] - 2.0 * Um[i] + Um[ip])
                U[i] = val
                if val < umin:
                    umin = val
                if not isfinite(val):
                    status = STATUS_NONFINITE
        else:
            for i in range(N):
                im = i - 1 if i > 0 else N - 1
                ip = i + 1 if i < N - 1 else 0
                for j in range(N):
                    jm = j - 1 if j > 0 else N - 1
                    jp = j + 1 if j < N - 1 else 0
                    r = i * N + j
                    val = U[r] + lam * ((Um[im * N + j] - 2.0 * Um[r] + Um[ip * N + j])
                                        + (Um[i * N + jm] - 2.0 * Um[r] + Um[i * N + jp]))
                    U[r] = val
                    if val < umin:
                        umin = val
                    if not isfinite(val):
                        status = STATUS_NONFINITE
        steps += 1
        t = duration if last else t + dt
        if status != STATUS_OK:
            return steps, status, t
        if umin < -neg_tol:
            return steps, STATUS_NEGATIVE, t
    return steps, STATUS_OK, t
