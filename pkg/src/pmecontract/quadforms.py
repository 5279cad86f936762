"""The 2x2 matrices Q(v, u) and M, their positivity, and the pointwise
dissipation integrands built from them.

All integrands are written for array inputs.  Vector arguments carry the
spatial component on axis 0 (shape ``(d, ...)``) and Hessians on the first
two axes (shape ``(d, d, ...)``), which is the layout produced by
:mod:`pmecontract.grid`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from .admissible import (ParameterError, RegionClass, check_n, classify,
                         interior_samples)


@dataclass(frozen=True)
class SymMatrix2:
    """Symmetric 2x2 matrix ``[[a11, a12], [a12, a22]]``.

    Entries may be numpy arrays, in which case every property is evaluated
    elementwise.
    """

    a11: float
    a12: float
    a22: float

    @property
    def trace(self):
        return self.a11 + self.a22

    @property
    def det(self):
        return self.a11 * self.a22 - self.a12 * self.a12

    def eigenvalues(self):
        """``(lambda_min, lambda_max)`` from the closed-form quadratic."""
        return sym2_eigenvalues(self.a11, self.a12, self.a22)

    @property
    def min_eig(self):
        return self.eigenvalues()[0]

    def quadratic(self, x, y):
        """``(x, y) A (x, y)^T`` for scalars or arrays."""
        return self.a11 * x * x + 2.0 * self.a12 * x * y + self.a22 * y * y

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]], dtype=float)

    def scaled(self, factor) -> "SymMatrix2":
        return SymMatrix2(self.a11 * factor, self.a12 * factor, self.a22 * factor)


def sym2_eigenvalues(a11, a12, a22):
    tr = np.add(a11, a22)
    half_gap = np.hypot(0.5 * np.subtract(a11, a22), a12)
    lam_max = 0.5 * tr + half_gap
    lam_min = 0.5 * tr - half_gap
    # lambda_min = det / lambda_max is free of cancellation when both are
    # nonnegative and lambda_max dominates
    det = np.multiply(a11, a22) - np.multiply(a12, a12)
    with np.errstate(divide="ignore", invalid="ignore"):
        stable = np.where(lam_max > 0, det / np.where(lam_max > 0, lam_max, 1.0), lam_min)
    lam_min = np.where((tr > 0) & (lam_max > 0), stable, lam_min)
    if np.ndim(lam_min) == 0:
        return float(lam_min), float(lam_max)
    return lam_min, lam_max


def _exponents(n, alpha, p):
    """``(gamma, Gamma)`` or ``None`` for the special pair (1, 1)."""
    check_n(n)
    if alpha == 1.0 and p == 1.0:
        return None
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if not p > 1.0:
        raise ParameterError(f"p must exceed 1 (or (alpha, p) = (1, 1)), got {p}")
    return n / alpha, (1.0 - alpha) / (alpha * (p - 1.0))


def q_matrix(n, alpha, p, v, u) -> SymMatrix2:
    """Q_{alpha,p}(v, u); the zero matrix for ``(alpha, p) = (1, 1)``."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(v <= 0) or np.any(u <= 0):
        raise ParameterError("q_matrix needs u, v > 0")
    ex = _exponents(n, alpha, p)
    if ex is None:
        z = np.zeros(np.broadcast(v, u).shape)
        return SymMatrix2(z[()], z[()], z[()])
    gamma, Gamma = ex
    vg = v ** gamma
    ug = u ** gamma
    c = p - 1.0
    a11 = c * vg * (1.0 + Gamma * (u / v - 1.0))
    a22 = c * ug * (1.0 + Gamma * (v / u - 1.0))
    a12 = -0.5 * c * (vg + ug)
    return SymMatrix2(a11[()], a12[()], a22[()])


def m_matrix(n, alpha, p) -> SymMatrix2:
    """M_{alpha,p}; the zero matrix for ``(alpha, p) = (1, 1)``."""
    ex = _exponents(n, alpha, p)
    if ex is None:
        return SymMatrix2(0.0, 0.0, 0.0)
    gamma, Gamma = ex
    c = p - 1.0
    return SymMatrix2(c, c * (-Gamma + 0.5 * gamma), c * Gamma * (1.0 - gamma))


def _check_w(w):
    w = np.asarray(w, dtype=float)
    if np.any(w <= 0):
        raise ParameterError("w = u/v must be positive")
    return w


def f_gamma(gamma, w):
    w = _check_w(w)
    wg = w ** gamma
    return wg - 2.0 + 1.0 / wg


def g_gamma(Gamma, gamma, w):
    """``Gamma (1 - Gamma) f_1(w) - f_gamma(w)/4``; positive iff det Q(v, wv) > 0."""
    return Gamma * (1.0 - Gamma) * f_gamma(1.0, w) - 0.25 * f_gamma(gamma, w)


def F_gamma(Gamma, gamma, w):
    """``-w^3 G''_gamma(w)``."""
    w = _check_w(w)
    return (0.25 * gamma * ((gamma - 1.0) * w ** (gamma + 1.0)
                            + (gamma + 1.0) * w ** (1.0 - gamma))
            - 2.0 * Gamma * (1.0 - Gamma))


@dataclass
class PositivityReport:
    n: float
    alpha: float
    p: float
    w_min: float
    w_max: float
    steps: int
    min_scaled_eig: float
    nu: float
    nu0: float
    nu1: float
    witnesses: list = field(default_factory=list)


def log_w_grid(w_min: float, w_max: float, steps: int) -> np.ndarray:
    if not (0 < w_min <= w_max) or steps < 1:
        raise ParameterError(f"invalid scan range w in [{w_min}, {w_max}] with {steps} steps")
    if steps == 1 or w_min == w_max:
        return np.full(max(steps, 1), float(w_min))
    return np.geomspace(w_min, w_max, steps)


def q_scan_table(n, alpha, p, w) -> dict[str, np.ndarray]:
    """Columns ``w, eig_min, eig_max, q11`` of Q(1, w) over the given ``w``.

    Where ``w^gamma`` would exceed ``e^300`` the matrix is multiplied by the
    positive factor ``e^300 / w^gamma``; signs of eigenvalues are unchanged.
    """
    w = np.asarray(w, dtype=float)
    ex = _exponents(n, alpha, p)
    if ex is None:
        q = q_matrix(n, alpha, p, 1.0, w)
    else:
        _check_w(w)
        gamma, Gamma = ex
        lg = gamma * np.log(w)
        s = np.exp(-np.maximum(lg - 300.0, 0.0))
        wg_s = np.exp(np.minimum(lg, 300.0))
        c = p - 1.0
        q = SymMatrix2(c * s * (1.0 + Gamma * (w - 1.0)), -0.5 * c * (s + wg_s),
                       c * wg_s * (1.0 + Gamma * (1.0 / w - 1.0)))
    lo, hi = sym2_eigenvalues(q.a11, q.a12, q.a22)
    shape = np.shape(w)
    return {"w": np.asarray(w, dtype=float), "eig_min": np.broadcast_to(lo, shape),
            "eig_max": np.broadcast_to(hi, shape), "q11": np.broadcast_to(q.a11, shape)}


def q_positivity_scan(n, alpha, p, w_min=1e-3, w_max=1.0, steps=2000,
                      n_witnesses=3) -> PositivityReport:
    """Brute-force scan of Q(1, w) over a logarithmic grid of ``w = u/v``.

    ``Q(lam v, lam u) = lam^gamma Q(v, u)``, so fixing ``v = 1`` loses nothing.
    ``nu`` is the infimum of the smallest eigenvalue over the scanned range,
    ``nu0`` the infimum of the top-left entry over the scanned ``w <= 1`` and
    ``nu1`` the smallest eigenvalue of M.
    """
    w = log_w_grid(w_min, w_max, steps)
    tab = q_scan_table(n, alpha, p, w)
    eig = tab["eig_min"]
    order = np.argsort(eig, kind="stable")[:n_witnesses]
    below = w <= 1.0
    nu0 = float(np.min(tab["q11"][below])) if below.any() else float("nan")
    m = m_matrix(n, alpha, p)
    return PositivityReport(
        n=n, alpha=alpha, p=p, w_min=w_min, w_max=w_max, steps=steps,
        min_scaled_eig=float(eig.min()), nu=max(float(eig.min()), 0.0), nu0=nu0,
        nu1=float(m.min_eig),
        witnesses=[(float(w[i]), float(eig[i])) for i in order])


def write_scan_csv(fh: TextIO, table: dict[str, np.ndarray]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    cols = ["w", "eig_min", "eig_max", "q11"]
    writer.writerow(cols)
    for row in zip(*(table[c] for c in cols)):
        writer.writerow([repr(float(x)) for x in row])


def region_equivalence_rows(ns, samples_per_n: int, rng: np.random.Generator,
                            p_max: float = 12.0, steps: int = 2000,
                            witness_w_min: float = 1e-6):
    """Rows ``(n, alpha, p, class, min_scaled_eig, witness_w)``.

    Half of the samples per ``n`` are uniform over ``(0, 1] x (1, p_max]``
    and half are drawn inside the admissible region, so both sides of the
    equivalence are exercised.  Admissible points are scanned over
    ``[1e-3, 1]``; outside points over ``[witness_w_min, 1]``.
    """
    rows = []
    for n in ns:
        n_uniform = samples_per_n - samples_per_n // 2
        pts = [(float(1.0 - rng.uniform(0.0, 1.0)), float(rng.uniform(1.0, p_max)))
               for _ in range(n_uniform)]
        pts = [(a, p if p > 1.0 else np.nextafter(1.0, 2.0)) for a, p in pts]
        pts += interior_samples(n, samples_per_n // 2, rng, p_cap=p_max)
        for alpha, p in pts:
            cls = classify(n, (alpha, p))
            lo = 1e-3 if cls.admissible else witness_w_min
            rep = q_positivity_scan(n, alpha, p, lo, 1.0, steps, n_witnesses=1)
            rows.append((n, alpha, p, cls, rep.min_scaled_eig, rep.witnesses[0][0],
                         rep.nu1))
    return rows


def write_region_equivalence_csv(fh: TextIO, rows) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["n", "alpha", "p", "class", "min_scaled_eig", "witness_w"])
    for n, a, p, cls, eig, w, _ in rows:
        writer.writerow([repr(float(n)), repr(float(a)), repr(float(p)), str(cls),
                         repr(float(eig)), repr(float(w))])


# --------------------------------------------------------------------------
# pointwise integrands

def _dot(a, b):
    return np.sum(np.asarray(a) * np.asarray(b), axis=0)


def dissipation_e(n, alpha, p, v, u, grad_v, grad_u, check=True):
    """``|v - u|^(p-2) (grad v, grad u) Q(v, u) (grad v, grad u)^T`` for v > u > 0."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if check and (np.any(u <= 0) or np.any(v <= u)):
        raise ParameterError("dissipation_e is defined on {v > u > 0}")
    q = q_matrix(n, alpha, p, v, u)
    gv = np.asarray(grad_v, dtype=float)
    gu = np.asarray(grad_u, dtype=float)
    form = q.a11 * _dot(gv, gv) + 2.0 * q.a12 * _dot(gv, gu) + q.a22 * _dot(gu, gu)
    return np.abs(v - u) ** (p - 2.0) * form


def hessian_blocks(w, A):
    """Split ``A`` along ``b = w/|w|``: returns ``(A0, |A1|^2, |A2|^2)``.

    ``A0 = b.A.b``; since ``A b = A0 b + A1`` with ``A1`` orthogonal to
    ``b``, ``|A1|^2 = |A b|^2 - A0^2`` and the Frobenius identity gives
    ``|A2|^2 = |A|^2 - A0^2 - 2 |A1|^2``.
    """
    w = np.asarray(w, dtype=float)
    A = np.asarray(A, dtype=float)
    b = w / np.sqrt(_dot(w, w))
    Ab = np.einsum("ij...,j...->i...", A, b)
    A0 = _dot(b, Ab)
    A1sq = np.maximum(_dot(Ab, Ab) - A0 * A0, 0.0)
    A2sq = np.maximum(np.sum(A * A, axis=(0, 1)) - A0 * A0 - 2.0 * A1sq, 0.0)
    return A0, A1sq, A2sq


def dissipation_ebar(n, alpha, p, u, w, A):
    """Gradient-decay integrand for ``u > 0``, ``w = grad u != 0``, ``A = D^2 u``."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    wsq = _dot(w, w)
    if np.any(u <= 0):
        raise ParameterError("dissipation_ebar needs u > 0")
    if np.any(wsq == 0):
        raise ParameterError("dissipation_ebar is defined on {grad u != 0}")
    ex = _exponents(n, alpha, p)
    if ex is None:
        return np.zeros_like(u)
    gamma = ex[0]
    A0, A1sq, A2sq = hessian_blocks(w, A)
    mm = m_matrix(n, alpha, p)
    wp = wsq ** (0.5 * (p - 2.0))
    form = mm.quadratic(u * A0, wsq)
    return wp * u ** (gamma - 2.0) * form + wp * u ** gamma * (A2sq + p * A1sq)


def _m_form_vectors(n, alpha, p, u, w, grad_w, grad_u):
    """``(u grad w, w grad u) M (u grad w, w grad u)^T`` with vector blocks."""
    mm = m_matrix(n, alpha, p)
    x = u * np.asarray(grad_w, dtype=float)
    y = w * np.asarray(grad_u, dtype=float)
    return mm.a11 * _dot(x, x) + 2.0 * mm.a12 * _dot(x, y) + mm.a22 * _dot(y, y)


def dissipation_ebarbar(n, alpha, p, u, w, grad_w, grad_u):
    """Directional-derivative integrand for ``u > 0`` and ``w = D_xi u != 0``."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    if np.any(u <= 0):
        raise ParameterError("dissipation_ebarbar needs u > 0")
    if np.any(w == 0):
        raise ParameterError("dissipation_ebarbar is defined on {D_xi u != 0}")
    gamma = n / alpha
    return (np.abs(w) ** (p - 2.0) * u ** (gamma - 2.0)
            * _m_form_vectors(n, alpha, p, u, w, grad_w, grad_u))


def j_eta(n, alpha, p, eta, v_eta, u, grad_v_eta, grad_u):
    """``eta^-2 (grad v_eta, grad u) Q(v_eta, u) (grad v_eta, grad u)^T``."""
    if not eta > 0:
        raise ParameterError("eta must be positive")
    q = q_matrix(n, alpha, p, v_eta, u)
    gv = np.asarray(grad_v_eta, dtype=float)
    gu = np.asarray(grad_u, dtype=float)
    form = q.a11 * _dot(gv, gv) + 2.0 * q.a12 * _dot(gv, gu) + q.a22 * _dot(gu, gu)
    return form / (eta * eta)


def j_zero(n, alpha, p, u, w, grad_w, grad_u):
    """Limit of :func:`j_eta` for ``v_eta = u + eta w + o(eta)`` in C^1."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ParameterError("j_zero needs u > 0")
    gamma = n / alpha
    return u ** (gamma - 2.0) * _m_form_vectors(n, alpha, p, u, np.asarray(w, float),
                                                grad_w, grad_u)


def outside_witness(n, alpha, p, w_min=1e-6, steps=2000):
    """Smallest eigenvalue of Q(1, w) and where it occurs, for diagnostics."""
    rep = q_positivity_scan(n, alpha, p, w_min, 1.0, steps, n_witnesses=1)
    return rep.witnesses[0]


def is_admissible(n, alpha, p) -> bool:
    return classify(n, (alpha, p)) is not RegionClass.OUTSIDE
