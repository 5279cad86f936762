"""Admissible exponent region for the |U^alpha - V^alpha|^p contraction family.

For ``0 < |n| < 1`` the region is bounded by the two curves

    P_pm(alpha) = 1 + (2/n^2) (1 - alpha) (alpha pm sqrt(alpha^2 - n^2)),

with ``alpha`` in ``[|n|, 1]``.  For ``n = 0`` it degenerates to
``{alpha in (0, 1], alpha * p >= 1}``.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

DEFAULT_TOL = 1e-9


class ParameterError(ValueError):
    """Input outside the range where the contraction theory applies."""


@dataclass(frozen=True)
class DiffusionParams:
    """Exponent ``m`` of ``m U_t = Lap U^m`` and the space dimension."""

    m: float
    d: int = 1

    def __post_init__(self):
        if not (self.m > 0 and math.isfinite(self.m)):
            raise ParameterError(f"m must be positive, got {self.m}")
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"dimension must be an integer >= 1, got {self.d}")

    @property
    def n(self) -> float:
        return self.m - 1.0

    @property
    def m_c(self) -> float:
        return max(0.0, (self.d - 2) / self.d)

    def require_contraction_range(self) -> None:
        check_n(self.n)


@dataclass(frozen=True)
class ExponentPair:
    alpha: float
    p: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not self.p >= 1.0:
            raise ParameterError(f"p must be >= 1, got {self.p}")

    def __iter__(self):
        yield self.alpha
        yield self.p


@dataclass(frozen=True)
class DerivedExponents:
    """Exponents attached to ``(n, alpha, p)``.

    ``Gamma`` is ``None`` for ``p = 1`` where ``(1 - alpha)/(alpha (p - 1))``
    is undefined; the only admissible such pair is ``(1, 1)``.
    """

    gamma: float
    gamma_bar: float
    Gamma: float | None
    Gamma_minus: float
    Gamma_plus: float

    @property
    def Gamma_defined(self) -> bool:
        return self.Gamma is not None


class RegionClass(str, enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"

    def __str__(self):
        return self.value

    @property
    def admissible(self) -> bool:
        return self is not RegionClass.OUTSIDE


def check_n(n: float) -> None:
    if not (-1.0 < n < 1.0):
        raise ParameterError(f"|n| < 1 required (m in (0, 2)), got n={n}")


def _as_pair(pair) -> tuple[float, float]:
    alpha, p = pair
    return float(alpha), float(p)


def p_bounds(n: float, alpha: float) -> tuple[float, float]:
    """Return ``(P_minus(alpha), P_plus(alpha))`` for ``0 < |n| < 1``."""
    check_n(n)
    if n == 0.0:
        raise ParameterError("p_bounds is undefined for n = 0; use classify (alpha p >= 1)")
    a = abs(n)
    if alpha < a or alpha > 1.0:
        raise ParameterError(f"alpha must lie in [|n|, 1] = [{a}, 1], got {alpha}")
    s = _root_gap(n, alpha)
    # alpha - s = n^2/(alpha + s) avoids cancellation for small |n|
    p_minus = 1.0 + 2.0 * (1.0 - alpha) / (alpha + s)
    p_plus = 1.0 + 2.0 / (n * n) * (1.0 - alpha) * (alpha + s)
    return p_minus, p_plus


def _root_gap(n: float, alpha: float) -> float:
    """``sqrt(alpha^2 - n^2)``; the factored form is exact near ``alpha = |n|``."""
    a = abs(n)
    return math.sqrt(max((alpha - a) * (alpha + a), 0.0))


def gamma_roots(gamma: float) -> tuple[float, float]:
    """Roots ``(1 -+ sqrt(1 - gamma^2))/2`` delimiting positivity in Gamma."""
    g = abs(gamma)
    s = math.sqrt(max((1.0 - g) * (1.0 + g), 0.0))
    return 0.5 * (1.0 - s), 0.5 * (1.0 + s)


def derived_exponents(n: float, pair) -> DerivedExponents:
    alpha, p = _as_pair(pair)
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    gamma = n / alpha
    gamma_bar = gamma - 1.0 + 1.0 / alpha
    Gamma = None if p == 1.0 else (1.0 - alpha) / (alpha * (p - 1.0))
    g_minus, g_plus = gamma_roots(gamma)
    return DerivedExponents(gamma, gamma_bar, Gamma, g_minus, g_plus)


def classify(n: float, pair, tol: float = DEFAULT_TOL) -> RegionClass:
    """Classify ``(alpha, p)`` relative to the admissible set.

    ``tol`` is an absolute distance in ``p`` to the curves ``P_pm`` and in
    ``alpha`` to ``|n|`` and to 1.  The column ``alpha = 1`` is never
    interior: the fibre collapses to ``p = 1`` for ``n != 0`` and, for
    ``n = 0``, it is the edge of the parameter domain where the gradient
    matrix becomes singular.
    """
    check_n(n)
    if not tol > 0:
        raise ParameterError("tol must be positive")
    alpha, p = _as_pair(pair)
    if not (0.0 < alpha <= 1.0) or p < 1.0:
        return RegionClass.OUTSIDE

    if n == 0.0:
        s = alpha * p - 1.0
        if s < -tol:
            return RegionClass.OUTSIDE
        if s > tol and alpha < 1.0 - tol:
            return RegionClass.INTERIOR
        return RegionClass.BOUNDARY

    a = abs(n)
    if alpha < a - tol:
        return RegionClass.OUTSIDE
    p_minus, p_plus = p_bounds(n, min(max(alpha, a), 1.0))
    if p < p_minus - tol or p > p_plus + tol:
        return RegionClass.OUTSIDE
    if alpha <= a + tol or alpha >= 1.0 - tol:
        return RegionClass.BOUNDARY
    if p_minus + tol < p < p_plus - tol:
        return RegionClass.INTERIOR
    return RegionClass.BOUNDARY


def boundary_gamma_identity(n: float, alpha: float) -> tuple[float, float]:
    """Residuals ``Gamma(alpha, P_-) - Gamma_+`` and ``Gamma(alpha, P_+) - Gamma_-``.

    On the lower curve ``Gamma`` equals the larger root and on the upper
    curve the smaller one, so both residuals vanish up to rounding.
    """
    check_n(n)
    if not (abs(n) <= alpha < 1.0):
        raise ParameterError(f"alpha must lie in [|n|, 1), got {alpha}")
    p_minus, p_plus = p_bounds(n, alpha)
    # sqrt(1 - gamma^2) = sqrt(alpha^2 - n^2) / alpha, formed without cancellation
    r = _root_gap(n, alpha) / alpha
    g_minus, g_plus = 0.5 * (1.0 - r), 0.5 * (1.0 + r)
    gam_at_minus = (1.0 - alpha) / (alpha * (p_minus - 1.0))
    gam_at_plus = (1.0 - alpha) / (alpha * (p_plus - 1.0))
    return gam_at_minus - g_plus, gam_at_plus - g_minus


@dataclass
class RegionGrid:
    n: float
    alphas: np.ndarray
    ps: np.ndarray
    classes: list  # row-major: classes[i][j] for (alphas[i], ps[j])

    def rows(self) -> Iterable[tuple[float, float, RegionClass]]:
        for i, a in enumerate(self.alphas):
            for j, p in enumerate(self.ps):
                yield float(a), float(p), self.classes[i][j]

    def write_csv(self, fh: TextIO) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["alpha", "p", "class"])
        for a, p, c in self.rows():
            writer.writerow([repr(a), repr(p), c.value])


def sample_region(n: float, alpha_steps: int, p_max: float, p_steps: int,
                  tol: float = DEFAULT_TOL) -> RegionGrid:
    """Classification grid over ``alpha = k/alpha_steps`` and ``p`` in ``[1, p_max]``."""
    check_n(n)
    if alpha_steps < 2 or p_steps < 2:
        raise ParameterError("need at least two steps per axis")
    if p_max <= 1.0:
        raise ParameterError("p_max must exceed 1")
    alphas = np.arange(1, alpha_steps + 1) / alpha_steps
    ps = np.linspace(1.0, p_max, p_steps)
    classes = [[classify(n, (a, p), tol) for p in ps] for a in alphas]
    return RegionGrid(n, alphas, ps, classes)


def interior_samples(n: float, count: int, rng: np.random.Generator,
                     p_cap: float = 12.0, margin: float = 1e-3) -> list[tuple[float, float]]:
    """Random ``(alpha, p)`` strictly inside the region (p capped for n = 0)."""
    check_n(n)
    out = []
    while len(out) < count:
        if n == 0.0:
            alpha = rng.uniform(margin, 1.0 - margin)
            lo, hi = 1.0 / alpha, p_cap
        else:
            alpha = rng.uniform(abs(n), 1.0)
            lo, hi = p_bounds(n, alpha)
            hi = min(hi, p_cap)
        if hi - lo <= 2 * margin:
            continue
        p = rng.uniform(lo + margin * (hi - lo), hi - margin * (hi - lo))
        if classify(n, (alpha, p)) is RegionClass.INTERIOR:
            out.append((alpha, p))
    return out
