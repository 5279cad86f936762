"""Periodic torus grids in one and two dimensions with centered stencils."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .admissible import ParameterError


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid on ``[0, L)^d`` with nodes ``x_i = i h``, ``h = L/N``."""

    d: int
    N: int
    L: float = 2.0 * np.pi

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ParameterError(f"only d = 1 or 2 is supported, got {self.d}")
        if int(self.N) != self.N or self.N < 8:
            raise ParameterError(f"need N >= 8 cells per dimension, got {self.N}")
        if not self.L > 0:
            raise ParameterError(f"period must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return self.L / self.N

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    @property
    def size(self) -> int:
        return self.N ** self.d

    def axis(self) -> np.ndarray:
        return np.arange(self.N) * self.h

    def coords(self) -> tuple[np.ndarray, ...]:
        """Node coordinates, one array of shape ``self.shape`` per dimension."""
        x = self.axis()
        if self.d == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def field(self, values) -> "ScalarField":
        return ScalarField(self, np.asarray(values, dtype=float))


@dataclass(frozen=True)
class ScalarField:
    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            raise ParameterError(f"values of shape {vals.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ParameterError("field values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def nonnegative(self) -> bool:
        return bool(np.all(self.values >= 0))

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def gradient(self) -> np.ndarray:
        return gradient(self)

    def laplacian(self) -> "ScalarField":
        return laplacian(self)

    def hessian(self) -> np.ndarray:
        return hessian(self)

    def shift(self, offset) -> "ScalarField":
        return shift(self, offset)


def _values(f) -> tuple[np.ndarray, float]:
    if isinstance(f, ScalarField):
        return f.values, f.grid.h
    raise TypeError("expected a ScalarField")


def _centered(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(a, -1, axis) - np.roll(a, 1, axis)) / (2.0 * h)


def _second(a: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(a, 1, axis) - 2.0 * a + np.roll(a, -1, axis)) / (h * h)


def gradient(f: ScalarField) -> np.ndarray:
    """Centered differences, shape ``(d, *grid.shape)``."""
    a, h = _values(f)
    return np.stack([_centered(a, k, h) for k in range(a.ndim)])


def laplacian(f: ScalarField) -> ScalarField:
    a, h = _values(f)
    out = _second(a, 0, h)
    for k in range(1, a.ndim):
        out = out + _second(a, k, h)
    return ScalarField(f.grid, out)


def hessian(f: ScalarField) -> np.ndarray:
    """Shape ``(d, d, *grid.shape)``; the trace equals :func:`laplacian` exactly."""
    a, h = _values(f)
    d = a.ndim
    out = np.empty((d, d) + a.shape)
    for k in range(d):
        out[k, k] = _second(a, k, h)
    if d == 2:
        mixed = (np.roll(a, (-1, -1), (0, 1)) - np.roll(a, (-1, 1), (0, 1))
                 - np.roll(a, (1, -1), (0, 1)) + np.roll(a, (1, 1), (0, 1))) / (4.0 * h * h)
        out[0, 1] = mixed
        out[1, 0] = mixed
    return out


def integrate_lp(f, p: float = 1.0, mask=None) -> float:
    """Midpoint rule for the integral of ``|f|^p`` over the masked cells."""
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    a, _ = _values(f)
    vals = np.abs(a) if p == 1 else np.abs(a) ** p
    if mask is not None:
        vals = np.where(mask, vals, 0.0)
    return float(f.grid.cell_volume * np.sum(vals))


def integrate(f, mask=None) -> float:
    """Midpoint rule for the signed integral."""
    a, _ = _values(f)
    if mask is not None:
        a = np.where(mask, a, 0.0)
    return float(f.grid.cell_volume * np.sum(a))


def shift(f: ScalarField, offset) -> ScalarField:
    """``g(x) = f(x + offset h)`` for an integer lattice ``offset``."""
    a, _ = _values(f)
    off = np.atleast_1d(np.asarray(offset))
    if off.shape != (a.ndim,):
        raise ParameterError(f"offset must have {a.ndim} components, got {off.shape}")
    if not np.all(np.equal(np.mod(off, 1), 0)):
        raise ParameterError("only integer lattice offsets are supported")
    off = tuple(int(-k) for k in off)
    return ScalarField(f.grid, np.roll(a, off, axis=tuple(range(a.ndim))))
