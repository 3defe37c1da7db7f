"""Grids, phase-space forms and Fourier transforms shared by every module."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

__all__ = [
    "UniformGrid",
    "PhasePoint",
    "PhaseSpaceGrid",
    "SampledField",
    "multi_indices",
    "symplectic_form",
    "double_symplectic_form",
    "symplectic_fourier",
    "double_symplectic_fourier",
    "japanese_bracket",
    "centered_dft",
]


def _check_dim(d):
    if d not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {d}")


def multi_indices(d: int, bound: int) -> np.ndarray:
    """All integer vectors of length ``d`` with sup-norm at most ``bound``.

    Rows are in lexicographic order, which is the canonical enumeration used
    for lattice and modulation labels throughout the package.
    """
    _check_dim(d)
    r = range(-bound, bound + 1)
    return np.array(list(product(r, repeat=d)), dtype=np.int64).reshape(-1, d)


@dataclass(frozen=True)
class UniformGrid:
    """Uniform grid on ``[-L, L)^d`` with ``M`` points per axis.

    Sample coordinates are ``x_i = (i - M/2) h`` with ``h = 2L/M``.
    """

    d: int
    L: float
    M: int

    def __post_init__(self):
        _check_dim(self.d)
        if int(self.M) != self.M or self.M <= 0:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if self.M % 2:
            raise ValueError(f"M must be even, got {self.M}")
        if not self.L > 0:
            raise ValueError(f"half-width L must be positive, got {self.L}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def axis(self) -> np.ndarray:
        return (np.arange(self.M) - self.M // 2) * self.h

    @property
    def shape(self) -> tuple:
        return (self.M,) * self.d

    @property
    def size(self) -> int:
        return self.M**self.d

    @property
    def weight(self) -> float:
        return self.h**self.d

    def points(self) -> np.ndarray:
        """Coordinates as an array of shape ``(M,)*d + (d,)`` (index order ij)."""
        axes = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        return np.stack(axes, axis=-1)

    def flat_points(self) -> np.ndarray:
        return self.points().reshape(-1, self.d)

    def dual(self) -> "UniformGrid":
        """The FFT-dual grid: step pi/L and the same number of points."""
        return UniformGrid(self.d, self.M * np.pi / (2.0 * self.L), self.M)


@dataclass(frozen=True)
class PhasePoint:
    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        xi = np.atleast_1d(np.asarray(self.xi, dtype=float))
        if x.shape != xi.shape or x.ndim != 1:
            raise ValueError("position and momentum must be vectors of equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(xi))):
            raise ValueError("phase point entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)

    @property
    def d(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Product of a position grid and a momentum grid.

    When built with :meth:`dual_of`, the momentum grid has step ``pi/L`` so that
    the discrete symplectic Fourier transform is an exact involution.
    """

    position: UniformGrid
    momentum: UniformGrid

    def __post_init__(self):
        if self.position.d != self.momentum.d:
            raise ValueError("position and momentum grids differ in dimension")

    @classmethod
    def dual_of(cls, grid: UniformGrid) -> "PhaseSpaceGrid":
        return cls(grid, grid.dual())

    @property
    def d(self) -> int:
        return self.position.d

    @property
    def is_fft_dual(self) -> bool:
        p, q = self.position, self.momentum
        return p.M == q.M and np.isclose(p.h * q.h * p.M, 2 * np.pi, rtol=1e-13, atol=0)

    @property
    def shape(self) -> tuple:
        return self.position.shape + self.momentum.shape

    @property
    def weight(self) -> float:
        return self.position.weight * self.momentum.weight

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Broadcastable ``(x, xi)`` arrays with trailing component axis."""
        d = self.d
        xs = self.position.points().reshape(self.position.shape + (1,) * d + (d,))
        ps = self.momentum.points().reshape((1,) * d + self.momentum.shape + (d,))
        return xs, ps

    def sample(self, f) -> "SampledField":
        x, xi = self.mesh()
        vals = np.asarray(f(x, xi), dtype=complex)
        return SampledField(self, np.broadcast_to(vals, self.shape).copy())


@dataclass(frozen=True)
class SampledField:
    """Complex samples on a :class:`UniformGrid` or :class:`PhaseSpaceGrid`."""

    grid: object
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.size != int(np.prod(self.grid.shape)):
            raise ValueError(f"expected {np.prod(self.grid.shape)} samples, got {v.size}")
        object.__setattr__(self, "values", v.reshape(self.grid.shape))

    def inner(self, other: "SampledField") -> complex:
        """Quadrature inner product, conjugate-linear in ``self``."""
        return complex(self.grid.weight * np.vdot(self.values, other.values))

    def norm(self) -> float:
        return float(np.sqrt(self.grid.weight) * np.linalg.norm(self.values.ravel()))

    def __add__(self, other):
        return SampledField(self.grid, self.values + other.values)

    def __sub__(self, other):
        return SampledField(self.grid, self.values - other.values)

    def __mul__(self, c):
        return SampledField(self.grid, self.values * c)

    __rmul__ = __mul__


def symplectic_form(X: PhasePoint, Y: PhasePoint) -> float:
    """sigma(X, Y) = xi . y - x . eta."""
    if X.d != Y.d:
        raise ValueError("dimension mismatch")
    return float(X.xi @ Y.x - X.x @ Y.xi)


def double_symplectic_form(Xb, Yb) -> float:
    (XL, XR), (YL, YR) = Xb, Yb
    return symplectic_form(XL, YL) + symplectic_form(XR, YR)


def japanese_bracket(v) -> np.ndarray | float:
    """<v> = sqrt(1 + |v|^2), taken over the last axis for arrays of vectors."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 0:
        return float(np.sqrt(1.0 + v * v))
    out = np.sqrt(1.0 + np.sum(v * v, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def centered_dft(a: np.ndarray, axes, sign: int) -> np.ndarray:
    """sum_j exp(sign * 2 pi i (k - M/2)(j - M/2) / M) a_j along ``axes``.

    All axes must have even length. No normalization is applied.
    """
    axes = tuple(np.atleast_1d(axes))
    a = np.fft.ifftshift(a, axes=axes)
    if sign < 0:
        a = np.fft.fftn(a, axes=axes)
    else:
        a = np.fft.ifftn(a, axes=axes, norm="forward")
    return np.fft.fftshift(a, axes=axes)


def _fourier_block(v: np.ndarray, d: int, offset: int) -> np.ndarray:
    # one phase-space block: axes [offset, offset+d) are positions, then momenta
    pos = tuple(range(offset, offset + d))
    mom = tuple(range(offset + d, offset + 2 * d))
    M = v.shape[offset]
    # y -> xi with e^{+i xi y}, eta -> x with e^{-i x eta}
    w = centered_dft(v, pos, +1)
    w = centered_dft(w, mom, -1)
    # output position axes come from the momentum slots and vice versa
    perm = list(range(v.ndim))
    perm[offset:offset + 2 * d] = list(mom) + list(pos)
    return np.transpose(w, perm) / float(M) ** d


def symplectic_fourier(f: SampledField) -> SampledField:
    """(F_sigma f)(X) = (2 pi)^{-d} int dY exp(i sigma(X, Y)) f(Y) on the grid.

    On an FFT-dual grid the discrete transform equals its own inverse exactly.
    """
    g = f.grid
    if not isinstance(g, PhaseSpaceGrid) or not g.is_fft_dual:
        raise ValueError("symplectic Fourier transform needs an FFT-dual phase-space grid")
    return SampledField(g, _fourier_block(f.values, g.d, 0))


def double_symplectic_fourier(F: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """F_Sigma on samples over ``grid x grid`` (axes: X_L block, then X_R block)."""
    if not grid.is_fft_dual:
        raise ValueError("double symplectic Fourier transform needs an FFT-dual grid")
    F = np.asarray(F, dtype=complex)
    if F.shape != grid.shape * 2:
        raise ValueError(f"expected samples of shape {grid.shape * 2}, got {F.shape}")
    d = grid.d
    return _fourier_block(_fourier_block(F, d, 0), d, 2 * d)
