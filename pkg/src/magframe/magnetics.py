"""Polynomial vector potentials, magnetic fields and line-integral phases."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

__all__ = [
    "Polynomial",
    "VectorPotential",
    "MagneticField",
    "grlex_exponents",
    "field_from_potential",
    "circulation",
    "gauge_shift",
    "zero_potential",
    "constant_potential",
    "symmetric_gauge",
]

MAX_DEGREE = 8


def grlex_exponents(d: int, degree: int) -> list[tuple[int, ...]]:
    """Monomial exponents of total degree <= ``degree`` in graded lexicographic order.

    Within one total degree, larger powers of earlier variables come first,
    e.g. for d = 2: 1, x1, x2, x1^2, x1 x2, x2^2, ...
    """
    out = []
    for deg in range(degree + 1):
        exps = [e for e in product(range(deg + 1), repeat=d) if sum(e) == deg]
        out.extend(sorted(exps, reverse=True))
    return out


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in ``d`` variables stored as ``{exponent tuple: coefficient}``."""

    d: int
    terms: tuple

    @classmethod
    def from_dict(cls, d: int, coeffs: dict) -> "Polynomial":
        clean = {}
        for e, c in coeffs.items():
            e = tuple(int(v) for v in e)
            if len(e) != d or min(e) < 0:
                raise ValueError(f"bad exponent {e} for d={d}")
            if c != 0:
                clean[e] = clean.get(e, 0.0) + float(c)
        return cls(d, tuple(sorted(clean.items())))

    @classmethod
    def from_grlex(cls, d: int, coeffs) -> "Polynomial":
        """Build from a coefficient list in graded lexicographic monomial order."""
        coeffs = [float(c) for c in coeffs]
        deg = 0
        while len(grlex_exponents(d, deg)) < len(coeffs):
            deg += 1
            if deg > MAX_DEGREE + 1:
                raise ValueError("too many coefficients")
        exps = grlex_exponents(d, deg)
        return cls.from_dict(d, dict(zip(exps, coeffs)))

    @classmethod
    def zero(cls, d: int) -> "Polynomial":
        return cls(d, ())

    def to_grlex(self) -> list[float]:
        exps = grlex_exponents(self.d, self.degree)
        lookup = dict(self.terms)
        return [lookup.get(e, 0.0) for e in exps]

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for e, c in self.terms:
            mono = np.ones(x.shape[:-1])
            for j, p in enumerate(e):
                if p:
                    mono = mono * x[..., j] ** p
            out = out + c * mono
        return out

    def derivative(self, j: int) -> "Polynomial":
        new = {}
        for e, c in self.terms:
            if e[j] > 0:
                e2 = list(e)
                e2[j] -= 1
                new[tuple(e2)] = new.get(tuple(e2), 0.0) + c * e[j]
        return Polynomial.from_dict(self.d, new)

    def gradient(self) -> tuple["Polynomial", ...]:
        return tuple(self.derivative(j) for j in range(self.d))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        new = dict(self.terms)
        for e, c in other.terms:
            new[e] = new.get(e, 0.0) + c
        return Polynomial.from_dict(self.d, new)

    def __neg__(self) -> "Polynomial":
        return Polynomial.from_dict(self.d, {e: -c for e, c in self.terms})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def is_zero(self) -> bool:
        return len(self.terms) == 0


@dataclass(frozen=True)
class VectorPotential:
    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        d = len(comps)
        if d not in (1, 2) or any(p.d != d for p in comps):
            raise ValueError("vector potential needs d polynomial components in d variables")
        if max(p.degree for p in comps) > MAX_DEGREE:
            raise ValueError(f"potential degree exceeds {MAX_DEGREE}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_grlex(cls, coeff_lists) -> "VectorPotential":
        d = len(coeff_lists)
        return cls(tuple(Polynomial.from_grlex(d, c) for c in coeff_lists))

    @property
    def d(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.components)

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.components)

    def __call__(self, x) -> np.ndarray:
        return np.stack([p(x) for p in self.components], axis=-1)


@dataclass(frozen=True)
class MagneticField:
    """Antisymmetric matrix of polynomials ``B[j][k] = d_j A_k - d_k A_j``."""

    components: tuple

    @property
    def d(self) -> int:
        return len(self.components)

    def __call__(self, x) -> np.ndarray:
        d = self.d
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (d, d))
        for j in range(d):
            for k in range(d):
                out[..., j, k] = self.components[j][k](x)
        return out

    def is_zero(self) -> bool:
        return all(p.is_zero() for row in self.components for p in row)


def field_from_potential(A: VectorPotential) -> MagneticField:
    d = A.d
    rows = []
    for j in range(d):
        rows.append(tuple(
            A.components[k].derivative(j) - A.components[j].derivative(k) for k in range(d)
        ))
    return MagneticField(tuple(rows))


def _gauss_nodes(degree: int):
    n = (degree + 1 + 1) // 2 + 1
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * w


def circulation_phase(A: VectorPotential, x, y) -> np.ndarray:
    """int_0^1 A(x + s(y - x)) . (y - x) ds, exact for polynomial A."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if A.is_zero():
        return np.zeros(np.broadcast_shapes(x.shape, y.shape)[:-1])
    s, w = _gauss_nodes(A.degree)
    dx = y - x
    acc = 0.0
    for sk, wk in zip(s, w):
        acc = acc + wk * np.sum(A(x + sk * dx) * dx, axis=-1)
    return acc


def circulation(A: VectorPotential, x, y) -> np.ndarray:
    """Lambda^A(x, y) = exp(-i int_[x,y] A), broadcasting over leading axes."""
    return np.exp(-1j * circulation_phase(A, x, y))


def gauge_shift(A: VectorPotential, phi: Polynomial) -> VectorPotential:
    if phi.d != A.d:
        raise ValueError("gauge function dimension mismatch")
    grad = phi.gradient()
    return VectorPotential(tuple(a + g for a, g in zip(A.components, grad)))


def zero_potential(d: int) -> VectorPotential:
    return VectorPotential(tuple(Polynomial.zero(d) for _ in range(d)))


def constant_potential(a) -> VectorPotential:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    d = a.shape[0]
    return VectorPotential(tuple(Polynomial.from_dict(d, {(0,) * d: c}) for c in a))


def symmetric_gauge(b: float) -> VectorPotential:
    """A = (-b x2 / 2, b x1 / 2), constant field B12 = b."""
    return VectorPotential((
        Polynomial.from_dict(2, {(0, 1): -b / 2}),
        Polynomial.from_dict(2, {(1, 0): b / 2}),
    ))
