"""Magnetic Gabor–Parseval frame: window, frame vectors, analysis and synthesis.

The frame vectors are

    G_{alpha,k}(x) = (2 pi)^{-d/2} Lambda^A(x, alpha) exp(i k.(x - alpha)) chi(x - alpha)

with alpha in Z^d and integer k labelling the dual-lattice point 2 pi k.
Their squared norm is (2 pi)^{-d} (not 1): the family is a Parseval frame,
not an orthonormal system.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .geometry import SampledField, UniformGrid, multi_indices
from .magnetics import VectorPotential, circulation, zero_potential

__all__ = [
    "Window",
    "FrameId",
    "FrameSpec",
    "FrameCoefficients",
    "TruncationWarning",
    "build_window",
    "frame_vector",
    "frame_matrix",
    "analyze",
    "synthesize",
    "parseval_defect",
    "gramian",
]


class TruncationWarning(UserWarning):
    """Raised when a vector has non-negligible mass outside the safe box."""


def _smooth_step(u: np.ndarray, a: float) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(s(u), 1 - s(u))`` for s(u) = sig(u) / (sig(u) + sig(1-u)), sig(u) = exp(-a/u)."""
    u = np.clip(u, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        s0 = np.where(u > 0, np.exp(-a / np.where(u > 0, u, 1.0)), 0.0)
        s1 = np.where(u < 1, np.exp(-a / np.where(u < 1, 1.0 - u, 1.0)), 0.0)
    tot = s0 + s1
    return s0 / tot, s1 / tot


@dataclass(frozen=True)
class Window:
    """Even window chi_0(t) = sin((pi/2)(1 - s(u))), u = (|t| - delta)/(1 - 2 delta).

    chi_0 equals 1 on [-delta, delta], vanishes for |t| >= 1 - delta and satisfies
    chi_0(t)^2 + chi_0(1 - t)^2 = 1 on [0, 1] because s(u) + s(1 - u) = 1.
    """

    delta: float = 0.01
    a: float = 1.6

    def __post_init__(self):
        if not 0 <= self.delta < 0.5:
            raise ValueError("delta must lie in [0, 1/2)")
        if self.a <= 0:
            raise ValueError("smooth-step rate must be positive")

    def chi0(self, t) -> np.ndarray:
        t = np.abs(np.asarray(t, dtype=float))
        u = (t - self.delta) / (1.0 - 2.0 * self.delta)
        _, one_minus_s = _smooth_step(u, self.a)
        out = np.sin(0.5 * np.pi * one_minus_s)
        return np.where(t < 1.0, out, 0.0)

    def __call__(self, x) -> np.ndarray:
        """d-dimensional product window; ``x`` has a trailing component axis."""
        x = np.asarray(x, dtype=float)
        return np.prod(self.chi0(x), axis=-1)

    @cached_property
    def samples(self) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(-1.0, 1.0, 4001)
        return t, self.chi0(t)


def build_window(delta: float = 0.01, a: float = 1.6) -> Window:
    return Window(delta, a)


class FrameId(NamedTuple):
    alpha: tuple
    k: tuple


@dataclass(frozen=True)
class FrameSpec:
    """Truncated frame |alpha|_inf <= N, |k|_inf <= K on a fixed grid."""

    grid: UniformGrid
    N: int
    K: int
    A: VectorPotential | None = None
    window: Window = Window()

    def __post_init__(self):
        if self.A is None:
            object.__setattr__(self, "A", zero_potential(self.grid.d))
        if self.A.d != self.grid.d:
            raise ValueError("potential and grid dimensions differ")
        if self.N < 0 or self.K < 0:
            raise ValueError("truncations must be non-negative")
        if self.grid.L < self.N + 1:
            raise ValueError(f"grid half-width L={self.grid.L} must be >= N+1={self.N + 1}")
        if not 2 * self.K < self.grid.M * np.pi / self.grid.L:
            raise ValueError(f"modulation cutoff K={self.K} not resolvable: need 2K < M pi / L")

    @property
    def d(self) -> int:
        return self.grid.d

    @cached_property
    def alphas(self) -> np.ndarray:
        return multi_indices(self.d, self.N)

    @cached_property
    def ks(self) -> np.ndarray:
        return multi_indices(self.d, self.K)

    @property
    def n_alpha(self) -> int:
        return len(self.alphas)

    @property
    def n_k(self) -> int:
        return len(self.ks)

    @property
    def n_ids(self) -> int:
        return self.n_alpha * self.n_k

    @cached_property
    def id_alpha(self) -> np.ndarray:
        """Lattice label of every flat id (alpha outer, k inner)."""
        return np.repeat(self.alphas, self.n_k, axis=0)

    @cached_property
    def id_k(self) -> np.ndarray:
        return np.tile(self.ks, (self.n_alpha, 1))

    def index(self, fid: FrameId) -> int:
        a = np.asarray(fid.alpha, dtype=np.int64).reshape(self.d)
        k = np.asarray(fid.k, dtype=np.int64).reshape(self.d)
        if np.max(np.abs(a)) > self.N or np.max(np.abs(k)) > self.K:
            raise IndexError(f"{fid} outside truncation box (N={self.N}, K={self.K})")
        w_a, w_k = 2 * self.N + 1, 2 * self.K + 1
        ia = int(np.ravel_multi_index(tuple(a + self.N), (w_a,) * self.d))
        ik = int(np.ravel_multi_index(tuple(k + self.K), (w_k,) * self.d))
        return ia * self.n_k + ik

    def frame_id(self, i: int) -> FrameId:
        return FrameId(tuple(int(v) for v in self.id_alpha[i]), tuple(int(v) for v in self.id_k[i]))

    def box(self, n_alpha: int, n_k: int) -> np.ndarray:
        """Flat indices of ids with |alpha|_inf <= n_alpha and |k|_inf <= n_k."""
        m = (np.max(np.abs(self.id_alpha), axis=1) <= n_alpha) & (
            np.max(np.abs(self.id_k), axis=1) <= n_k)
        return np.flatnonzero(m)

    def _patch(self, alpha):
        """Per-axis grid index arrays and offsets x - alpha covering the window support."""
        ax = self.grid.axis
        idx, offs = [], []
        for j in range(self.d):
            sel = np.flatnonzero(np.abs(ax - alpha[j]) < 1.0)
            idx.append(sel)
            offs.append(ax[sel] - alpha[j])
        return idx, offs

    def _patch_weight(self, alpha, idx, offs) -> np.ndarray:
        """(2pi)^{-d/2} Lambda^A(x, alpha) chi(x - alpha) on the patch."""
        ax = self.grid.axis
        mesh = np.stack(np.meshgrid(*[ax[i] for i in idx], indexing="ij"), axis=-1)
        lam = circulation(self.A, mesh, np.asarray(alpha, dtype=float))
        chi = self.window.chi0(offs[0])
        if self.d == 2:
            chi = np.multiply.outer(chi, self.window.chi0(offs[1]))
        return (2 * np.pi) ** (-self.d / 2) * lam * chi


@dataclass(frozen=True)
class FrameCoefficients:
    """Coefficients <G_id, psi>, shape ``(n_alpha, n_k)`` in canonical id order."""

    spec: FrameSpec
    values: np.ndarray

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.flat))

    def __getitem__(self, fid: FrameId) -> complex:
        return complex(self.flat[self.spec.index(fid)])

    def to_csv(self, path) -> None:
        d = self.spec.d
        names = [f"alpha{j + 1}" for j in range(d)] + [f"k{j + 1}" for j in range(d)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names + ["re", "im"])
            for a, k, c in zip(self.spec.id_alpha, self.spec.id_k, self.flat):
                w.writerow([*map(int, a), *map(int, k), f"{c.real:.17g}", f"{c.imag:.17g}"])


def frame_vector(spec: FrameSpec, fid: FrameId) -> SampledField:
    spec.index(fid)  # bounds check
    g = spec.grid
    alpha = np.asarray(fid.alpha, dtype=float)
    k = np.asarray(fid.k, dtype=float)
    x = g.points()
    t = x - alpha
    vals = ((2 * np.pi) ** (-g.d / 2) * circulation(spec.A, x, alpha)
            * np.exp(1j * (t @ k)) * spec.window(t))
    return SampledField(g, vals)


def frame_matrix(spec: FrameSpec, ids=None, max_entries: int = 2**27) -> np.ndarray:
    """Dense matrix whose columns are frame vectors (flattened grid x ids)."""
    ids = np.arange(spec.n_ids) if ids is None else np.asarray(ids)
    g = spec.grid
    if g.size * len(ids) > max_entries:
        raise MemoryError(f"frame matrix {g.size} x {len(ids)} exceeds {max_entries} entries")
    out = np.zeros(g.shape + (len(ids),), dtype=complex)
    # group by lattice point so the window and phase are built once per alpha
    ia_of = ids // spec.n_k
    for ia in np.unique(ia_of):
        cols = np.flatnonzero(ia_of == ia)
        alpha = spec.alphas[ia]
        idx, offs = spec._patch(alpha)
        base = spec._patch_weight(alpha, idx, offs)
        kk = spec.id_k[ids[cols]].astype(float)
        if g.d == 1:
            ph = np.exp(1j * np.outer(offs[0], kk[:, 0]))
            out[np.ix_(idx[0], cols)] = base[:, None] * ph
        else:
            ph = (np.exp(1j * np.multiply.outer(offs[0], kk[:, 0]))[:, None, :]
                  * np.exp(1j * np.multiply.outer(offs[1], kk[:, 1]))[None, :, :])
            out[np.ix_(idx[0], idx[1], cols)] = base[:, :, None] * ph
    return out.reshape(g.size, len(ids))


def _safe_box_mass(spec: FrameSpec, psi: np.ndarray) -> float:
    x = spec.grid.points()
    outside = np.max(np.abs(x), axis=-1) > spec.N - 1
    tot = np.sum(np.abs(psi) ** 2)
    return float(np.sum(np.abs(psi[outside]) ** 2) / tot) if tot > 0 else 0.0


def analyze(spec: FrameSpec, psi: SampledField, warn_tol: float = 1e-8) -> FrameCoefficients:
    """Coefficients <G_{alpha,k}, psi> by grid quadrature.

    Each lattice point needs a small non-uniform DFT over its window patch
    (integer k is not commensurate with the grid step), done as a dense matmul.
    """
    g = spec.grid
    v = np.asarray(psi.values).reshape(g.shape)
    if _safe_box_mass(spec, v) > warn_tol:
        warnings.warn("vector has mass outside the safe box; coefficients are truncated",
                      TruncationWarning, stacklevel=2)
    K = spec.K
    kk = np.arange(-K, K + 1, dtype=float)
    out = np.zeros((spec.n_alpha, spec.n_k), dtype=complex)
    for ia, alpha in enumerate(spec.alphas):
        idx, offs = spec._patch(alpha)
        w = np.conj(spec._patch_weight(alpha, idx, offs))
        E = [np.exp(-1j * np.outer(kk, o)) for o in offs]
        if g.d == 1:
            out[ia] = E[0] @ (w * v[idx[0]])
        else:
            patch = v[np.ix_(idx[0], idx[1])]
            out[ia] = (E[0] @ (w * patch) @ E[1].T).reshape(-1)
    return FrameCoefficients(spec, out * g.weight)


def synthesize(spec: FrameSpec, c: FrameCoefficients | np.ndarray) -> SampledField:
    """sum_id c(id) G_id over the truncation box."""
    g = spec.grid
    vals = c.values if isinstance(c, FrameCoefficients) else np.asarray(c)
    vals = vals.reshape(spec.n_alpha, spec.n_k)
    K = spec.K
    kk = np.arange(-K, K + 1, dtype=float)
    out = np.zeros(g.shape, dtype=complex)
    for ia, alpha in enumerate(spec.alphas):
        if not np.any(vals[ia]):
            continue
        idx, offs = spec._patch(alpha)
        w = spec._patch_weight(alpha, idx, offs)
        E = [np.exp(1j * np.outer(o, kk)) for o in offs]
        if g.d == 1:
            out[idx[0]] += w * (E[0] @ vals[ia])
        else:
            C = vals[ia].reshape(2 * K + 1, 2 * K + 1)
            out[np.ix_(idx[0], idx[1])] += w * (E[0] @ C @ E[1].T)
    return SampledField(g, out)


def parseval_defect(spec: FrameSpec, psi: SampledField) -> float:
    """|sum |<G, psi>|^2 - ||psi||^2| / ||psi||^2."""
    n2 = psi.norm() ** 2
    if n2 == 0:
        raise ValueError("parseval defect undefined for the zero vector")
    c = analyze(spec, psi)
    return abs(c.norm() ** 2 - n2) / n2


def gramian(spec: FrameSpec, id1: FrameId, id2: FrameId) -> complex:
    """<G_id1, G_id2> by quadrature (Hermitian in its arguments)."""
    a1 = np.asarray(id1.alpha)
    a2 = np.asarray(id2.alpha)
    spec.index(id1)
    spec.index(id2)
    if np.max(np.abs(a1 - a2)) >= 2:
        return 0j
    return frame_vector(spec, id1).inner(frame_vector(spec, id2))
