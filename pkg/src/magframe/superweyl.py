"""Double symbols, super quantization and the products built on it.

A super operator Op^A(F) acts on operators g.  For F = f_L (x) f_R it acts as
g -> op^A(f_L) g op^A(f_R); general F are reduced to that case through a
finite Schmidt decomposition F = sum_j sigma_j f_{L,j} (x) f_{R,j}.
"""
from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import qr

from .frame import FrameSpec, frame_matrix
from .geometry import PhasePoint, PhaseSpaceGrid, SampledField, UniformGrid, double_symplectic_fourier
from .magnetics import VectorPotential
from .matrixrep import SuperMatrixElements
from .weyl import OperatorMatrix, Symbol, dequantize, op_compose, quantize, weyl_system_apply, wigner_grid

__all__ = [
    "DoubleSymbol",
    "SchmidtDecomposition",
    "SchmidtRankError",
    "schmidt_decompose",
    "super_apply",
    "liouville_symbol",
    "gaussian_bump",
    "tapered_trig_symbol",
    "tapered_trig_double",
    "product_symbol",
    "constant_double",
    "semi_super_product",
    "super_product",
    "super_matrix_elements",
    "superop_matrix_element_direct",
    "default_norm_grid",
]


class SchmidtRankError(RuntimeError):
    pass


@dataclass(frozen=True)
class DoubleSymbol:
    """F(X_L, X_R), given by an evaluator and/or explicit product terms.

    ``terms`` is a tuple of ``(coef, f_L, f_R)`` with F = sum coef f_L (x) f_R.
    ``orders`` is ``(m_L, m_R)``; a single order m is stored as ``(m, m)``.
    """

    func: Callable | None = None
    terms: tuple = ()
    orders: tuple = (0.0, 0.0)
    name: str = ""
    d: int = 1
    schmidt: "SchmidtDecomposition | None" = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.func is None and not self.terms and self.schmidt is None:
            raise ValueError("double symbol needs an evaluator, terms or a decomposition")

    def __call__(self, xL, xiL, xR, xiR) -> np.ndarray:
        if self.func is not None:
            return np.asarray(self.func(xL, xiL, xR, xiR), dtype=complex)
        if self.terms:
            out = 0
            for c, fl, fr in self.terms:
                out = out + c * fl(xL, xiL) * fr(xR, xiR)
            return out
        return self.schmidt.evaluate(xL, xiL, xR, xiR)

    @property
    def max_order(self) -> float:
        return max(self.orders)

    def to_binary(self, path, grid: PhaseSpaceGrid) -> None:
        """Samples on grid x grid with a two-block header (left block, right block)."""
        vals = sample_double(self, grid)
        _write_double(path, grid, vals)

    @classmethod
    def from_binary(cls, path, name: str = "imported") -> "DoubleSymbol":
        grid, vals = read_double_samples(path)
        dec = _svd_of_samples(grid, vals)
        return cls(terms=(), orders=(0.0, 0.0), name=name, d=grid.d, schmidt=dec)


def _grid_block(grid: PhaseSpaceGrid) -> dict:
    return {"d": grid.d, "L": grid.position.L, "M": grid.position.M,
            "momentum_L": grid.momentum.L, "momentum_M": grid.momentum.M}


def _write_double(path, grid: PhaseSpaceGrid, vals: np.ndarray) -> None:
    blocks = [dict(_grid_block(grid), side="left"), dict(_grid_block(grid), side="right")]
    raw = [json.dumps(b, sort_keys=True).encode() for b in blocks]
    flat = np.asarray(vals, dtype=np.complex128).reshape(-1)
    inter = np.empty(2 * flat.size, dtype="<f8")
    inter[0::2], inter[1::2] = flat.real, flat.imag
    with open(path, "wb") as fh:
        for r in raw:
            fh.write(struct.pack("<Q", len(r)))
            fh.write(r)
        fh.write(inter.tobytes())


def read_double_samples(path) -> tuple[PhaseSpaceGrid, np.ndarray]:
    with open(path, "rb") as fh:
        blocks = []
        for _ in range(2):
            (n,) = struct.unpack("<Q", fh.read(8))
            blocks.append(json.loads(fh.read(n).decode()))
        inter = np.frombuffer(fh.read(), dtype="<f8")
    left, right = blocks
    if {k: v for k, v in left.items() if k != "side"} != {k: v for k, v in right.items() if k != "side"}:
        raise ValueError("left and right header blocks describe different grids")
    d = int(left["d"])
    grid = PhaseSpaceGrid(UniformGrid(d, float(left["L"]), int(left["M"])),
                          UniformGrid(d, float(left["momentum_L"]), int(left["momentum_M"])))
    vals = inter[0::2] + 1j * inter[1::2]
    if vals.size != int(np.prod(grid.shape)) ** 2:
        raise ValueError("payload size does not match the header")
    return grid, vals.reshape(grid.shape * 2)


def sample_double(F: DoubleSymbol, grid: PhaseSpaceGrid) -> np.ndarray:
    """F on grid x grid; axes are (X_L block, X_R block)."""
    d = grid.d
    x, xi = grid.mesh()
    n = 2 * d
    pad = (1,) * n
    xL = x.reshape(x.shape[:-1] + pad + (d,))
    xiL = xi.reshape(xi.shape[:-1] + pad + (d,))
    xR = x.reshape(pad + x.shape[:-1] + (d,))
    xiR = xi.reshape(pad + xi.shape[:-1] + (d,))
    return np.broadcast_to(F(xL, xiL, xR, xiR), grid.shape * 2).astype(complex)


@dataclass
class SchmidtDecomposition:
    """F = sum_j sigma_j f_{L,j} (x) f_{R,j} with f_{L,j} = sum_i CL[i, j] left[i].

    Factors are orthonormal in the grid L^2 norm of ``grid``. Quantized basis
    operators are cached per (potential, kernel grid).
    """

    sigma: np.ndarray
    left: list
    right: list
    CL: np.ndarray
    CR: np.ndarray
    grid: PhaseSpaceGrid
    tail: float = 0.0
    _ops: dict = field(default_factory=dict, repr=False)

    @property
    def rank(self) -> int:
        return len(self.sigma)

    def left_symbol(self, j: int) -> Symbol:
        return Symbol.combination(self.CL[:, j], self.left)

    def right_symbol(self, j: int) -> Symbol:
        return Symbol.combination(self.CR[:, j], self.right)

    def evaluate(self, xL, xiL, xR, xiR) -> np.ndarray:
        L = [b(xL, xiL) for b in self.left]
        R = [b(xR, xiR) for b in self.right]
        out = 0
        for j, s in enumerate(self.sigma):
            fl = sum(c * v for c, v in zip(self.CL[:, j], L))
            fr = sum(c * v for c, v in zip(self.CR[:, j], R))
            out = out + s * fl * fr
        return np.asarray(out, dtype=complex)

    def _basis_ops(self, A: VectorPotential, grid: UniformGrid):
        key = (A, grid)
        if key not in self._ops:
            opsL = [quantize(A, b, grid).kernel for b in self.left]
            opsR = opsL if self.right is self.left else [quantize(A, b, grid).kernel for b in self.right]
            self._ops[key] = (opsL, opsR)
        return self._ops[key]

    def quantized_factors(self, A: VectorPotential, grid: UniformGrid):
        """Lists of op^A(f_{L,j}) and op^A(f_{R,j})."""
        opsL, opsR = self._basis_ops(A, grid)
        L = [OperatorMatrix(grid, sum(c * k for c, k in zip(self.CL[:, j], opsL)))
             for j in range(self.rank)]
        R = [OperatorMatrix(grid, sum(c * k for c, k in zip(self.CR[:, j], opsR)))
             for j in range(self.rank)]
        return L, R


def default_norm_grid(d: int) -> PhaseSpaceGrid:
    """Coarse FFT-dual grid used for Schmidt norms and skeleton sampling."""
    return PhaseSpaceGrid.dual_of(UniformGrid(d, 6.0, 24 if d == 1 else 8))


def _orthonormal_core(Abasis: np.ndarray, Bbasis: np.ndarray, C: np.ndarray, w: float):
    """Orthonormalize sampled bases (columns) and return the SVD of the coupled core."""
    sw = np.sqrt(w)
    Ua, Sa, VaH = np.linalg.svd(sw * Abasis, full_matrices=False)
    Ub, Sb, VbH = np.linalg.svd(sw * Bbasis, full_matrices=False)
    ka = Sa > 1e-13 * max(Sa.max(initial=0), 1e-300)
    kb = Sb > 1e-13 * max(Sb.max(initial=0), 1e-300)
    Ua, Sa, VaH = Ua[:, ka], Sa[ka], VaH[ka]
    Ub, Sb, VbH = Ub[:, kb], Sb[kb], VbH[kb]
    core = (Sa[:, None] * VaH) @ C @ (VbH.conj().T * Sb[None, :]).conj()
    U, s, VH = np.linalg.svd(core, full_matrices=False)
    CL = VaH.conj().T @ (U / Sa[:, None])
    CR = VbH.conj().T @ (VH.T / Sb[:, None])
    return s, CL, CR


def _truncate(s: np.ndarray, tol: float, cap: int) -> tuple[int, float]:
    tot = np.sqrt(np.sum(s**2))
    if tot == 0:
        return 0, 0.0
    tails = np.sqrt(np.maximum(np.cumsum((s**2)[::-1])[::-1], 0)) / tot
    tails = np.append(tails, 0.0)
    r = int(np.argmax(tails <= tol))
    if r > cap:
        raise SchmidtRankError(f"Schmidt rank {r} exceeds cap {cap}; tail mass at cap "
                               f"{tails[cap]:.3e} > tolerance {tol:.1e}")
    return r, float(tails[r])


def _svd_of_samples(grid: PhaseSpaceGrid, vals: np.ndarray, tol: float = 1e-12,
                    rank_cap: int = 64) -> SchmidtDecomposition:
    """Plain SVD of matricized samples; factors become sampled symbols."""
    n = int(np.prod(grid.shape))
    S = vals.reshape(n, n)
    w = grid.weight
    U, s, VH = np.linalg.svd(w * S, full_matrices=False)
    r, tail = _truncate(s, tol, rank_cap)
    left = [Symbol.from_samples(SampledField(grid, U[:, j] / np.sqrt(w))) for j in range(r)]
    right = [Symbol.from_samples(SampledField(grid, VH[j] / np.sqrt(w))) for j in range(r)]
    return SchmidtDecomposition(s[:r], left, right, np.eye(r, dtype=complex),
                                np.eye(r, dtype=complex), grid, tail)


def schmidt_decompose(F: DoubleSymbol, tol: float = 1e-12, grid: PhaseSpaceGrid | None = None,
                      rank_cap: int = 64) -> SchmidtDecomposition:
    """Finite product decomposition of ``F`` with relative tail <= ``tol``.

    Explicit terms are orthonormalized exactly; otherwise F is sampled on a coarse
    grid, its numerical rank found by SVD, and a skeleton (cross) approximation
    F(x, Y_J) U F(X_I, y) supplies exact evaluator factors.
    """
    if F.schmidt is not None:
        return F.schmidt
    grid = default_norm_grid(F.d) if grid is None else grid
    x, xi = grid.mesh()
    w = grid.weight
    if F.terms:
        left = [t[1] for t in F.terms]
        right = [t[2] for t in F.terms]
        C = np.diag([complex(t[0]) for t in F.terms])
    else:
        S = sample_double(F, grid).reshape(int(np.prod(grid.shape)), -1)
        Y, Z = _sketch(S, rank_cap)
        s = np.linalg.svd(w * Y, compute_uv=False)
        r, _ = _truncate(s, tol, rank_cap)
        if r == 0:
            return SchmidtDecomposition(np.zeros(0), [], [], np.zeros((0, 0)), np.zeros((0, 0)), grid)
        _, _, pc = qr(Z, pivoting=True, mode="economic")
        _, _, pr = qr(Y.T, pivoting=True, mode="economic")
        J, I = pc[:r], pr[:r]
        flat_x = np.broadcast_to(x, grid.shape + (grid.d,)).reshape(-1, grid.d)
        flat_xi = np.broadcast_to(xi, grid.shape + (grid.d,)).reshape(-1, grid.d)
        left = [_fix_right(F, flat_x[j], flat_xi[j]) for j in J]
        right = [_fix_left(F, flat_x[i], flat_xi[i]) for i in I]
        C = np.linalg.pinv(S[np.ix_(I, J)], rcond=1e-13)
    Abas = np.stack([np.broadcast_to(b(x, xi), grid.shape).reshape(-1) for b in left], axis=1)
    Bbas = np.stack([np.broadcast_to(b(x, xi), grid.shape).reshape(-1) for b in right], axis=1)
    s, CL, CR = _orthonormal_core(Abas, Bbas, C, w)
    r, tail = _truncate(s, tol, rank_cap)
    dec = SchmidtDecomposition(s[:r], left, right, CL[:, :r], CR[:, :r], grid, tail)
    if not F.terms:
        ref = sample_double(F, grid)
        err = np.linalg.norm(sample_double(DoubleSymbol(schmidt=dec, d=F.d), grid) - ref)
        if err > max(tol, 1e-10) * max(np.linalg.norm(ref), 1e-300) * 10:
            warnings.warn(f"skeleton reconstruction error {err:.2e} exceeds tolerance", stacklevel=2)
    return dec


def _sketch(S: np.ndarray, rank_cap: int, seed: int = 0):
    """Range sketches S @ O1 and O2^T @ S (exact copies when S is small)."""
    n, m = S.shape
    p = rank_cap + 16
    if min(n, m) <= 2 * p:
        return S, S
    rng = np.random.default_rng(seed)
    Y = S @ rng.standard_normal((m, p))
    Z = rng.standard_normal((p, n)) @ S
    return Y, Z


def _fix_right(F, y, eta) -> Symbol:
    return Symbol(lambda x, xi: F(x, xi, y, eta), name="F(., Y)")


def _fix_left(F, y, eta) -> Symbol:
    return Symbol(lambda x, xi: F(y, eta, x, xi), name="F(X, .)")


def super_apply(A: VectorPotential, F, g: OperatorMatrix) -> OperatorMatrix:
    """Op^A(F) g = sum_j sigma_j op^A(f_{L,j}) g op^A(f_{R,j})."""
    dec = F if isinstance(F, SchmidtDecomposition) else schmidt_decompose(F)
    out = np.zeros_like(g.kernel)
    if dec.rank == 0:
        return OperatorMatrix(g.grid, out)
    Ls, Rs = dec.quantized_factors(A, g.grid)
    for s, opL, opR in zip(dec.sigma, Ls, Rs):
        out += s * op_compose(op_compose(opL, g), opR).kernel
    return OperatorMatrix(g.grid, out)


# ---- built-in symbol families -------------------------------------------------

def gaussian_bump(d: int, x0=0.0, xi0=0.0, width: float = 1.0, mwidth: float | None = None,
                  amp: complex = 1.0) -> Symbol:
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (d,))
    xi0 = np.broadcast_to(np.asarray(xi0, dtype=float), (d,))
    mw = width if mwidth is None else mwidth

    def f(x, xi):
        return amp * np.exp(-np.sum((x - x0) ** 2, -1) / (2 * width**2)
                            - np.sum((xi - xi0) ** 2, -1) / (2 * mw**2))

    return Symbol(f, order=0.0, rho=0.0, name="gaussian")


def _taper(x, s):
    return np.exp(-np.sum(x**2, -1) / (2 * s**2))


def tapered_trig_symbol(d: int, taper: float = 1.5) -> Symbol:
    """tau(x) cos(sum xi): order 0, type (0, 0), with a Gaussian taper in x."""
    return Symbol(lambda x, xi: _taper(x, taper) * np.cos(np.sum(xi, -1)), 0.0, 0.0, "tapered-trig")


def tapered_trig_double(d: int, taper: float = 1.5) -> DoubleSymbol:
    """tau(x_L) tau(x_R) (cos(xi_L + xi_R) + sin(x_L - x_R)/2), rank 4, orders (0, 0)."""
    def tc(fx, fxi):
        return Symbol(lambda x, xi: _taper(x, taper) * fx(np.sum(x, -1)) * fxi(np.sum(xi, -1)))

    one = np.ones_like
    terms = (
        (1.0, tc(one, np.cos), tc(one, np.cos)),
        (-1.0, tc(one, np.sin), tc(one, np.sin)),
        (0.5, tc(np.sin, one), tc(np.cos, one)),
        (-0.5, tc(np.cos, one), tc(np.sin, one)),
    )

    def func(xL, xiL, xR, xiR):
        return (_taper(xL, taper) * _taper(xR, taper)
                * (np.cos(np.sum(xiL, -1) + np.sum(xiR, -1))
                   + 0.5 * np.sin(np.sum(xL, -1) - np.sum(xR, -1))))

    return DoubleSymbol(func, terms, (0.0, 0.0), "tapered-trig", d)


def product_symbol(fL: Symbol, fR: Symbol, coef: complex = 1.0, d: int = 1) -> DoubleSymbol:
    return DoubleSymbol(None, ((coef, fL, fR),), (fL.order, fR.order), "product", d)


def constant_double(d: int, c: complex = 1.0) -> DoubleSymbol:
    one = Symbol.constant(1.0)
    return DoubleSymbol(None, ((c, one, one),), (0.0, 0.0), "constant", d)


def liouville_symbol(h: Symbol, d: int = 1) -> DoubleSymbol:
    """L(X_L, X_R) = -i (h(X_L) - h(X_R))."""
    one = Symbol.constant(1.0)

    def func(xL, xiL, xR, xiR):
        return -1j * (h(xL, xiL) - h(xR, xiR))

    return DoubleSymbol(func, ((-1j, h, one), (1j, one, h)), (h.order, h.order), "liouville", d)


# ---- products -------------------------------------------------------------------

def semi_super_product(A: VectorPotential, F, g: Symbol, grid: UniformGrid) -> SampledField:
    """F <> g with op^A(F <> g) = Op^A(F) op^A(g), sampled on the Wigner grid."""
    out = dequantize(A, super_apply(A, F, quantize(A, g, grid)))
    v = out.values
    edge = np.ones(v.shape, dtype=bool)
    edge[(slice(2, -2),) * v.ndim] = False
    tot = np.sum(np.abs(v) ** 2)
    if tot > 0 and np.sum(np.abs(v[edge]) ** 2) > 1e-12 * tot:
        warnings.warn("semi-super product has mass at the grid boundary", stacklevel=2)
    return out


def _star(A, f: Symbol, g: Symbol, grid: UniformGrid) -> np.ndarray:
    return dequantize(A, op_compose(quantize(A, f, grid), quantize(A, g, grid))).values.reshape(-1)


def super_product(A: VectorPotential, F, G, grid: UniformGrid, tol: float = 1e-10,
                  rank_cap: int = 64) -> DoubleSymbol:
    """F # G with Op^A(F # G) = Op^A(F) Op^A(G), as a recompressed sampled double symbol.

    Terms sigma_i tau_j (f_{L,i} * g_{L,j}) (x) (g_{R,j} * f_{R,i}) with the
    magnetic Weyl product * realized on the grid; a second SVD pass re-compresses.
    """
    dF = F if isinstance(F, SchmidtDecomposition) else schmidt_decompose(F)
    dG = G if isinstance(G, SchmidtDecomposition) else schmidt_decompose(G)
    wg = wigner_grid(grid)
    w = wg.weight
    Ls, Rs, coefs = [], [], []
    for i in range(dF.rank):
        fl, fr = dF.left_symbol(i), dF.right_symbol(i)
        for j in range(dG.rank):
            gl, gr = dG.left_symbol(j), dG.right_symbol(j)
            Ls.append(_star(A, fl, gl, grid))
            Rs.append(_star(A, gr, fr, grid))
            coefs.append(dF.sigma[i] * dG.sigma[j])
    d = grid.d
    if not coefs:
        dec = SchmidtDecomposition(np.zeros(0), [], [], np.zeros((0, 0)), np.zeros((0, 0)), wg)
        return DoubleSymbol(schmidt=dec, d=d, name="super-product")
    Abas, Bbas = np.stack(Ls, axis=1), np.stack(Rs, axis=1)
    s, CL, CR = _orthonormal_core(Abas, Bbas, np.diag(coefs), w)
    r, tail = _truncate(s, tol, rank_cap)
    left = [Symbol.from_samples(SampledField(wg, Abas @ CL[:, j])) for j in range(r)]
    right = [Symbol.from_samples(SampledField(wg, Bbas @ CR[:, j])) for j in range(r)]
    dec = SchmidtDecomposition(s[:r], left, right, np.eye(r, dtype=complex),
                               np.eye(r, dtype=complex), wg, tail)
    orders = tuple(a + b for a, b in zip(_orders(F), _orders(G)))
    return DoubleSymbol(schmidt=dec, d=d, orders=orders, name="super-product")


def _orders(F) -> tuple:
    return F.orders if isinstance(F, DoubleSymbol) else (0.0, 0.0)


# ---- matrix elements ----------------------------------------------------------

def super_matrix_elements(A: VectorPotential, F, spec: FrameSpec, ids=None,
                          G: np.ndarray | None = None, threshold: float = 1e-14) -> SuperMatrixElements:
    """Schmidt-route super matrix elements: sum_j sigma_j fL_j[aL,bL] fR_j[aR,bR]."""
    dec = F if isinstance(F, SchmidtDecomposition) else schmidt_decompose(F)
    ids = np.arange(spec.n_ids) if ids is None else np.asarray(ids)
    G = frame_matrix(spec, ids) if G is None else G
    opsL, opsR = dec._basis_ops(A, spec.grid)
    w2 = spec.grid.weight ** 2
    GH = G.conj().T

    def elems(kernel):
        return w2 * (GH @ (kernel @ G))

    EL = [elems(k) for k in opsL]
    ER = EL if opsR is opsL else [elems(k) for k in opsR]
    terms = []
    for j, s in enumerate(dec.sigma):
        left = sum(c * e for c, e in zip(dec.CL[:, j], EL))
        right = sum(c * e for c, e in zip(dec.CR[:, j], ER))
        terms.append((s, left, right))
    if not terms:
        z = np.zeros((len(ids), len(ids)))
        terms = [(0.0, z, z)]
    return SuperMatrixElements(spec, ids, terms=terms, threshold=threshold)


def weyl_expectations(A: VectorPotential, spec: FrameSpec, a: int, b: int,
                      pgrid: PhaseSpaceGrid) -> np.ndarray:
    """<G_a, w^A(X) G_b> for all X on ``pgrid``; returns an array of shape pgrid.shape."""
    ga = frame_vector_flat(spec, a)
    gb = frame_vector_flat(spec, b)
    g = spec.grid
    y = g.points().reshape(-1, g.d)
    xs = pgrid.position.flat_points()
    xis = pgrid.momentum.flat_points()
    out = np.zeros((len(xs), len(xis)), dtype=complex)
    psi = SampledField(g, gb)
    for i, x0 in enumerate(xs):
        shifted = weyl_system_apply(A, PhasePoint(x0, np.zeros(g.d)), psi, tol=np.inf).values.reshape(-1)
        # w(x0, xi0) = exp(-i xi0.(y + x0/2)) w(x0, 0)
        phase = np.exp(-1j * (xis @ (y + 0.5 * x0).T))
        out[i] = g.weight * (phase @ (np.conj(ga) * shifted))
    return out.reshape(pgrid.shape)


def frame_vector_flat(spec: FrameSpec, i: int) -> np.ndarray:
    return frame_matrix(spec, np.array([i]))[:, 0]


def superop_matrix_element_direct(A: VectorPotential, F: DoubleSymbol, spec: FrameSpec, octuples,
                                  L_osc: float = 6.0, M_osc: int = 48) -> np.ndarray:
    """Super matrix elements by direct quadrature of the double phase-space integral

        (2 pi)^{-2d} int dX_L dX_R (F_Sigma F)(X) <G_aL, w(X_L) G_bL> <G_aR, w(X_R) G_bR>

    on a coarse FFT-dual grid. ``octuples`` holds flat id indices (aL, bL, aR, bR).
    """
    d = spec.d
    pgrid = PhaseSpaceGrid.dual_of(UniformGrid(d, L_osc, M_osc))
    FS = double_symplectic_fourier(sample_double(F, pgrid), pgrid)
    n = int(np.prod(pgrid.shape))
    FS = FS.reshape(n, n)
    edge = _edge_mass(FS.reshape(pgrid.shape * 2))
    if edge > 1e-6:
        warnings.warn(f"F_Sigma F has relative mass {edge:.1e} near the quadrature box edge",
                      stacklevel=2)
    dX = pgrid.weight
    cache: dict = {}

    def expect(a, b):
        if (a, b) not in cache:
            cache[(a, b)] = weyl_expectations(A, spec, a, b, pgrid).reshape(-1)
        return cache[(a, b)]

    out = []
    for aL, bL, aR, bR in np.asarray(octuples, dtype=np.int64).reshape(-1, 4):
        EL = expect(int(aL), int(bL))
        ER = expect(int(aR), int(bR))
        out.append((2 * np.pi) ** (-2 * d) * dX**2 * (EL @ FS @ ER))
    return np.array(out)


def _edge_mass(arr: np.ndarray) -> float:
    tot = np.sum(np.abs(arr) ** 2)
    if tot == 0:
        return 0.0
    inner = (slice(2, -2),) * arr.ndim
    return float(1.0 - np.sum(np.abs(arr[inner]) ** 2) / tot)
