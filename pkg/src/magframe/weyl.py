"""Magnetic Weyl system, quantization, dequantization and dense operator algebra.

Conventions
-----------
The Weyl system acts as

    (w^A(x0, xi0) psi)(y) = Lambda^A(y, y + x0) exp(-i xi0.(y + x0/2)) psi(y + x0)

and op^A(f) has the midpoint kernel

    K(x, y) = (2 pi)^{-d} Lambda^A(x, y) int dxi exp(i xi.(x - y)) f((x + y)/2, xi).

With this choice op^A(xi) = -i grad - A and a gauge change A -> A + grad(phi)
conjugates kernels by U = exp(+i phi(Q)).

Symbols are sampled on the *Wigner grid* of the kernel grid: midpoints
u on a step h/2 lattice covering [-L, L) and momenta on [-pi/h, pi/h) with
step pi/(2L). The xi -> z transform is then a centered 2M-point DFT.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from .geometry import PhaseSpaceGrid, SampledField, UniformGrid, centered_dft, japanese_bracket
from .magnetics import VectorPotential, circulation, zero_potential

__all__ = [
    "Symbol",
    "OperatorMatrix",
    "wigner_grid",
    "lambda_matrix",
    "weyl_system_apply",
    "quantize",
    "dequantize",
    "op_compose",
    "hs_norm",
    "seminorm_estimate",
    "identity_operator",
]


@dataclass(frozen=True)
class Symbol:
    """Phase-space function ``f(x, xi)``; both arguments carry a trailing component axis."""

    func: Callable
    order: float = 0.0
    rho: float = 0.0
    name: str = ""
    samples: SampledField | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_samples(cls, f: SampledField, name: str = "sampled") -> "Symbol":
        """Symbol known only on a phase-space grid; off-grid values are interpolated."""
        from scipy.interpolate import RegularGridInterpolator

        g = f.grid
        axes = [g.position.axis] * g.d + [g.momentum.axis] * g.d
        interp = RegularGridInterpolator(axes, f.values, bounds_error=False, fill_value=0.0)

        def func(x, xi):
            x, xi = np.broadcast_arrays(x, xi)
            pts = np.concatenate([x, xi], axis=-1)
            return interp(pts.reshape(-1, 2 * g.d)).reshape(pts.shape[:-1])

        return cls(func, 0.0, 0.0, name, f)

    def __call__(self, x, xi) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        shape = np.broadcast_shapes(x.shape[:-1], xi.shape[:-1])
        return np.broadcast_to(np.asarray(self.func(x, xi), dtype=complex), shape)

    def conj(self) -> "Symbol":
        return Symbol(lambda x, xi: np.conj(self.func(x, xi)), self.order, self.rho,
                      f"conj({self.name})")

    def scaled(self, c: complex) -> "Symbol":
        return Symbol(lambda x, xi: c * self.func(x, xi), self.order, self.rho, self.name)

    @staticmethod
    def constant(c: complex = 1.0) -> "Symbol":
        return Symbol(lambda x, xi: np.full(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]),
                                             complex(c)), 0.0, 0.0, f"const({c})")

    @staticmethod
    def combination(coefs, symbols) -> "Symbol":
        coefs = [complex(c) for c in coefs]
        symbols = list(symbols)

        def f(x, xi):
            out = 0
            for c, s in zip(coefs, symbols):
                if c != 0:
                    out = out + c * s(x, xi)
            if np.isscalar(out):
                out = np.zeros(np.broadcast_shapes(x.shape[:-1], xi.shape[:-1]), dtype=complex)
            return out

        order = max((s.order for s in symbols), default=0.0)
        return Symbol(f, order, 0.0, "combination")


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense kernel ``K(x, y)`` on grid x grid; the operator is ``psi -> h^d K psi``."""

    grid: UniformGrid
    kernel: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.grid.size
        k = np.asarray(self.kernel, dtype=complex)
        if k.size != n * n:
            raise ValueError(f"kernel must have {n}x{n} entries, got {k.shape}")
        object.__setattr__(self, "kernel", k.reshape(n, n))

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.grid, self.kernel.conj().T)

    def apply(self, psi: SampledField) -> SampledField:
        v = self.grid.weight * (self.kernel @ psi.values.reshape(-1))
        return SampledField(self.grid, v)

    def __add__(self, other):
        _same_grid(self, other)
        return OperatorMatrix(self.grid, self.kernel + other.kernel)

    def __sub__(self, other):
        _same_grid(self, other)
        return OperatorMatrix(self.grid, self.kernel - other.kernel)

    def __mul__(self, c):
        return OperatorMatrix(self.grid, self.kernel * c)

    __rmul__ = __mul__

    def save(self, path) -> None:
        """Binary export: 8-byte header length, JSON header, interleaved little-endian float64."""
        header = {
            "format": "operator-matrix",
            "d": self.grid.d,
            "L": self.grid.L,
            "M": self.grid.M,
            "layout": "row-major",
            "dtype": "<f8",
            "complex": "interleaved",
        }
        _write_binary(path, header, self.kernel)

    @classmethod
    def load(cls, path) -> "OperatorMatrix":
        header, data = _read_binary(path)
        if header.get("format") != "operator-matrix":
            raise ValueError("not an operator-matrix file")
        grid = UniformGrid(int(header["d"]), float(header["L"]), int(header["M"]))
        return cls(grid, data)


def _write_binary(path, header: dict, arr: np.ndarray) -> None:
    raw = json.dumps(header, sort_keys=True).encode()
    flat = np.ascontiguousarray(np.asarray(arr, dtype=np.complex128)).reshape(-1)
    inter = np.empty(2 * flat.size, dtype="<f8")
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        fh.write(inter.tobytes())


def _read_binary(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        (n,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(n).decode())
        inter = np.frombuffer(fh.read(), dtype="<f8")
    if inter.size % 2:
        raise ValueError("truncated complex payload")
    return header, inter[0::2] + 1j * inter[1::2]


def _same_grid(a: OperatorMatrix, b: OperatorMatrix) -> None:
    if a.grid != b.grid:
        raise ValueError("operators live on different grids")


def identity_operator(grid: UniformGrid) -> OperatorMatrix:
    return OperatorMatrix(grid, np.eye(grid.size) / grid.weight)


def wigner_grid(grid: UniformGrid) -> PhaseSpaceGrid:
    """Symbol grid matched to kernels on ``grid`` (2M points per axis in u and xi)."""
    return PhaseSpaceGrid(UniformGrid(grid.d, grid.L, 2 * grid.M),
                          UniformGrid(grid.d, np.pi / grid.h, 2 * grid.M))


def lambda_matrix(A: VectorPotential, grid: UniformGrid) -> np.ndarray:
    """Lambda^A(x_i, x_j) over flattened grid points."""
    if A is None or A.is_zero():
        return np.ones((grid.size, grid.size), dtype=complex)
    p = grid.flat_points()
    return circulation(A, p[:, None, :], p[None, :, :])


def weyl_system_apply(A: VectorPotential, X, psi: SampledField, tol: float = 1e-10) -> SampledField:
    """Apply w^A(X) to ``psi``; off-grid translations use Fourier interpolation."""
    g = psi.grid
    x0 = np.asarray(X.x, dtype=float)
    xi0 = np.asarray(X.xi, dtype=float)
    if x0.shape != (g.d,):
        raise ValueError("phase point dimension does not match the grid")
    v = psi.values.reshape(g.shape)
    y = g.points()
    # mass that would wrap around the periodic box under the translation
    src = y - x0
    wrap = np.any((src < -g.L) | (src >= g.L), axis=-1)
    tot = np.sum(np.abs(v) ** 2)
    if tot > 0 and np.sum(np.abs(v[wrap]) ** 2) > tol * tot:
        raise ValueError("support overflow: translated vector leaves the grid")
    shifted = v
    if np.any(x0 != 0):
        spec = np.fft.fftn(v)
        phase = 1.0
        for j in range(g.d):
            kap = 2 * np.pi * np.fft.fftfreq(g.M, d=g.h)
            sh = [1] * g.d
            sh[j] = g.M
            phase = phase * np.exp(1j * kap * x0[j]).reshape(sh)
        shifted = np.fft.ifftn(spec * phase)
    A = A if A is not None else zero_potential(g.d)
    lam = circulation(A, y, y + x0)
    out = lam * np.exp(-1j * ((y + 0.5 * x0) @ xi0)) * shifted
    return SampledField(g, out)


def _sample_symbol_rows(f, grid: UniformGrid, s_index, wg: PhaseSpaceGrid) -> np.ndarray:
    """f(u, xi) on the Wigner grid for the first midpoint axis fixed at ``s_index``."""
    d = grid.d
    u_ax = wg.position.axis
    xi_pts = wg.momentum.points()
    if d == 1:
        u = u_ax[:, None, None]
        return np.asarray(f(u, xi_pts[None, :, :]), dtype=complex)
    u = np.stack(np.broadcast_arrays(np.full_like(u_ax, u_ax[s_index]), u_ax), axis=-1)
    return np.asarray(f(u[:, None, None, :], xi_pts[None, :, :, :]), dtype=complex)


def quantize(A: VectorPotential, f, grid: UniformGrid) -> OperatorMatrix:
    """op^A(f) via the midpoint kernel formula, FFT in xi per midpoint."""
    d, M = grid.d, grid.M
    wg = wigner_grid(grid)
    smp = getattr(f, "samples", None)
    if smp is not None and smp.grid == wg:
        vals = smp.values
        f = None
    dxi = wg.momentum.h
    scale = (2 * np.pi) ** (-d) * dxi**d
    if d == 1:
        F = vals if f is None else _sample_symbol_rows(f, grid, None, wg)  # (s, k)
        T = scale * centered_dft(F, 1, +1)  # (s, n)
        i = np.arange(M)
        I, J = np.meshgrid(i, i, indexing="ij")
        K = T[I + J, I - J + M]
    else:
        i = np.arange(M)
        I2, J2 = np.meshgrid(i, i, indexing="ij")
        S2, N2 = I2 + J2, I2 - J2 + M
        K = np.zeros((M, M, M, M), dtype=complex)
        for s1 in range(2 * M - 1):
            F = vals[s1] if f is None else _sample_symbol_rows(f, grid, s1, wg)  # (s2, k1, k2)
            T = scale * centered_dft(F, (1, 2), +1)  # (s2, n1, n2)
            for i1 in range(max(0, s1 - M + 1), min(s1, M - 1) + 1):
                j1 = s1 - i1
                K[i1, :, j1, :] = T[S2, i1 - j1 + M, N2]
        K = K.reshape(M * M, M * M)
    return OperatorMatrix(grid, lambda_matrix(A, grid) * K)


def _upsample2(arr: np.ndarray, axis: int) -> np.ndarray:
    """Double the sampling rate along ``axis`` by a band-limited half-step shift.

    The Nyquist mode is left unshifted, which keeps the shift S real and
    S S^T = 1; the identity kernel then dequantizes to exactly 1.
    """
    n = arr.shape[axis]
    kap = np.fft.fftfreq(n) * 2 * np.pi  # phase per sample
    lam = np.exp(0.5j * kap)
    lam[n // 2] = 1.0
    sh = [1] * arr.ndim
    sh[axis] = n
    odd = np.fft.ifft(np.fft.fft(arr, axis=axis) * lam.reshape(sh), axis=axis)
    out_shape = list(arr.shape)
    out_shape[axis] = 2 * n
    out = np.empty(out_shape, dtype=complex)
    idx = [slice(None)] * arr.ndim
    idx[axis] = slice(0, None, 2)
    out[tuple(idx)] = arr
    idx[axis] = slice(1, None, 2)
    out[tuple(idx)] = odd
    return out


def dequantize(A: VectorPotential, op: OperatorMatrix, max_entries: int = 2**25) -> SampledField:
    """Magnetic Wigner transform of a kernel, sampled on :func:`wigner_grid`.

    Exact left inverse of :func:`quantize` on the grid: dequantize(quantize(f)) recovers
    f up to the band-limited interpolation used to fill the half-step midpoints.
    """
    g = op.grid
    d, M, h = g.d, g.M, g.h
    if (2 * M) ** (2 * d) > max_entries:
        raise MemoryError(f"dequantize needs {(2 * M) ** (2 * d)} samples; raise max_entries")
    Kt = (op.kernel * np.conj(lambda_matrix(A, g))).reshape((M,) * (2 * d))
    up = Kt
    for ax in range(2 * d):
        up = _upsample2(up, ax)
    s = np.arange(2 * M)
    S, N = np.meshgrid(s, s, indexing="ij")
    a, b = S + N - M, S - N + M
    ok = (a >= 0) & (a < 2 * M) & (b >= 0) & (b < 2 * M)
    a, b = np.where(ok, a, 0), np.where(ok, b, 0)
    if d == 1:
        T = np.where(ok, up[a, b], 0)  # (s, n)
        F = h * centered_dft(T, 1, -1)
    else:
        # T[s1, s2, n1, n2] = up[a1, a2, b1, b2]
        T = up[a[:, None, :, None], a[None, :, None, :], b[:, None, :, None], b[None, :, None, :]]
        T = T * (ok[:, None, :, None] & ok[None, :, None, :])
        F = h**2 * centered_dft(T, (2, 3), -1)
    return SampledField(wigner_grid(g), F)


def op_compose(op1: OperatorMatrix, op2: OperatorMatrix) -> OperatorMatrix:
    _same_grid(op1, op2)
    return OperatorMatrix(op1.grid, op1.grid.weight * (op1.kernel @ op2.kernel))


def hs_norm(op: OperatorMatrix) -> float:
    return float(op.grid.weight * np.linalg.norm(op.kernel))


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0  # 4th-order centered first derivative


def seminorm_estimate(f: Symbol, a, alpha, grid: PhaseSpaceGrid, m: float | None = None,
                      rho: float | None = None) -> float:
    """sup <xi>^{-m + |alpha| rho} |d_x^a d_xi^alpha f| by centered finite differences.

    The sup runs over grid points far enough from the boundary for every stencil.
    """
    a = np.atleast_1d(np.asarray(a, dtype=int))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=int))
    d = grid.d
    if a.shape != (d,) or alpha.shape != (d,) or np.any(a < 0) or np.any(alpha < 0):
        raise ValueError("multi-indices must be non-negative of length d")
    total = int(a.sum() + alpha.sum())
    if total > 4:
        raise ValueError("derivative order too high (|a| + |alpha| <= 4)")
    m = f.order if m is None else m
    rho = f.rho if rho is None else rho
    x, xi = grid.mesh()
    vals = np.asarray(f(x, xi), dtype=complex)
    vals = np.broadcast_to(vals, grid.shape).copy()
    steps = [grid.position.h] * d + [grid.momentum.h] * d
    orders = list(a) + list(alpha)
    for ax, (n, hstep) in enumerate(zip(orders, steps)):
        for _ in range(n):
            vals = sum(c * np.roll(vals, 2 - j, axis=ax) for j, c in enumerate(_D1)) / hstep
    margin = 2 * total
    sl = tuple(slice(margin, s - margin) if margin else slice(None) for s in grid.shape)
    w = japanese_bracket(np.broadcast_to(xi, grid.shape + (d,)))
    w = w ** (-m + alpha.sum() * rho)
    return float(np.max(np.abs(vals[sl]) * w[sl]))
