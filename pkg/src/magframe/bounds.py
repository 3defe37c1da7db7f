"""Schur test, decay tables of super matrix elements and boundedness runs."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .frame import FrameSpec, frame_matrix
from .geometry import japanese_bracket
from .magnetics import VectorPotential
from .matrixrep import SuperMatrixElements
from .superweyl import DoubleSymbol, schmidt_decompose, super_apply, super_matrix_elements
from .weyl import OperatorMatrix, hs_norm

__all__ = [
    "SchurReport",
    "DecayReport",
    "BoundednessReport",
    "schur_bound",
    "flattened_schur",
    "decay_table",
    "fit_decay",
    "boundedness_experiment",
    "random_hs_operator",
    "Weight",
]


@dataclass(frozen=True)
class SchurReport:
    row_sup: float
    col_sup: float
    norm_estimate: float

    @property
    def constant(self) -> float:
        return max(self.row_sup, self.col_sup)


def _power_norm(apply, apply_adj, shape, iters: int = 100, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        w = apply_adj(apply(v))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        est = np.sqrt(nw)
        v = w / nw
    return float(est)


def schur_bound(K, iters: int = 100, seed: int = 0) -> SchurReport:
    """Row/column l1 sups of a finite kernel and a power-method estimate of its l2 norm."""
    K = np.asarray(K)
    if K.ndim != 2 or K.size == 0:
        raise ValueError("Schur test needs a non-empty matrix")
    a = np.abs(K)
    norm = _power_norm(lambda v: K @ v, lambda v: K.conj().T @ v, (K.shape[1],), iters, seed)
    return SchurReport(float(a.sum(axis=1).max()), float(a.sum(axis=0).max()), norm)


def flattened_schur(E: SuperMatrixElements, box=None, iters: int = 100, seed: int = 0) -> SchurReport:
    """Schur test for the super kernel with rows (aL, bR) and columns (bL, aR).

    This is the kernel that maps operator elements g_{bL,aR} to (F g)_{aL,bR}.
    Factored elements are contracted one output row index at a time, so memory
    stays at n^3 and the power method never forms the n^2 x n^2 matrix.
    """
    box = np.arange(E.n) if box is None else np.asarray(box)
    n = len(box)
    if n == 0:
        raise ValueError("empty box")
    thr = E.threshold
    row = np.zeros((n, n))  # indexed (aL, bR)
    col = np.zeros((n, n))  # indexed (bL, aR)
    if E.is_factored:
        cs = np.array([c for c, _, _ in E.terms])
        ELs = np.stack([EL.block(box, box) for _, EL, _ in E.terms])  # (r, aL, bL)
        ERs = np.stack([ER.block(box, box) for _, _, ER in E.terms])  # (r, aR, bR)
        ERf = ERs.reshape(len(cs), n * n)
        for i in range(n):
            T = cs[:, None] * ELs[:, i, :]  # (r, bL)
            blk = np.abs((T.T @ ERf).reshape(n, n, n))  # (bL, aR, bR)
            blk[blk < thr] = 0.0
            row[i] = blk.sum(axis=(0, 1))
            col += blk.sum(axis=2)

        def apply(v):
            return sum(c * (EL @ v @ ER) for c, EL, ER in zip(cs, ELs, ERs))

        def apply_adj(u):
            return sum(np.conj(c) * (EL.conj().T @ u @ ER.conj().T) for c, EL, ER in zip(cs, ELs, ERs))

        norm = _power_norm(apply, apply_adj, (n, n), iters, seed)
        return SchurReport(float(row.max()), float(col.max()), norm)
    Kf = np.zeros((n, n, n, n), dtype=complex)  # (aL, bR, bL, aR)
    for i in range(n):
        vals = E(box[i], box[:, None, None], box[None, :, None], box[None, None, :])  # (bL, aR, bR)
        Kf[i] = vals.transpose(2, 0, 1)
    return schur_bound(Kf.reshape(n * n, n * n), iters, seed)


@dataclass(frozen=True)
class Weight:
    """Exponents (n_L, n_R, n_L*, n_R*) and orders (m_L, m_R) of one decay weight."""

    nL: int = 0
    nR: int = 0
    nLs: int = 0
    nRs: int = 0
    mL: float = 0.0
    mR: float = 0.0

    def key(self) -> str:
        return f"nL={self.nL},nR={self.nR},nL*={self.nLs},nR*={self.nRs},mL={self.mL:g},mR={self.mR:g}"


def _side_weight(spec: FrameSpec, ids: np.ndarray, n: int, ns: int, m: float) -> np.ndarray:
    """<alpha - beta>^n <alpha* - beta*>^n* <alpha* + beta*>^-m over id pairs (alpha* = 2 pi k)."""
    al = spec.id_alpha[ids].astype(float)
    ks = 2 * np.pi * spec.id_k[ids].astype(float)
    w = japanese_bracket(al[:, None, :] - al[None, :, :]) ** n
    w = w * japanese_bracket(ks[:, None, :] - ks[None, :, :]) ** ns
    if m:
        w = w * japanese_bracket(ks[:, None, :] + ks[None, :, :]) ** (-m)
    return w


def _pair_sup(U: np.ndarray, V: np.ndarray, chunk: int = 512) -> float:
    """max_{p,q} |U[p] . V[q]| with norm-based pruning (rows are rank-r vectors)."""
    nu = np.linalg.norm(U, axis=1)
    nv = np.linalg.norm(V, axis=1)
    ou = np.argsort(-nu)
    ov = np.argsort(-nv)
    U, nu = U[ou], nu[ou]
    V, nv = V[ov], nv[ov]
    best = 0.0
    if U.shape[1] == 1:
        return float(nu[0] * nv[0]) if len(nu) and len(nv) else 0.0
    for s in range(0, len(U), chunk):
        if nu[s] * nv[0] <= best:
            break
        # only columns that could still beat the current best
        q = int(np.searchsorted(-nv, -best / max(nu[s], 1e-300), side="right"))
        if q == 0:
            break
        vals = np.abs(U[s:s + chunk] @ V[:q].T)
        best = max(best, float(vals.max()))
    return best


@dataclass
class DecayReport:
    """Weighted sups per weight over nested truncation boxes (n_alpha, n_k)."""

    boxes: list
    sizes: list
    sups: dict = field(default_factory=dict)  # weight key -> list of sups

    def monotone(self) -> bool:
        return all(np.all(np.diff(v) >= -1e-12 * max(max(v), 1e-300)) for v in self.sups.values())

    def saturated(self, tol: float = 0.05) -> dict:
        return {k: v["verdict"] == "saturating" for k, v in fit_decay(self, tol).items()}

    def rows(self):
        for k, v in self.sups.items():
            for b, s, val in zip(self.boxes, self.sizes, v):
                yield (k, b[0], b[1], s, val)


def decay_table(A: VectorPotential, F: DoubleSymbol, spec: FrameSpec, weights, boxes,
                tol: float = 1e-12) -> DecayReport:
    """Weighted sup of |F_{aL,bL,aR,bR}| over every octuple in each box.

    Matrix elements come from the Schmidt route on the largest box; smaller
    boxes are subsets. The weight splits into a left-pair and right-pair factor,
    so each sup is a max over pairs of rank-r vectors.
    """
    boxes = [tuple(int(v) for v in b) for b in boxes]
    for b0, b1 in zip(boxes, boxes[1:]):
        if b1[0] < b0[0] or b1[1] < b0[1]:
            raise ValueError("boxes must be nested (non-decreasing in both extents)")
    dec = schmidt_decompose(F, tol=tol)
    big = spec.box(*boxes[-1])
    G = frame_matrix(spec, big)
    E = super_matrix_elements(A, dec, spec, big, G=G)
    pos = {int(i): p for p, i in enumerate(big)}
    subs = [np.array([pos[int(i)] for i in spec.box(*b)]) for b in boxes]
    rep = DecayReport(boxes, [len(s) for s in subs])
    ELs = np.stack([c * EL.full() for c, EL, _ in E.terms])
    ERs = np.stack([ER.full() for _, _, ER in E.terms])
    for w in weights:
        w = w if isinstance(w, Weight) else Weight(*w)
        WL = _side_weight(spec, big, w.nL, w.nLs, w.mL)
        WR = _side_weight(spec, big, w.nR, w.nRs, w.mR)
        seq = []
        for sub in subs:
            ix = np.ix_(sub, sub)
            U = (ELs[(slice(None),) + ix] * WL[ix]).reshape(len(ELs), -1).T
            V = (ERs[(slice(None),) + ix] * WR[ix]).reshape(len(ERs), -1).T
            seq.append(_pair_sup(U, V))
        rep.sups[w.key()] = seq
    return rep


def fit_decay(report: DecayReport, tol: float = 0.05) -> dict:
    """Per weight: "saturating" when the last two sups differ by less than ``tol``."""
    if len(report.sizes) < 3:
        raise ValueError("saturation verdict needs at least 3 box sizes")
    out = {}
    s = np.asarray(report.sizes, dtype=float)
    for k, v in report.sups.items():
        v = np.asarray(v, dtype=float)
        rel = abs(v[-1] - v[-2]) / max(abs(v[-1]), 1e-300)
        if rel < tol:
            out[k] = {"verdict": "saturating", "rel_change": float(rel)}
        else:
            rate = float(np.log(v[-1] / v[-2]) / np.log(s[-1] / s[-2])) if v[-2] > 0 else float("inf")
            out[k] = {"verdict": "growing", "rel_change": float(rel), "rate": rate}
    return out


@dataclass
class BoundednessReport:
    trials: list  # (||g||_HS, ||F g||_HS, ratio)
    schur_constants: list  # one per box
    boxes: list

    @property
    def max_ratio(self) -> float:
        return max(t[2] for t in self.trials)

    @property
    def schur_constant(self) -> float:
        return self.schur_constants[-1]

    def dominated(self, tol: float = 1e-6) -> bool:
        return self.max_ratio <= self.schur_constant + tol

    def stable(self, tol: float = 0.05) -> bool:
        c = self.schur_constants
        return len(c) < 2 or abs(c[-1] - c[-2]) <= tol * abs(c[-1])


def random_hs_operator(spec: FrameSpec, rng: np.random.Generator, terms: int = 5) -> OperatorMatrix:
    """Sum of ``terms`` Gaussians x plane waves in (x, y), HS-normalized, inside the safe box."""
    g = spec.grid
    x = g.flat_points()
    reach = max(spec.N - 2.0, 0.5)
    K = np.zeros((g.size, g.size), dtype=complex)
    for _ in range(terms):
        a, b = rng.uniform(-reach, reach, size=(2, g.d))
        s = rng.uniform(0.3, 0.6)
        p, q = rng.normal(scale=2.0, size=(2, g.d))
        fx = np.exp(-np.sum((x - a) ** 2, -1) / (2 * s**2) + 1j * x @ p)
        fy = np.exp(-np.sum((x - b) ** 2, -1) / (2 * s**2) + 1j * x @ q)
        c = rng.normal() + 1j * rng.normal()
        K += c * np.outer(fx, fy)
    op = OperatorMatrix(g, K)
    return op * (1.0 / hs_norm(op))


def boundedness_experiment(A: VectorPotential, F: DoubleSymbol, spec: FrameSpec, trials: int,
                           boxes, seed: int = 0, threads: int = 1) -> BoundednessReport:
    """HS ratios of Op^A(F) on random operators against the flattened Schur constant.

    Refuses symbols of positive declared order, where boundedness
    does not apply.
    """
    if max(F.orders) > 0:
        raise ValueError(f"symbol order {F.orders} > 0: boundedness needs m_L, m_R <= 0")
    if trials < 1:
        raise ValueError("need at least one trial")
    dec = schmidt_decompose(F)
    rng = np.random.default_rng(seed)
    ops = [random_hs_operator(spec, rng) for _ in range(trials)]

    def one(g):
        ng = hs_norm(g)
        nf = hs_norm(super_apply(A, dec, g))
        return (ng, nf, nf / ng)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(one, ops))
    else:
        res = [one(g) for g in ops]
    consts = []
    for b in boxes:
        ids = spec.box(*b)
        E = super_matrix_elements(A, dec, spec, ids)
        consts.append(flattened_schur(E).constant)
    return BoundednessReport(res, consts, [tuple(b) for b in boxes])

