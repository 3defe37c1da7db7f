"""Frame matrix elements of operators and super operators.

Super matrix elements use the canonical index order (aL, bL, aR, bR):

    F_{aL,bL,aR,bR} = < G_aL , F(|G_bL><G_aR|) G_bR >

For a product super operator f_L (x) f_R (acting as g -> f_L g f_R) this
factors into f_L[aL,bL] * f_R[aR,bR].
"""
from __future__ import annotations

import csv
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .frame import FrameSpec, frame_matrix
from .weyl import OperatorMatrix

__all__ = [
    "OperatorMatrixElements",
    "SuperMatrixElements",
    "op_matrix_elements",
    "reconstruct_operator",
    "hs_isometry_check",
    "apply_super_via_elements",
    "compose_super_elements",
    "identity_super_elements",
    "product_super_elements",
    "PERMUTATIONS",
    "DenseFactor",
    "ProductFactor",
]

# Index orderings seen in the literature, as permutations into (aL, bL, aR, bR).
PERMUTATIONS = {
    "canonical": (0, 1, 2, 3),
    # (aL, aR, bL, bR): left/right out-indices first
    "out-in": (0, 2, 1, 3),
    # (aL, bR, bL, aR): row pair then column pair of the flattened kernel
    "flattened": (0, 3, 1, 2),
}


@dataclass(frozen=True)
class OperatorMatrixElements:
    """f_{a,b} = <G_a, f G_b> over the ids ``ids`` (flat indices into the frame truncation)."""

    spec: FrameSpec
    values: np.ndarray
    ids: np.ndarray = None

    def __post_init__(self):
        ids = np.arange(self.spec.n_ids) if self.ids is None else np.asarray(self.ids)
        object.__setattr__(self, "ids", ids)
        v = np.asarray(self.values, dtype=complex)
        if v.shape != (len(ids), len(ids)):
            raise ValueError("element array does not match the id set")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def restrict(self, sub: np.ndarray) -> "OperatorMatrixElements":
        """Restrict to a subset of ids (given as flat spec indices)."""
        pos = np.searchsorted(self.ids, sub)
        if np.any(self.ids[pos] != sub):
            raise KeyError("requested ids not present")
        return OperatorMatrixElements(self.spec, self.values[np.ix_(pos, pos)], np.asarray(sub))

    def to_csv(self, path) -> None:
        sp = self.spec
        d = sp.d
        cols = ([f"a_alpha{j + 1}" for j in range(d)] + [f"a_k{j + 1}" for j in range(d)]
                + [f"b_alpha{j + 1}" for j in range(d)] + [f"b_k{j + 1}" for j in range(d)])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols + ["re", "im"])
            for i, a in enumerate(self.ids):
                for j, b in enumerate(self.ids):
                    c = self.values[i, j]
                    w.writerow([*sp.id_alpha[a], *sp.id_k[a], *sp.id_alpha[b], *sp.id_k[b],
                                f"{c.real:.17g}", f"{c.imag:.17g}"])


def op_matrix_elements(spec: FrameSpec, op: OperatorMatrix, ids=None,
                       G: np.ndarray | None = None) -> OperatorMatrixElements:
    """<G_a, op G_b> = h^{2d} G^H K G by quadrature."""
    if op.grid != spec.grid:
        raise ValueError("operator and frame live on different grids")
    ids = np.arange(spec.n_ids) if ids is None else np.asarray(ids)
    G = frame_matrix(spec, ids) if G is None else G
    w = spec.grid.weight
    vals = (w * w) * (G.conj().T @ (op.kernel @ G))
    return OperatorMatrixElements(spec, vals, ids)


def reconstruct_operator(spec: FrameSpec, elems: OperatorMatrixElements,
                         G: np.ndarray | None = None) -> OperatorMatrix:
    """sum_{a,b} f_{a,b} |G_a><G_b| as a dense kernel."""
    G = frame_matrix(spec, elems.ids) if G is None else G
    return OperatorMatrix(spec.grid, G @ elems.values @ G.conj().T)


def hs_isometry_check(spec: FrameSpec, op: OperatorMatrix, G: np.ndarray | None = None) -> float:
    """| ||op||_HS - ||elements||_l2 | / ||op||_HS."""
    from .weyl import hs_norm
    n = hs_norm(op)
    if n == 0:
        raise ValueError("zero operator")
    e = op_matrix_elements(spec, op, G=G)
    return abs(n - e.norm()) / n


class DenseFactor:
    """Element array of one side of a product term."""

    def __init__(self, arr):
        self.arr = np.asarray(arr, dtype=complex)

    def full(self) -> np.ndarray:
        return self.arr

    def rows(self, r) -> np.ndarray:
        return self.arr[r, :]

    def cols(self, c) -> np.ndarray:
        return self.arr[:, c]

    def block(self, r, c) -> np.ndarray:
        return self.arr[np.ix_(r, c)]

    def entries(self, a, b) -> np.ndarray:
        return self.arr[a, b]


class ProductFactor(DenseFactor):
    """Matrix product ``A @ B`` of two factors, evaluated only where needed."""

    def __init__(self, A: DenseFactor, B: DenseFactor):
        self.A, self.B = A, B
        self._full = None

    @property
    def arr(self) -> np.ndarray:
        return self.full()

    def full(self) -> np.ndarray:
        if self._full is None:
            self._full = self.A.full() @ self.B.full()
        return self._full

    def rows(self, r) -> np.ndarray:
        if self._full is not None:
            return self._full[r, :]
        return self.A.rows(r) @ self.B.full()

    def cols(self, c) -> np.ndarray:
        if self._full is not None:
            return self._full[:, c]
        return self.A.full() @ self.B.cols(c)

    def block(self, r, c) -> np.ndarray:
        return self.A.rows(r) @ self.B.cols(c)

    def entries(self, a, b) -> np.ndarray:
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        if self._full is not None:
            return self._full[a, b]
        ua, ia = np.unique(a.reshape(-1), return_inverse=True)
        ub, ib = np.unique(b.reshape(-1), return_inverse=True)
        return self.block(ua, ub)[ia, ib].reshape(a.shape)


def _factor(x) -> DenseFactor:
    return x if isinstance(x, DenseFactor) else DenseFactor(x)


class SuperMatrixElements:
    """Lazily evaluated 8-index matrix elements (4 frame ids) with a thresholded cache.

    Either built from factored terms ``[(c, EL, ER), ...]`` meaning
    sum_j c_j EL_j[aL,bL] ER_j[aR,bR] (all element arrays over the same id set),
    or from a generic scalar evaluator ``func(aL, bL, aR, bR)`` on positions
    into ``ids``. Entries with magnitude below ``threshold`` are stored as 0.
    """

    def __init__(self, spec: FrameSpec, ids: np.ndarray, terms=None,
                 func: Callable | None = None, threshold: float = 1e-14,
                 cache_size: int = 1 << 20):
        if (terms is None) == (func is None):
            raise ValueError("give exactly one of terms or func")
        self.spec = spec
        self.ids = np.asarray(ids)
        self.terms = None
        if terms is not None:
            self.terms = [(complex(c), _factor(EL), _factor(ER)) for c, EL, ER in terms]
        self.func = func
        self.threshold = threshold
        self.cache_size = cache_size
        self._cache: dict = {}
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def is_factored(self) -> bool:
        return self.terms is not None

    def _raw(self, aL, bL, aR, bR) -> np.ndarray:
        if self.terms is not None:
            out = 0
            for c, EL, ER in self.terms:
                out = out + c * EL.entries(aL, bL) * ER.entries(aR, bR)
            return np.asarray(out, dtype=complex) + np.zeros(np.shape(aL))
        f = np.vectorize(self.func, otypes=[complex])
        return f(aL, bL, aR, bR)

    def __call__(self, aL, bL, aR, bR) -> np.ndarray:
        """Elements at positions (into ``ids``); arrays broadcast."""
        aL, bL, aR, bR = np.broadcast_arrays(*(np.asarray(v, dtype=np.int64) for v in (aL, bL, aR, bR)))
        vals = self._raw(aL, bL, aR, bR)
        vals = np.where(np.abs(vals) < self.threshold, 0, vals)
        return vals

    def element(self, aL: int, bL: int, aR: int, bR: int) -> complex:
        """Single cached element (idempotent under concurrent insertion)."""
        key = (int(aL), int(bL), int(aR), int(bR))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        val = complex(self(*key))
        with self._lock:
            if len(self._cache) < self.cache_size:
                self._cache.setdefault(key, val)
        return val

    def permuted(self, order: str, idx) -> np.ndarray:
        """Evaluate at a 4-index tuple given in another documented ordering."""
        perm = PERMUTATIONS[order]
        canon = [None] * 4
        for pos, target in enumerate(perm):
            canon[target] = idx[pos]
        return self(*canon)

    def to_sparse_csv(self, path, box=None) -> int:
        """Thresholded sparse export over ``box`` positions; returns number of rows."""
        box = np.arange(self.n) if box is None else np.asarray(box)
        sp = self.spec
        d = sp.d
        names = []
        for tag in ("aL", "bL", "aR", "bR"):
            names += [f"{tag}_alpha{j + 1}" for j in range(d)] + [f"{tag}_k{j + 1}" for j in range(d)]
        rows = 0
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names + ["re", "im"])
            for aL in box:
                vals = self(aL, box[:, None, None], box[None, :, None], box[None, None, :])
                nz = np.argwhere(vals != 0)
                for i, j, k in nz:
                    c = vals[i, j, k]
                    lab = []
                    for p in (aL, box[i], box[j], box[k]):
                        fid = self.ids[p]
                        lab += [*sp.id_alpha[fid], *sp.id_k[fid]]
                    w.writerow(lab + [f"{c.real:.17g}", f"{c.imag:.17g}"])
                    rows += 1
        return rows


def product_super_elements(fL: OperatorMatrixElements, fR: OperatorMatrixElements,
                           coef: complex = 1.0, **kw) -> SuperMatrixElements:
    if not np.array_equal(fL.ids, fR.ids):
        raise ValueError("left and right elements use different id sets")
    return SuperMatrixElements(fL.spec, fL.ids, terms=[(coef, fL.values, fR.values)], **kw)


def identity_super_elements(gram: OperatorMatrixElements, **kw) -> SuperMatrixElements:
    """Elements of the identity super operator: gram[aL,bL] gram[aR,bR]."""
    return product_super_elements(gram, gram, **kw)


def apply_super_via_elements(F: SuperMatrixElements, g: OperatorMatrixElements,
                             out: np.ndarray | None = None) -> OperatorMatrixElements:
    """(F g)_{a,b} = sum_{a',b'} F_{a,b',a',b} g_{b',a'} over the truncation box.

    ``out`` optionally restricts the output to a subset of positions.
    """
    if not np.array_equal(F.ids, g.ids):
        raise ValueError("super elements and operator elements use different id sets")
    out = np.arange(F.n) if out is None else np.asarray(out)
    if F.is_factored:
        res = 0
        for c, EL, ER in F.terms:
            res = res + c * (EL.rows(out) @ g.values @ ER.cols(out))
    else:
        n = F.n
        res = np.zeros((len(out), len(out)), dtype=complex)
        bp = np.arange(n)[:, None]
        ap = np.arange(n)[None, :]
        for i, a in enumerate(out):
            for j, b in enumerate(out):
                res[i, j] = np.sum(F(a, bp, ap, b) * g.values[bp, ap])
    return OperatorMatrixElements(F.spec, res, F.ids[out])


def compose_super_elements(F: SuperMatrixElements, G: SuperMatrixElements) -> SuperMatrixElements:
    """(F G)_{aL,bL,aR,bR} = sum_{a,b} F_{aL,a,b,bR} G_{a,bL,aR,b}.

    Factored inputs give a factored result with left factor EL_i GL_j and right
    factor GR_j ER_i; otherwise a lazy evaluator performs the double sum.
    """
    if not np.array_equal(F.ids, G.ids):
        raise ValueError("id sets differ")
    if F.is_factored and G.is_factored:
        terms = []
        for c, EL, ER in F.terms:
            for t, GL, GR in G.terms:
                terms.append((c * t, ProductFactor(EL, GL), ProductFactor(GR, ER)))
        return SuperMatrixElements(F.spec, F.ids, terms=terms, threshold=F.threshold)
    n = F.n
    a = np.arange(n)[:, None]
    b = np.arange(n)[None, :]

    def func(aL, bL, aR, bR):
        return complex(np.sum(F(aL, a, b, bR) * G(a, bL, aR, b)))

    return SuperMatrixElements(F.spec, F.ids, func=func, threshold=F.threshold)
