import numpy as np
import pytest

from magframe.bounds import random_hs_operator
from magframe.frame import frame_matrix
from magframe.matrixrep import (PERMUTATIONS, DenseFactor, OperatorMatrixElements, ProductFactor,
                                SuperMatrixElements, apply_super_via_elements,
                                compose_super_elements, hs_isometry_check, op_matrix_elements,
                                product_super_elements, reconstruct_operator)
from magframe.weyl import OperatorMatrix, hs_norm


def test_hs_isometry(spec1, G1, rng):
    for _ in range(3):
        assert hs_isometry_check(spec1, random_hs_operator(spec1, rng), G1) < 1e-7


def test_reconstruction(spec1, G1, rng):
    op = random_hs_operator(spec1, rng)
    back = reconstruct_operator(spec1, op_matrix_elements(spec1, op, G=G1), G1)
    assert hs_norm(back - op) < 1e-6


def test_restrict(small_spec, rng):
    ids = small_spec.box(1, 3)
    e = op_matrix_elements(small_spec, random_hs_operator(small_spec, rng), ids)
    sub = ids[:4]
    assert np.array_equal(e.restrict(sub).values, e.values[:4, :4])


def test_product_factor_lazy(rng):
    A, B = rng.normal(size=(2, 6, 6))
    P = ProductFactor(DenseFactor(A), DenseFactor(B))
    assert np.allclose(P.entries(np.array([1, 2]), np.array([3, 0])), (A @ B)[[1, 2], [3, 0]])
    assert np.allclose(P.block([0, 5], [1]), (A @ B)[np.ix_([0, 5], [1])])


def _random_elements(small_spec, rng, n=12):
    ids = small_spec.box(0, (n - 1) // 2)
    m = len(ids)
    vals = lambda: rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    return ids, vals


def test_apply_factored_matches_generic(small_spec, rng):
    ids, vals = _random_elements(small_spec, rng)
    EL, ER, g = vals(), vals(), vals()
    F = SuperMatrixElements(small_spec, ids, terms=[(1.5, EL, ER)], threshold=0)
    Fg = SuperMatrixElements(small_spec, ids, func=lambda a, b, c, d: 1.5 * EL[a, b] * ER[c, d], threshold=0)
    ge = OperatorMatrixElements(small_spec, g, ids)
    assert np.allclose(apply_super_via_elements(F, ge).values, apply_super_via_elements(Fg, ge).values)
    assert np.allclose(apply_super_via_elements(F, ge).values, 1.5 * EL @ g @ ER)


def test_compose_factored_matches_generic(small_spec, rng):
    ids, vals = _random_elements(small_spec, rng, 8)
    F = SuperMatrixElements(small_spec, ids, terms=[(1.0, vals(), vals())], threshold=0)
    G = SuperMatrixElements(small_spec, ids, terms=[(2.0, vals(), vals()), (1j, vals(), vals())], threshold=0)
    Gg = SuperMatrixElements(small_spec, ids, func=lambda *i: complex(G(*i)), threshold=0)
    FG, FGg = compose_super_elements(F, G), compose_super_elements(F, Gg)
    idx = rng.integers(0, len(ids), size=(5, 4))
    for o in idx:
        assert np.isclose(FG.element(*o), FGg.element(*o))


def test_permutations(small_spec, rng):
    ids, vals = _random_elements(small_spec, rng, 6)
    EL, ER = vals(), vals()
    F = SuperMatrixElements(small_spec, ids, terms=[(1.0, EL, ER)], threshold=0)
    aL, bL, aR, bR = 0, 1, 2, 3
    assert np.isclose(F.permuted("out-in", (aL, aR, bL, bR)), EL[aL, bL] * ER[aR, bR])
    assert np.isclose(F.permuted("flattened", (aL, bR, bL, aR)), EL[aL, bL] * ER[aR, bR])
    assert set(PERMUTATIONS) == {"canonical", "out-in", "flattened"}


def test_threshold_and_sparse_csv(tmp_path, small_spec):
    ids = small_spec.box(0, 1)
    EL = np.diag([1.0, 1e-20, 1.0])
    F = SuperMatrixElements(small_spec, ids, terms=[(1.0, EL, EL)], threshold=1e-14)
    assert F(1, 1, 0, 0) == 0
    rows = F.to_sparse_csv(tmp_path / "s.csv")
    assert rows == 4
    head = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert head.startswith("aL_alpha1,aL_k1,bL_alpha1")


def test_product_elements_require_same_ids(small_spec, rng):
    a = OperatorMatrixElements(small_spec, np.eye(3), small_spec.box(0, 1))
    b = OperatorMatrixElements(small_spec, np.eye(5), small_spec.box(0, 2))
    with pytest.raises(ValueError):
        product_super_elements(a, b)


def test_elements_csv(tmp_path, small_spec, rng):
    ids = small_spec.box(0, 1)
    op = random_hs_operator(small_spec, rng)
    e = op_matrix_elements(small_spec, op, ids)
    e.to_csv(tmp_path / "e.csv")
    assert len((tmp_path / "e.csv").read_text().splitlines()) == 1 + len(ids) ** 2
    assert isinstance(op, OperatorMatrix)
    assert frame_matrix(small_spec, ids).shape == (small_spec.grid.size, len(ids))
