import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from magframe.bounds import (DecayReport, Weight, boundedness_experiment, decay_table, fit_decay,
                             flattened_schur, schur_bound)
from magframe.matrixrep import SuperMatrixElements
from magframe.superweyl import DoubleSymbol, constant_double, gaussian_bump, product_symbol
from magframe.magnetics import zero_potential


def test_schur_identity_and_swap():
    r = schur_bound(np.eye(5))
    assert r.constant == 1 and r.norm_estimate == pytest.approx(1.0)
    r = schur_bound(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert r.constant == 1 and r.norm_estimate == pytest.approx(1.0)


def test_schur_empty():
    with pytest.raises(ValueError):
        schur_bound(np.zeros((0, 0)))


@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.floats(0, 10)))
def test_schur_dominates_norm(K):
    r = schur_bound(K)
    assert r.norm_estimate <= r.constant * (1 + 1e-9) + 1e-12


def test_flattened_factored_matches_dense(small_spec, rng):
    ids = small_spec.box(0, 2)
    n = len(ids)
    EL = rng.normal(size=(2, n, n)) + 1j * rng.normal(size=(2, n, n))
    ER = rng.normal(size=(2, n, n))
    terms = [(1.0, EL[0], ER[0]), (0.5j, EL[1], ER[1])]
    E = SuperMatrixElements(small_spec, ids, terms=terms, threshold=0)
    Eg = SuperMatrixElements(small_spec, ids, func=lambda *i: complex(E(*i)), threshold=0)
    a, b = flattened_schur(E), flattened_schur(Eg)
    assert a.row_sup == pytest.approx(b.row_sup) and a.col_sup == pytest.approx(b.col_sup)
    assert a.norm_estimate == pytest.approx(b.norm_estimate, rel=1e-6)


def test_fit_decay_synthetic():
    rep = DecayReport([(1, 1), (1, 2), (1, 4)], [10, 20, 40], {"flat": [2.0, 2.0, 2.0], "lin": [1.0, 2.0, 4.0]})
    v = fit_decay(rep)
    assert v["flat"]["verdict"] == "saturating"
    assert v["lin"]["verdict"] == "growing" and v["lin"]["rate"] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        fit_decay(DecayReport([(1, 1), (1, 2)], [1, 2], {"a": [1.0, 1.0]}))


def test_decay_table_constant_symbol(small_spec):
    rep = decay_table(zero_potential(1), constant_double(1), small_spec,
                      [Weight(0, 0, 0, 0), Weight(2, 2, 2, 2)], [(1, 4), (1, 8), (2, 12)])
    assert rep.monotone()
    assert all(v["verdict"] == "saturating" for v in fit_decay(rep).values())
    # weight 0: sup |gram|^2 = (2 pi)^-2
    assert rep.sups[Weight().key()][-1] == pytest.approx((2 * np.pi) ** -2, rel=1e-8)


def test_decay_boxes_must_nest(small_spec):
    with pytest.raises(ValueError):
        decay_table(zero_potential(1), constant_double(1), small_spec, [Weight()], [(2, 4), (1, 8), (2, 12)])


def test_boundedness_identity(small_spec):
    rep = boundedness_experiment(zero_potential(1), constant_double(1), small_spec, 3, [(1, 12)])
    assert np.allclose([t[2] for t in rep.trials], 1.0)
    assert rep.schur_constant >= 1.0 and rep.dominated()


def test_boundedness_refuses_positive_order(small_spec):
    F = DoubleSymbol(None, ((1.0, gaussian_bump(1), gaussian_bump(1)),), (1.0, 0.0), "bad", 1)
    with pytest.raises(ValueError, match="order"):
        boundedness_experiment(zero_potential(1), F, small_spec, 1, [(1, 4)])


def test_boundedness_product_bound(small_spec):
    from magframe.weyl import quantize

    fL, fR = gaussian_bump(1, 0.2, 0.0, 0.8), gaussian_bump(1, -0.3, 0.5, 0.9)
    F = product_symbol(fL, fR)
    rep = boundedness_experiment(zero_potential(1), F, small_spec, 4, [(1, 12)])
    g = small_spec.grid

    def opnorm(f):
        return np.linalg.norm(g.weight * quantize(zero_potential(1), f, g).kernel, 2)

    assert rep.max_ratio <= opnorm(fL) * opnorm(fR) * (1 + 1e-9)
