import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magframe.geometry import PhasePoint, PhaseSpaceGrid, SampledField, UniformGrid
from magframe.magnetics import Polynomial, constant_potential, gauge_shift, symmetric_gauge, zero_potential
from magframe.weyl import (OperatorMatrix, Symbol, dequantize, hs_norm, identity_operator,
                           op_compose, quantize, seminorm_estimate, weyl_system_apply,
                           wigner_grid)

G1 = UniformGrid(1, 8.0, 256)


def gauss_symbol(x0=0.2, k0=0.5, s=0.7, t=1.1):
    return Symbol(lambda x, xi: np.exp(-(x[..., 0] - x0) ** 2 / (2 * s**2) - (xi[..., 0] - k0) ** 2 / (2 * t**2)))


def test_quantize_one_is_identity():
    for A in (zero_potential(1), constant_potential([0.4])):
        K = quantize(A, Symbol.constant(1.0), G1).kernel
        assert np.allclose(K, identity_operator(G1).kernel, atol=1e-10 / G1.h)


def test_momentum_symbol_is_minus_i_derivative():
    op = quantize(zero_potential(1), Symbol(lambda x, xi: xi[..., 0] + 0 * x[..., 0]), G1)
    x = G1.axis
    psi = SampledField(G1, np.exp(-x**2))
    got = op.apply(psi).values
    assert np.allclose(got, 2j * x * np.exp(-x**2), atol=1e-8)


def test_roundtrip_d1():
    A = constant_potential([0.3])
    f = gauss_symbol()
    wg = wigner_grid(G1)
    back = dequantize(A, quantize(A, f, G1))
    ref = wg.sample(f)
    assert (back - ref).norm() / ref.norm() < 1e-8


def test_real_symbol_gives_selfadjoint_operator():
    op = quantize(symmetric_gauge(0.8), Symbol(lambda x, xi: np.exp(-np.sum(x**2 + xi**2, -1))),
                  UniformGrid(2, 4.0, 24))
    assert np.allclose(op.kernel, op.kernel.conj().T, atol=1e-13)


def test_unitarity_constant():
    f = gauss_symbol()
    op = quantize(zero_potential(1), f, G1)
    ratio = hs_norm(op) / wigner_grid(G1).sample(f).norm()
    assert ratio == pytest.approx((2 * np.pi) ** -0.5, rel=1e-10)


@given(st.floats(-0.5, 0.5), st.floats(-0.3, 0.3))
def test_gauge_covariance(c1, c2):
    A = constant_potential([0.2])
    phi = Polynomial.from_dict(1, {(1,): c1, (2,): c2})
    x = G1.flat_points()
    U = np.exp(1j * phi(x))
    f = gauss_symbol()
    K = quantize(A, f, G1).kernel
    K2 = quantize(gauge_shift(A, phi), f, G1).kernel
    assert np.allclose(K2, U[:, None] * K * np.conj(U)[None, :], atol=1e-12)


def test_weyl_system_integer_shift():
    g = UniformGrid(1, 8.0, 64)  # h = 1/4, shift by 4 samples
    x = g.axis
    psi = SampledField(g, np.exp(-(x**2)))
    out = weyl_system_apply(zero_potential(1), PhasePoint([1.0], [0.5]), psi)
    ref = np.exp(-0.5j * (x + 0.5)) * np.exp(-((x + 1.0) ** 2))
    assert np.allclose(out.values, ref, atol=1e-12)


def test_weyl_system_overflow():
    g = UniformGrid(1, 4.0, 64)
    psi = SampledField(g, np.exp(-(g.axis - 3.0) ** 2))
    with pytest.raises(ValueError, match="support overflow"):
        weyl_system_apply(zero_potential(1), PhasePoint([-3.0], [0.0]), psi)


def test_weyl_system_is_unitary():
    g = UniformGrid(1, 8.0, 128)
    psi = SampledField(g, np.exp(-(g.axis - 0.5) ** 2 + 1j * g.axis))
    out = weyl_system_apply(constant_potential([0.6]), PhasePoint([0.37], [1.3]), psi)
    assert out.norm() == pytest.approx(psi.norm(), rel=1e-12)


def test_compose_and_hs():
    I = identity_operator(G1)
    op = quantize(zero_potential(1), gauss_symbol(), G1)
    assert np.allclose(op_compose(I, op).kernel, op.kernel)
    assert hs_norm(op * 2.0) == pytest.approx(2 * hs_norm(op))


def test_operator_binary_roundtrip(tmp_path):
    op = quantize(zero_potential(1), gauss_symbol(), UniformGrid(1, 4.0, 32))
    op.save(tmp_path / "op.bin")
    back = OperatorMatrix.load(tmp_path / "op.bin")
    assert back.grid == op.grid and np.array_equal(back.kernel, op.kernel)


def test_seminorm_estimate_gaussian():
    pg = PhaseSpaceGrid.dual_of(UniformGrid(1, 6.0, 96))  # x = 1 is a grid point
    f = Symbol(lambda x, xi: np.exp(-(x[..., 0] ** 2) / 2 - xi[..., 0] ** 2 / 2))
    # sup |d_x f| = exp(-1/2)
    assert seminorm_estimate(f, [1], [0], pg) == pytest.approx(np.exp(-0.5), rel=1e-4)
    with pytest.raises(ValueError):
        seminorm_estimate(f, [3], [2], pg)
