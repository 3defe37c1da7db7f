import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from magframe.frame import (FrameCoefficients, FrameId, FrameSpec, TruncationWarning, Window,
                            analyze, frame_matrix, frame_vector, gramian, parseval_defect,
                            synthesize)
from magframe.geometry import SampledField, UniformGrid
from magframe.magnetics import constant_potential, symmetric_gauge


def packet(g, c=0.3, s=0.6, p=1.5):
    x = g.points()
    return SampledField(g, np.exp(-np.sum((x - c) ** 2, -1) / (2 * s**2) + 1j * p * np.sum(x, -1)))


@given(st.floats(-0.5, 1.5))
def test_window_partition_of_unity(t):
    w = Window()
    total = sum(w.chi0(t - n) ** 2 for n in range(-3, 4))
    assert np.isclose(total, 1.0, atol=1e-13)


def test_window_support_and_plateau():
    w = Window()
    assert w.chi0(0.0) == 1.0 and w.chi0(0.005) == 1.0
    assert w.chi0(0.995) == 0.0 and w.chi0(1.5) == 0.0


def test_frame_vector_norm(small_spec):
    v = frame_vector(small_spec, FrameId((1,), (3,)))
    assert np.isclose(v.norm() ** 2, 1 / (2 * np.pi), rtol=1e-10)


def test_gramian_hermitian(small_spec):
    a, b = FrameId((0,), (2,)), FrameId((1,), (-1,))
    assert np.isclose(gramian(small_spec, a, b), np.conj(gramian(small_spec, b, a)))
    assert gramian(small_spec, FrameId((0,), (0,)), FrameId((3,), (0,))) == 0


def test_spec_invariants():
    g = UniformGrid(1, 8.0, 64)
    with pytest.raises(ValueError):
        FrameSpec(g, 8, 4)  # L < N + 1
    with pytest.raises(ValueError):
        FrameSpec(g, 3, 13)  # 2K >= M pi / L


def test_index_roundtrip(small_spec):
    for i in (0, 17, small_spec.n_ids - 1):
        assert small_spec.index(small_spec.frame_id(i)) == i
    with pytest.raises(IndexError):
        small_spec.index(FrameId((9,), (0,)))


def test_analyze_matches_frame_matrix(small_spec):
    psi = packet(small_spec.grid)
    G = frame_matrix(small_spec)
    ref = small_spec.grid.weight * (G.conj().T @ psi.values)
    assert np.allclose(analyze(small_spec, psi).flat, ref)


def test_parseval_d1(spec1):
    for A in (None, constant_potential([0.7])):
        spec = FrameSpec(spec1.grid, spec1.N, spec1.K, A)
        assert parseval_defect(spec, packet(spec.grid)) < 1e-8


def test_parseval_d2_magnetic():
    spec = FrameSpec(UniformGrid(2, 4.0, 96), 3, 32, symmetric_gauge(1.0))
    x = spec.grid.points()
    psi = SampledField(spec.grid, np.exp(-np.sum((x - 0.2) ** 2, -1) / (2 * 0.3**2)))
    assert parseval_defect(spec, psi) < 1e-5


def test_synthesis_reconstructs(spec1):
    psi = packet(spec1.grid)
    back = synthesize(spec1, analyze(spec1, psi))
    assert (back - psi).norm() / psi.norm() < 1e-6


def test_truncation_warning(small_spec):
    with pytest.warns(TruncationWarning):
        analyze(small_spec, packet(small_spec.grid, c=4.5))


def test_zero_vector_rejected(small_spec):
    with pytest.raises(ValueError):
        parseval_defect(small_spec, SampledField(small_spec.grid, np.zeros(small_spec.grid.shape)))


def test_coefficients_csv(tmp_path, small_spec):
    c = analyze(small_spec, packet(small_spec.grid))
    c.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "alpha1,k1,re,im"
    assert len(lines) == small_spec.n_ids + 1
    assert isinstance(c, FrameCoefficients)
