"""Acceptance criteria AC1-AC12 at their stated tolerances.

Every test records one PASS/FAIL line; the lines are repeated in the pytest
terminal summary and printed directly when the module runs as a script.
"""
import filecmp
import sys
import warnings

import numpy as np
import pytest

from magframe.cli import main as cli_main
from magframe.config import ExperimentConfig, PotentialConfig
from magframe.experiments import (direct_cross_check, factorization_error, frame_spec,
                                  liouville_error, random_schwartz_symbol, random_vector,
                                  run_experiment, _smooth_family)
from magframe.bounds import Weight, boundedness_experiment, decay_table, fit_decay
from magframe.frame import FrameSpec, parseval_defect
from magframe.geometry import UniformGrid
from magframe.magnetics import circulation, constant_potential, symmetric_gauge, zero_potential
from magframe.superweyl import (constant_double, gaussian_bump, liouville_symbol, product_symbol,
                                tapered_trig_double)
from magframe.weyl import Symbol, dequantize, hs_norm, identity_operator, quantize, wigner_grid

RESULTS: dict = {}


def record(ac: str, passed: bool, detail: str) -> None:
    line = f"{ac} {'PASS' if passed else 'FAIL'}: {detail}"
    RESULTS[ac] = line
    print(line)
    assert passed, line


D1 = dict(d=1, L=8.0, M=512, N=7, K=64)
D2_FRAME = dict(d=2, L=4.0, M=96, N=3, K=32)
D2_MAG = dict(d=2, L=4.0, M=48, N=3, K=6)


def cfg_of(base, **kw) -> ExperimentConfig:
    c = ExperimentConfig(**{**base, **kw})
    return c.validate()


def test_ac01_parseval_frame():
    worst = {1: 0.0, 2: 0.0}
    rng = np.random.default_rng(101)
    for base, pots in ((D1, [zero_potential(1), constant_potential([0.7])]),
                       (D2_FRAME, [zero_potential(2), constant_potential([0.5, -0.3]), symmetric_gauge(1.0)])):
        grid = UniformGrid(base["d"], base["L"], base["M"])
        for A in pots:
            spec = FrameSpec(grid, base["N"], base["K"], A)
            for _ in range(20):
                worst[base["d"]] = max(worst[base["d"]], parseval_defect(spec, random_vector(spec, rng)))
    ok = worst[1] <= 1e-8 and worst[2] <= 1e-5
    record("AC1", ok, f"max Parseval defect d=1 {worst[1]:.2e} (<=1e-8), d=2 {worst[2]:.2e} (<=1e-5)")


def test_ac02_quantization_roundtrip():
    grid = UniformGrid(1, 8.0, 512)
    wg = wigner_grid(grid)
    rng = np.random.default_rng(202)
    A = constant_potential([0.4])
    worst = 0.0
    for _ in range(10):
        f = random_schwartz_symbol(1, rng)
        ref = wg.sample(f)
        worst = max(worst, (dequantize(A, quantize(A, f, grid)) - ref).norm() / ref.norm())
    ident = identity_operator(grid).kernel
    id_err = max(np.abs(quantize(B, Symbol.constant(1.0), grid).kernel - ident).max() / np.abs(ident).max()
                 for B in (zero_potential(1), A))
    record("AC2", worst <= 1e-8 and id_err <= 1e-10,
           f"round-trip rel L2 error {worst:.2e} (<=1e-8), op(1) vs identity {id_err:.2e} (<=1e-10)")


def _gl_hs_ratio(f, A, L=8.0, n=160, nk=240) -> float:
    """||op(f)||_HS / ||f||_L2 by Gauss-Legendre quadrature of the kernel integral."""
    t, w = np.polynomial.legendre.leggauss(n)
    x, wx = L * t, L * w
    tk, wk = np.polynomial.legendre.leggauss(nk)
    xi, wxi = 20.0 * tk, 20.0 * wk
    X, Y = np.meshgrid(x, x, indexing="ij")
    mid = 0.5 * (X + Y)
    K = np.zeros_like(X, dtype=complex)
    for k, wkk in zip(xi, wxi):
        K += wkk * np.exp(1j * k * (X - Y)) * f(mid[..., None], np.full(mid.shape + (1,), k))
    K *= circulation(A, X[..., None], Y[..., None]) / (2 * np.pi)
    hs2 = np.einsum("i,j,ij->", wx, wx, np.abs(K) ** 2)
    XX, KK = np.meshgrid(x, xi, indexing="ij")
    f2 = np.einsum("i,j,ij->", wx, wxi, np.abs(f(XX[..., None], KK[..., None])) ** 2)
    return float(np.sqrt(hs2 / f2))


def test_ac03_unitarity_constant():
    grid = UniformGrid(1, 8.0, 512)
    wg = wigner_grid(grid)
    rng = np.random.default_rng(303)
    ratios = []
    syms = [random_schwartz_symbol(1, rng) for _ in range(10)]
    for A in (zero_potential(1), constant_potential([0.6])):
        for f in syms:
            ratios.append(hs_norm(quantize(A, f, grid)) / wg.sample(f).norm())
    ratios = np.array(ratios)
    spread = (ratios.max() - ratios.min()) / ratios.mean()
    oracle = _gl_hs_ratio(syms[0], constant_potential([0.6]))
    dev = abs(ratios.mean() - oracle) / oracle
    record("AC3", spread <= 1e-6 and dev <= 1e-6,
           f"ratio {ratios.mean():.12f}, spread {spread:.2e} (<=1e-6), "
           f"dense-quadrature oracle {oracle:.12f}, deviation {dev:.2e} (<=1e-6)")


def test_ac04_gauge_covariance():
    res = run_experiment("gauge-covariance", cfg_of(D1, trials=5, potential=PotentialConfig("constant", [0.3])))
    v = res.checks[0].value
    record("AC4", res.passed and len(res.tables["gauge"][1]) == 5, f"max rel HS defect {v:.2e} (<=1e-8) over 5 pairs")


def test_ac05_hs_isometry():
    res = run_experiment("hs-isometry", cfg_of(D1, trials=10, potential=PotentialConfig("constant", [0.3])))
    record("AC5", res.passed, f"max HS isometry defect {res.checks[0].value:.2e} (<=1e-7) over 10 operators")


def test_ac06_product_formulas():
    res = run_experiment("product-formulas", cfg_of(D1))
    vals = {c.name: c.value for c in res.checks}
    record("AC6", res.passed,
           f"apply contraction {vals['product_apply']:.2e}, composition {vals['product_compose']:.2e} (<=1e-6), "
           "product and rank-5 symbols")


def test_ac07_super_factorization():
    spec = frame_spec(cfg_of(D1, potential=PotentialConfig("constant", [0.3])))
    rng = np.random.default_rng(707)
    err = factorization_error(spec, spec.A, gaussian_bump(1, 0.3, 0.5, 0.8),
                              gaussian_bump(1, -0.4, -0.2, 0.7), rng, 50)
    record("AC7", err <= 1e-9, f"max rel factorization error {err:.2e} (<=1e-9) over 50 octuples")


def test_ac08_liouville_identity():
    rng = np.random.default_rng(808)
    e1 = liouville_error(zero_potential(1), gaussian_bump(1, 0.2, 0.3, 0.7), UniformGrid(1, 8.0, 512), rng, 10)
    e2 = liouville_error(symmetric_gauge(1.0), gaussian_bump(2, 0.2, 0.3, 0.7),
                         UniformGrid(2, D2_MAG["L"], D2_MAG["M"]), rng, 10)
    record("AC8", max(e1, e2) <= 1e-8, f"rel HS defect A=0 (d=1) {e1:.2e}, constant B (d=2) {e2:.2e} (<=1e-8)")


def test_ac09_decay_characterization():
    spec = frame_spec(cfg_of(D1))
    weights = [Weight(n, n, s, s) for n in range(5) for s in range(5)]
    boxes = [(1, 12), (2, 20), (3, 28)]
    worst, count, mono = 0.0, 0, True
    for F in (constant_double(1), tapered_trig_double(1)):
        rep = decay_table(spec.A, F, spec, weights, boxes)
        mono = mono and rep.monotone()
        for v in fit_decay(rep).values():
            worst = max(worst, v["rel_change"])
            count += v["verdict"] == "saturating"
    record("AC9", worst < 0.05 and mono and count == 50,
           f"{count}/50 weighted sups saturate, max relative change between largest boxes {worst:.2e} (<5e-2)")


def test_ac10_boundedness():
    spec = frame_spec(cfg_of(D1))
    fams = {
        "gaussian-product": product_symbol(gaussian_bump(1, 0.3, 0.2, 0.7), gaussian_bump(1, -0.2, 0.4, 0.7)),
        "tapered-trig": tapered_trig_double(1),
        "liouville": liouville_symbol(gaussian_bump(1, width=0.7)),
    }
    parts, ok = [], True
    for i, (name, F) in enumerate(fams.items()):
        rep = boundedness_experiment(spec.A, F, spec, 20, [(1, 24), (1, 32)], seed=1000 + i)
        drift = abs(rep.schur_constants[1] - rep.schur_constants[0]) / rep.schur_constants[1]
        good = rep.dominated(1e-6) and drift <= 0.05 and np.isfinite(rep.schur_constant)
        ok = ok and good
        parts.append(f"{name}: ratio {rep.max_ratio:.4f} <= C {rep.schur_constant:.4f}, drift {drift:.1e}")
    record("AC10", ok, "; ".join(parts))


def test_ac11_direct_vs_schmidt():
    spec = frame_spec(cfg_of(D1))
    rng = np.random.default_rng(1111)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, schm, direct = direct_cross_check(spec, spec.A, _smooth_family(cfg_of(D1)), rng, 10)
    rel = float(np.max(np.abs(schm - direct)) / np.max(np.abs(schm)))
    record("AC11", rel <= 1e-3, f"max relative deviation {rel:.2e} (<=1e-3) on 10 octuples")


def test_ac12_determinism(tmp_path):
    cfg = tmp_path / "c.toml"
    cfg.write_text('L = 6.0\nM = 256\nN = 4\nK = 40\ntrials = 4\n[symbol]\nfamily = "tapered-trig"\n'
                   "[boxes]\nschur = [[1, 8], [1, 12]]\n")
    for run in range(2):
        for exp in ("verify-frame", "boundedness"):
            cli_main([exp, "--config", str(cfg), "--out", str(tmp_path / f"{exp}-{run}"), "--seed", "42"])
    same = True
    files = 0
    for exp in ("verify-frame", "boundedness"):
        a, b = tmp_path / f"{exp}-0", tmp_path / f"{exp}-1"
        names = sorted(p.name for p in a.glob("*.csv"))
        files += len(names)
        _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
        same = same and not mismatch and not errors and bool(names)
    record("AC12", same, f"{files} CSV files byte-identical across two seeded runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
