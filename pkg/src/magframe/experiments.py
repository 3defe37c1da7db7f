"""Verification experiments shared by the command line runner and the test-suite.

Each experiment takes an :class:`ExperimentConfig` and returns an
:class:`ExperimentResult` holding named checks and CSV-ready tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bounds import (Weight, boundedness_experiment, decay_table, fit_decay, flattened_schur,
                     random_hs_operator, schur_bound)
from .config import ExperimentConfig
from .frame import FrameSpec, Window, frame_matrix, parseval_defect
from .geometry import SampledField, UniformGrid
from .magnetics import Polynomial, VectorPotential, gauge_shift
from .matrixrep import (apply_super_via_elements, compose_super_elements, op_matrix_elements,
                        hs_isometry_check)
from .superweyl import (DoubleSymbol, constant_double, gaussian_bump, liouville_symbol,
                        product_symbol, schmidt_decompose, super_apply, super_matrix_elements,
                        superop_matrix_element_direct, tapered_trig_double)
from .weyl import (OperatorMatrix, Symbol, dequantize, hs_norm, identity_operator, op_compose,
                   quantize, wigner_grid)

__all__ = ["Check", "ExperimentResult", "run_experiment", "RUNNERS", "frame_spec",
           "random_vector", "random_schwartz_symbol", "symbol_family"]


@dataclass
class Check:
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{tag} {self.name}: {self.value:.3e} <= {self.threshold:.1e}{extra}"


@dataclass
class ExperimentResult:
    name: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name, value, threshold, detail="", op="le") -> Check:
        value = float(value)
        ok = value <= threshold if op == "le" else value >= threshold
        c = Check(name, value, float(threshold), bool(ok and np.isfinite(value)), detail)
        self.checks.append(c)
        return c


def frame_spec(cfg: ExperimentConfig, A: VectorPotential | None = None) -> FrameSpec:
    grid = UniformGrid(cfg.d, cfg.L, cfg.M)
    A = cfg.potential_object() if A is None else A
    return FrameSpec(grid, cfg.N, cfg.K, A, Window(cfg.window.delta, cfg.window.a))


def _rng(cfg: ExperimentConfig, tag: str) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, sum(ord(c) * 31**i for i, c in enumerate(tag)) % 2**32])


def random_vector(spec: FrameSpec, rng: np.random.Generator, terms: int = 3) -> SampledField:
    """Smooth wave packets well inside the safe box [-(N-1), N-1]^d."""
    g = spec.grid
    x = g.points()
    reach = max(spec.N - 1.0, 1.0)
    width = (0.5, 0.8) if g.d == 1 else (0.25, 0.35)
    centre = min(2.0, 0.4 * reach) if g.d == 1 else 0.6
    v = np.zeros(g.shape, dtype=complex)
    for _ in range(terms):
        c = rng.uniform(-centre, centre, size=g.d)
        s = rng.uniform(*width)
        p = rng.normal(scale=2.0, size=g.d)
        v += (rng.normal() + 1j * rng.normal()) * np.exp(
            -np.sum((x - c) ** 2, -1) / (2 * s**2) + 1j * (x @ p))
    return SampledField(g, v)


def random_schwartz_symbol(d: int, rng: np.random.Generator, terms: int = 2) -> Symbol:
    """Gaussian packets in phase space with random linear phases."""
    pars = []
    for _ in range(terms):
        pars.append((rng.normal() + 1j * rng.normal(), rng.uniform(-1.5, 1.5, d), rng.uniform(-2, 2, d),
                     rng.uniform(0.5, 0.9), rng.uniform(0.9, 1.5), rng.uniform(-0.5, 0.5, d),
                     rng.uniform(-0.5, 0.5, d)))

    def f(x, xi):
        out = 0
        for c, x0, k0, s, t, p, q in pars:
            out = out + c * np.exp(-np.sum((x - x0) ** 2, -1) / (2 * s**2)
                                   - np.sum((xi - k0) ** 2, -1) / (2 * t**2)
                                   + 1j * (x @ p + xi @ q))
        return out

    return Symbol(f, order=0.0, name="schwartz")


def symbol_family(cfg: ExperimentConfig) -> DoubleSymbol:
    """Double symbol selected by ``[symbol] family``."""
    s, d = cfg.symbol, cfg.d
    if s.family == "constant":
        return constant_double(d)
    if s.family == "tapered-trig":
        return tapered_trig_double(d, s.taper)
    if s.family == "gaussian":
        return product_symbol(gaussian_bump(d, 0.3, 0.2, s.width), gaussian_bump(d, -0.2, 0.4, s.width), d=d)
    if s.family == "liouville":
        return liouville_symbol(gaussian_bump(d, width=s.width), d)
    return DoubleSymbol.from_binary(s.path)


# ---- experiments ----------------------------------------------------------------

def run_verify_frame(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    spec = frame_spec(cfg)
    rng = _rng(cfg, "verify-frame")
    rows = []
    for t in range(cfg.trials):
        rows.append((t, parseval_defect(spec, random_vector(spec, rng))))
    worst = max(r[1] for r in rows)
    res.tables["parseval"] = (["trial", "defect"], rows)
    res.check("parseval_defect", worst, cfg.parseval_tol, f"{cfg.trials} vectors")


def run_quantize_roundtrip(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    A = cfg.potential_object()
    grid = UniformGrid(cfg.d, cfg.L, cfg.M)
    wg = wigner_grid(grid)
    rng = _rng(cfg, "quantize-roundtrip")
    rows = []
    for t in range(min(cfg.trials, 10)):
        f = random_schwartz_symbol(cfg.d, rng)
        ref = wg.sample(f)
        back = dequantize(A, quantize(A, f, grid))
        rows.append((t, (back - ref).norm() / ref.norm()))
    res.tables["roundtrip"] = (["trial", "rel_error"], rows)
    res.check("roundtrip_rel_error", max(r[1] for r in rows), cfg.tolerances.roundtrip)
    one = quantize(A, Symbol.constant(1.0), grid)
    ident = identity_operator(grid)
    err = np.abs(one.kernel - ident.kernel).max() / np.abs(ident.kernel).max()
    res.check("identity_kernel", err, cfg.tolerances.identity)
    # unitarity: ||op(f)||_HS / ||f||_L2 = (2 pi)^{-d/2}
    ratios = []
    for _ in range(min(cfg.trials, 10)):
        f = random_schwartz_symbol(cfg.d, rng)
        ratios.append(hs_norm(quantize(A, f, grid)) / wg.sample(f).norm())
    ratios = np.array(ratios)
    res.tables["unitarity"] = (["trial", "ratio"], list(enumerate(ratios)))
    res.check("unitarity_spread", (ratios.max() - ratios.min()) / ratios.mean(), cfg.tolerances.unitarity)
    res.check("unitarity_constant", abs(ratios.mean() * (2 * np.pi) ** (cfg.d / 2) - 1),
              cfg.tolerances.unitarity)


def random_gauge(d: int, rng: np.random.Generator) -> Polynomial:
    from .magnetics import grlex_exponents

    exps = grlex_exponents(d, 3)[1:]
    return Polynomial.from_dict(d, {e: rng.normal(scale=0.3 / (1 + sum(e))) for e in exps})


def run_gauge_covariance(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    A = cfg.potential_object()
    grid = UniformGrid(cfg.d, cfg.L, cfg.M)
    rng = _rng(cfg, "gauge-covariance")
    x = grid.flat_points()
    rows = []
    for t in range(min(cfg.trials, 5)):
        f = random_schwartz_symbol(cfg.d, rng)
        phi = random_gauge(cfg.d, rng)
        K = quantize(A, f, grid).kernel
        K2 = quantize(gauge_shift(A, phi), f, grid).kernel
        U = np.exp(1j * phi(x))
        ref = OperatorMatrix(grid, U[:, None] * K * np.conj(U)[None, :])
        rows.append((t, hs_norm(OperatorMatrix(grid, K2) - ref) / hs_norm(ref)))
    res.tables["gauge"] = (["trial", "rel_hs_error"], rows)
    res.check("gauge_covariance", max(r[1] for r in rows), cfg.tolerances.gauge)


def run_hs_isometry(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    spec = frame_spec(cfg)
    rng = _rng(cfg, "hs-isometry")
    G = frame_matrix(spec)
    rows = []
    for t in range(min(cfg.trials, 10)):
        op = random_hs_operator(spec, rng)
        rows.append((t, hs_isometry_check(spec, op, G)))
    res.tables["isometry"] = (["trial", "defect"], rows)
    res.check("hs_isometry", max(r[1] for r in rows), cfg.tolerances.isometry)


def random_rank_symbol(d: int, rng: np.random.Generator, rank: int) -> DoubleSymbol:
    terms = []
    for _ in range(rank):
        fl = gaussian_bump(d, rng.uniform(-1, 1, d), rng.uniform(-2, 2, d), rng.uniform(0.6, 1.0))
        fr = gaussian_bump(d, rng.uniform(-1, 1, d), rng.uniform(-2, 2, d), rng.uniform(0.6, 1.0))
        terms.append((complex(rng.normal(), rng.normal()), fl, fr))
    return DoubleSymbol(None, tuple(terms), (0.0, 0.0), f"rank-{rank}", d)


def _contained_operator(spec: FrameSpec, rng: np.random.Generator) -> OperatorMatrix:
    g = spec.grid
    x = g.flat_points()
    K = np.zeros((g.size, g.size), dtype=complex)
    for _ in range(3):
        a, b = rng.uniform(-1, 1, (2, g.d))
        p, q = rng.normal(size=(2, g.d))
        fx = np.exp(-np.sum((x - a) ** 2, -1) / 0.5 + 1j * x @ p)
        fy = np.exp(-np.sum((x - b) ** 2, -1) / 0.5 + 1j * x @ q)
        K += complex(rng.normal(), rng.normal()) * np.outer(fx, fy)
    op = OperatorMatrix(g, K)
    return op * (1 / hs_norm(op))


def run_product_formulas(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    spec = frame_spec(cfg)
    A = spec.A
    rng = _rng(cfg, "product-formulas")
    G = frame_matrix(spec)
    ids = np.arange(spec.n_ids)
    out = spec.box(1, 6)
    rows = []
    cases = [("product", random_rank_symbol(cfg.d, rng, 1)), ("rank-5", random_rank_symbol(cfg.d, rng, 5))]
    # composition partner
    Gs = random_rank_symbol(cfg.d, rng, 2)
    EG = super_matrix_elements(A, Gs, spec, ids, G=G)
    worst1 = worst2 = worst3 = 0.0
    for name, F in cases:
        E = super_matrix_elements(A, F, spec, ids, G=G)
        g = _contained_operator(spec, rng)
        ge = op_matrix_elements(spec, g, ids, G)
        lhs = apply_super_via_elements(E, ge, out).values
        ref = op_matrix_elements(spec, super_apply(A, F, g), ids, G).values[np.ix_(out, out)]
        e1 = np.linalg.norm(lhs - ref) / np.linalg.norm(ref)
        # composition: elements of F G applied to g, against dense F(G(g))
        FG = compose_super_elements(E, EG)
        lhs2 = apply_super_via_elements(FG, ge, out).values
        ref2 = op_matrix_elements(spec, super_apply(A, F, super_apply(A, Gs, g)), ids, G).values[np.ix_(out, out)]
        e2 = np.linalg.norm(lhs2 - ref2) / np.linalg.norm(ref2)
        # composed elements at octuples against the dense composite super operator
        e3 = _octuple_check(spec, A, F, Gs, FG, G, out, rng)
        rows.append((name, e1, e2, e3))
        worst1, worst2, worst3 = max(worst1, e1), max(worst2, e2), max(worst3, e3)
    res.tables["product_formulas"] = (["case", "apply_error", "compose_apply_error", "compose_element_error"], rows)
    tol = cfg.tolerances.product
    res.check("product_apply", worst1, tol)
    res.check("product_compose", max(worst2, worst3), tol)


def _rank_one(spec: FrameSpec, G: np.ndarray, b: int, a: int) -> OperatorMatrix:
    """|G_b><G_a| as a kernel on the grid."""
    return OperatorMatrix(spec.grid, np.outer(G[:, b], np.conj(G[:, a])))


def _octuple_check(spec, A, F, Gs, FG, G, out, rng, count: int = 6) -> float:
    w2 = spec.grid.weight ** 2
    vals, refs = [], []
    for _ in range(count):
        aL, bL, aR, bR = rng.choice(out, 4)
        r = super_apply(A, F, super_apply(A, Gs, _rank_one(spec, G, bL, aR)))
        refs.append(w2 * np.vdot(G[:, aL], r.kernel @ G[:, bR]))
        vals.append(FG.element(aL, bL, aR, bR))
    refs, vals = np.array(refs), np.array(vals)
    return float(np.max(np.abs(vals - refs)) / np.max(np.abs(refs)))


def factorization_error(spec: FrameSpec, A, fL: Symbol, fR: Symbol, rng, count: int = 50) -> float:
    """Dense 8-index elements of f_L (x) f_R against products of single-operator elements."""
    ids = spec.box(1, 8)
    G = frame_matrix(spec, ids)
    F = product_symbol(fL, fR, d=spec.d)
    eL = op_matrix_elements(spec, quantize(A, fL, spec.grid), ids, G).values
    eR = op_matrix_elements(spec, quantize(A, fR, spec.grid), ids, G).values
    w2 = spec.grid.weight ** 2
    errs, scale = [], 0.0
    for _ in range(count):
        aL, bL, aR, bR = rng.integers(0, len(ids), 4)
        r = super_apply(A, F, _rank_one(spec, G, bL, aR))
        dense = w2 * np.vdot(G[:, aL], r.kernel @ G[:, bR])
        errs.append(abs(dense - eL[aL, bL] * eR[aR, bR]))
        scale = max(scale, abs(dense))
    return float(max(errs) / max(scale, 1e-300))


def liouville_error(A, h: Symbol, grid: UniformGrid, rng, trials: int = 10) -> float:
    """max ||Op(L) rho + i[op(h), rho]||_HS / ||rho||_HS, L found by the skeleton route."""
    L = liouville_symbol(h, grid.d)
    dec = schmidt_decompose(DoubleSymbol(L.func, d=grid.d))
    H = quantize(A, h, grid)
    x = grid.flat_points()
    worst = 0.0
    for _ in range(trials):
        K = np.zeros((grid.size, grid.size), dtype=complex)
        for _ in range(3):
            a, b = rng.uniform(-1, 1, (2, grid.d))
            fx = np.exp(-np.sum((x - a) ** 2, -1) / 0.6 + 1j * x @ rng.normal(size=grid.d))
            fy = np.exp(-np.sum((x - b) ** 2, -1) / 0.6 + 1j * x @ rng.normal(size=grid.d))
            K += complex(rng.normal(), rng.normal()) * np.outer(fx, fy)
        rho = OperatorMatrix(grid, K)
        lhs = super_apply(A, dec, rho)
        comm = op_compose(H, rho) - op_compose(rho, H)
        worst = max(worst, hs_norm(lhs + comm * 1j) / hs_norm(rho))
    return worst


def run_liouville(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    A = cfg.potential_object()
    grid = UniformGrid(cfg.d, cfg.L, cfg.M)
    rng = _rng(cfg, "liouville")
    h = gaussian_bump(cfg.d, 0.2, 0.3, cfg.symbol.width)
    err = liouville_error(A, h, grid, rng, min(cfg.trials, 10))
    res.tables["liouville"] = (["quantity", "value"], [("max_rel_hs_defect", err)])
    res.check("liouville_identity", err, cfg.tolerances.liouville)
    spec = frame_spec(cfg)
    fe = factorization_error(spec, A, gaussian_bump(cfg.d, 0.3, 0.5, 0.8),
                             tapered_trig_double(cfg.d).terms[0][1], rng, 50 if cfg.d == 1 else 10)
    res.check("super_factorization", fe, cfg.tolerances.factorization)


def _weights(cfg: ExperimentConfig) -> list:
    n = cfg.boxes.max_weight
    return [Weight(a, a, b, b) for a in range(n + 1) for b in range(n + 1)]


def direct_cross_check(spec: FrameSpec, A, F: DoubleSymbol, rng, count: int = 10):
    """(octuples, schmidt values, direct values) on |alpha| <= 1, |k| <= 2."""
    ids = spec.box(1, 2)
    E = super_matrix_elements(A, F, spec, ids)
    pos = rng.integers(0, len(ids), size=(count, 4))
    schm = np.array([E.element(*p) for p in pos])
    direct = superop_matrix_element_direct(A, F, spec, ids[pos])
    return ids[pos], schm, direct


def run_super_decay(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    spec = frame_spec(cfg)
    A = spec.A
    F = symbol_family(cfg)
    rep = decay_table(A, F, spec, _weights(cfg), cfg.boxes.decay)
    verdicts = fit_decay(rep, cfg.tolerances.saturation)
    rows = [(k, b0, b1, s, v) for k, b0, b1, s, v in rep.rows()]
    res.tables["decay"] = (["weight", "n_alpha", "n_k", "n_ids", "weighted_sup"], rows)
    worst = max(v["rel_change"] for v in verdicts.values())
    res.check("decay_saturation", worst, cfg.tolerances.saturation,
              f"{sum(v['verdict'] == 'saturating' for v in verdicts.values())}/{len(verdicts)} saturating")
    res.check("decay_monotone", 0.0 if rep.monotone() else 1.0, 0.0)
    if cfg.d == 1:
        rng = _rng(cfg, "super-decay")
        octs, schm, direct = direct_cross_check(spec, A, _smooth_family(cfg), rng)
        rel = np.abs(schm - direct) / np.max(np.abs(schm))
        res.tables["direct"] = (["aL", "bL", "aR", "bR", "schmidt_re", "schmidt_im", "direct_re", "direct_im"],
                                [(*o, s.real, s.imag, t.real, t.imag) for o, s, t in zip(octs, schm, direct)])
        res.check("direct_vs_schmidt", rel.max(), cfg.tolerances.direct)


def _smooth_family(cfg: ExperimentConfig) -> DoubleSymbol:
    """Schwartz double symbol for the quadrature cross-check (F_Sigma F must fit the coarse grid)."""
    d = cfg.d
    return DoubleSymbol(None, ((1.0, gaussian_bump(d, 0.2, 0.1, 0.7), gaussian_bump(d, -0.1, 0.3, 0.6)),
                               (0.5j, gaussian_bump(d, -0.3, -0.2, 0.8), gaussian_bump(d, 0.1, 0.0, 0.7))),
                        (0.0, 0.0), "smooth", d)


def run_boundedness(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    spec = frame_spec(cfg)
    F = symbol_family(cfg)
    rep = boundedness_experiment(spec.A, F, spec, cfg.trials, cfg.boxes.schur, seed=cfg.seed,
                                 threads=cfg.threads)
    res.tables["ratios"] = (["trial", "hs_in", "hs_out", "ratio"], [(i, *t) for i, t in enumerate(rep.trials)])
    res.tables["schur"] = (["n_alpha", "n_k", "schur_constant"], [(*b, c) for b, c in zip(rep.boxes, rep.schur_constants)])
    res.check("ratio_below_schur", rep.max_ratio - rep.schur_constant, cfg.tolerances.schur,
              f"max ratio {rep.max_ratio:.6g}, Schur constant {rep.schur_constant:.6g}")
    c = rep.schur_constants
    drift = abs(c[-1] - c[-2]) / abs(c[-1]) if len(c) > 1 else 0.0
    res.check("schur_stability", drift, cfg.tolerances.saturation)
    res.info["max_ratio"] = rep.max_ratio


def run_schur_demo(cfg: ExperimentConfig, res: ExperimentResult) -> None:
    rng = _rng(cfg, "schur-demo")
    rows = []
    cases = [("identity", np.eye(8)), ("swap", np.array([[0.0, 1.0], [1.0, 0.0]]))]
    for t in range(min(cfg.trials, 10)):
        n = int(rng.integers(2, 40))
        cases.append((f"random-{t}", rng.uniform(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.3)))
    worst = -np.inf
    for name, K in cases:
        r = schur_bound(K)
        rows.append((name, r.row_sup, r.col_sup, r.constant, r.norm_estimate))
        worst = max(worst, r.norm_estimate - r.constant)
    spec = frame_spec(cfg)
    F = symbol_family(cfg)
    b = cfg.boxes.schur[0]
    E = super_matrix_elements(spec.A, F, spec, spec.box(*b))
    r = flattened_schur(E)
    rows.append((f"flattened-{F.name}", r.row_sup, r.col_sup, r.constant, r.norm_estimate))
    worst = max(worst, r.norm_estimate - r.constant)
    res.tables["schur"] = (["kernel", "row_sup", "col_sup", "constant", "norm_estimate"], rows)
    res.check("norm_below_schur", worst, cfg.tolerances.schur)


RUNNERS = {
    "verify-frame": run_verify_frame,
    "quantize-roundtrip": run_quantize_roundtrip,
    "gauge-covariance": run_gauge_covariance,
    "hs-isometry": run_hs_isometry,
    "product-formulas": run_product_formulas,
    "super-decay": run_super_decay,
    "boundedness": run_boundedness,
    "liouville": run_liouville,
    "schur-demo": run_schur_demo,
}


def run_experiment(name: str, cfg: ExperimentConfig) -> ExperimentResult:
    res = ExperimentResult(name)
    RUNNERS[name](cfg, res)
    return res
