"""Acceptance suite: every exit criterion with its stated tolerance.

Each criterion is a function returning a CriterionResult; run_acceptance
evaluates a selection and the CLI `verify` subcommand prints one
pass/fail line per criterion.  Tolerances are pinned here and can be
overridden by name (e.g. from a config's [tolerances] section), which is
how deliberately-failing profiles are built.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import bergmanweil as bw
from . import capacity as cap
from . import multiindex as mi
from . import toeplitz as tp
from . import widths as wd
from .bergman import RadialWeight, kernel_diagonal, ma_density
from .errors import WidthlabError

SEED = 20260810

DEFAULT_TOLERANCES = {
    "c1_width_rtol": 1e-12,
    "c1_slope_atol": 1e-10,
    "c1_seconds": 1.0,
    "c2_slope_rtol": 0.05,
    "c2_seconds": 30.0,
    "c3_main_atol": 0.05,
    "c3_robust_atol": 0.08,
    "c3_seconds": 10.0,
    "c4_lo": 0.98,
    "c4_hi": 1.02,
    "c4_seconds": 5.0,
    "c5_rtol": 1e-8,
    "c5_exact_rtol": 1e-12,
    "c6_bound_value_atol": 1e-6,
    "c7_rtol": 1e-12,
    "c8_rtol": 0.01,
    "c8_seconds": 60.0,
    "c9_rtol": 1e-12,
    "c9_hefer_tol": 1e-12,
    "c10_slope_rtol": 0.10,
}


@dataclass
class CriterionResult:
    cid: int
    name: str
    tags: tuple[str, ...]
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  C{self.cid:02d} {self.name} [{self.seconds:.2f}s]: {self.detail}"


def _tol(overrides: dict | None, key: str) -> float:
    if overrides and key in overrides:
        return float(overrides[key])
    return DEFAULT_TOLERANCES[key]


def criterion_1(overrides=None) -> CriterionResult:
    """Exact 1D width law d_m = 2^-m and slope log 2."""
    t0 = time.perf_counter()
    tol = _tol(overrides, "c1_width_rtol")
    cond = cap.ReinhardtCondenser((1.0,), (0.5,))
    table = wd.embedding_widths(cond, M=64)
    m = np.arange(1, 65)
    # |log d_m + m log 2| bounds the relative deviation of d_m from 2^-m
    width_dev = float(np.max(np.abs(table.log_d + m * math.log(2.0))))
    est = wd.slope_estimate(table, 1)
    target = wd.target_slope(2.0 * math.pi / math.log(2.0), 1)
    slope_dev = abs(est.slope - target)
    elapsed = time.perf_counter() - t0
    ok = (
        width_dev <= tol
        and slope_dev <= _tol(overrides, "c1_slope_atol")
        and elapsed < _tol(overrides, "c1_seconds")
    )
    detail = (
        f"max |log d_m + m log2| = {width_dev:.2e} (tol {tol:.1e}); "
        f"|slope - log2| = {slope_dev:.2e} (tol {_tol(overrides, 'c1_slope_atol'):.1e})"
    )
    return CriterionResult(1, "exact 1D width law", ("closed-form",), ok, detail, elapsed)


def criterion_2(overrides=None) -> CriterionResult:
    """n=2 main-theorem slope at M=20000, improving when M doubles."""
    t0 = time.perf_counter()
    tol = _tol(overrides, "c2_slope_rtol")
    cond = cap.ReinhardtCondenser((1.0, 1.0), (0.5, 0.5))
    target = math.sqrt(2.0) * math.log(2.0)
    rels = []
    for M in (20_000, 40_000):
        est = wd.slope_estimate(wd.embedding_widths(cond, M=M), 2)
        rels.append(abs(est.slope - target) / target)
    elapsed = time.perf_counter() - t0
    ok = rels[0] <= tol and rels[1] < rels[0] and elapsed < _tol(overrides, "c2_seconds")
    detail = (
        f"rel err {rels[0]:.5f} at M=2e4 (tol {tol}); {rels[1]:.5f} at M=4e4 "
        f"(decreasing: {rels[1] < rels[0]})"
    )
    return CriterionResult(2, "n=2 slope convergence", ("convergence",), ok, detail, elapsed)


def criterion_3(overrides=None) -> CriterionResult:
    """Toeplitz eigenvalue concentration at k=200 with threshold robustness."""
    t0 = time.perf_counter()
    w = RadialWeight((1.0,), (1.0,))
    sym = tp.SymbolSpec.disc(0.6)
    devs = {}
    for gamma in (0.5, 0.1, 0.9):
        scan = tp.concentration_scan(w, sym, gamma, [200])
        devs[gamma] = abs(scan.rows[-1]["count_over_kn"] - scan.target)
    elapsed = time.perf_counter() - t0
    main_tol = _tol(overrides, "c3_main_atol")
    rob_tol = _tol(overrides, "c3_robust_atol")
    ok = (
        devs[0.5] <= main_tol
        and devs[0.1] <= rob_tol
        and devs[0.9] <= rob_tol
        and elapsed < _tol(overrides, "c3_seconds")
    )
    detail = (
        f"|count/k - 0.72|: gamma=0.5 -> {devs[0.5]:.4f} (tol {main_tol}), "
        f"gamma=0.1 -> {devs[0.1]:.4f}, gamma=0.9 -> {devs[0.9]:.4f} (tol {rob_tol})"
    )
    return CriterionResult(3, "Toeplitz concentration", ("concentration",), ok, detail, elapsed)


def criterion_4(overrides=None) -> CriterionResult:
    """Semiclassical kernel density ratio at z=0.3, k=200."""
    t0 = time.perf_counter()
    w = RadialWeight((1.0,), (1.0,))
    k = 200.0
    kd = kernel_diagonal(w, k, (0.3,))
    log_ratio = kd.log_value - 2.0 * k * w.phi((0.3,)) - math.log(k) - math.log(
        ma_density(w, (0.3,))
    )
    ratio = math.exp(log_ratio)
    elapsed = time.perf_counter() - t0
    lo, hi = _tol(overrides, "c4_lo"), _tol(overrides, "c4_hi")
    ok = lo <= ratio <= hi and elapsed < _tol(overrides, "c4_seconds")
    detail = f"ratio = {ratio:.12f}, window [{lo}, {hi}]"
    return CriterionResult(4, "Bergman density ratio", ("density",), ok, detail, elapsed)


def criterion_5(overrides=None) -> CriterionResult:
    """Trace identities: eigen-sums vs quadrature, plus the exact 1/3 and 1/15."""
    t0 = time.perf_counter()
    rtol = _tol(overrides, "c5_rtol")
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(1, 3))
        k = float(rng.uniform(0.0, 3.0))
        tau = tuple(float(v) for v in rng.uniform(0.5, 2.0, n))
        R = tuple(float(v) for v in rng.uniform(0.9, 1.2, n))
        if rng.random() < 0.5:
            outer = tuple(float(u * v) for u, v in zip(rng.uniform(0.35, 0.7, n), R))
            inner = (0.0,) * n
            kind = "polydisc" if n > 1 else "radial-disc"
        else:
            outer = tuple(float(u * v) for u, v in zip(rng.uniform(0.45, 0.7, n), R))
            inner = tuple(float(v * f) for v, f in zip(outer, rng.uniform(0.3, 0.7, n)))
            kind = "polydisc" if n > 1 else "radial-annulus"
        sym = tp.SymbolSpec(kind, inner, outer)
        w = RadialWeight(tau, R)
        rec = tp.traces(tp.spectrum(w, k, sym), rel_tol=rtol)
        worst = max(
            worst,
            abs(rec.tr1_eigen - rec.tr1_integral) / rec.tr1_eigen,
            abs(rec.tr2_eigen - rec.tr2_integral) / rec.tr2_eigen,
        )
    w0 = RadialWeight((1.0,), (1.0,))
    table0 = tp.spectrum(w0, 0.0, tp.SymbolSpec.disc(0.5))
    tr1 = float(np.sum(table0.lambdas))
    tr2 = float(np.sum(table0.lambdas**2))
    exact_rtol = _tol(overrides, "c5_exact_rtol")
    exact_ok = math.isclose(tr1, 1.0 / 3.0, rel_tol=exact_rtol) and math.isclose(
        tr2, 1.0 / 15.0, rel_tol=exact_rtol
    )
    elapsed = time.perf_counter() - t0
    ok = worst <= rtol and exact_ok
    detail = (
        f"worst eigen/quadrature deviation {worst:.2e} (tol {rtol:.1e}); "
        f"Tr={tr1:.15f} vs 1/3, Tr^2={tr2:.15f} vs 1/15 (tol {exact_rtol:.1e})"
    )
    return CriterionResult(5, "trace identities", ("traces",), ok, detail, elapsed)


def criterion_6(overrides=None) -> CriterionResult:
    """Bergman-Weil bound dominance on random condensers and the m=5 example."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 6)
    violations = 0
    worst_margin = math.inf
    for _ in range(20):
        n = int(rng.integers(1, 4))
        a = tuple(float(v) for v in rng.uniform(0.8, 1.5, n))
        alpha = rng.uniform(0.1, 0.9, n)
        b = tuple(float(av * al) for av, al in zip(a, alpha))
        cond = cap.ReinhardtCondenser(a, b)
        spec = bw.ApproximantSpec(cond, 1)
        measured = bw.measured_error_profile(spec, 200)
        for m in range(0, 201):
            bound = bw.error_bound(spec, m)
            margin = bound.value - measured[m]
            worst_margin = min(worst_margin, margin / bound.value)
            if measured[m] > bound.value:
                violations += 1
    cond0 = cap.ReinhardtCondenser((1.0,), (0.5,))
    spec0 = bw.ApproximantSpec(cond0, 5)
    meas5 = bw.measured_error(spec0)
    bound5 = bw.error_bound(spec0).value
    atol = _tol(overrides, "c6_bound_value_atol")
    example_ok = (
        math.isclose(meas5, 0.0625, rel_tol=1e-12)
        and abs(bound5 - 0.090168) <= atol
        and meas5 <= bound5
    )
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and example_ok
    detail = (
        f"{violations} violations over 20 condensers x m<=200 "
        f"(smallest relative margin {worst_margin:.3f}); "
        f"example m=5: {meas5:.6f} <= {bound5:.6f}"
    )
    return CriterionResult(6, "Bergman-Weil bound dominance", ("closed-form",), ok, detail, elapsed)


def criterion_7(overrides=None) -> CriterionResult:
    """Sublevel capacity scaling, exact on radial condensers."""
    t0 = time.perf_counter()
    rtol = _tol(overrides, "c7_rtol")
    cond = cap.ReinhardtCondenser((1.0,), (0.25,))
    scaling = cap.sublevel_scale(cond, 0.5)
    base = cap.product_capacity(cond).value
    doubling_ok = math.isclose(scaling.capacity.value, 2.0 * base, rel_tol=rtol)
    radius_ok = math.isclose(scaling.condenser.b[0], 0.5, rel_tol=rtol)
    rng = np.random.default_rng(SEED + 7)
    worst = 0.0
    for _ in range(25):
        n = int(rng.integers(1, 4))
        a = tuple(float(v) for v in rng.uniform(0.8, 1.5, n))
        b = tuple(float(av * al) for av, al in zip(a, rng.uniform(0.1, 0.9, n)))
        c = float(rng.uniform(0.05, 0.95))
        cnd = cap.ReinhardtCondenser(a, b)
        scaled = cap.sublevel_scale(cnd, c)
        recomputed = cap.product_capacity(scaled.condenser).value
        worst = max(worst, abs(scaled.capacity.value - recomputed) / recomputed)
    elapsed = time.perf_counter() - t0
    ok = doubling_ok and radius_ok and worst <= rtol
    detail = (
        f"annulus a=1, b=1/4, c=1/2: capacity {scaling.capacity.value:.10f} "
        f"= 2x{base:.10f}; worst scaling defect {worst:.2e} (tol {rtol:.1e})"
    )
    return CriterionResult(7, "capacity sublevel scaling", ("closed-form",), ok, detail, elapsed)


def criterion_8(overrides=None) -> CriterionResult:
    """FD capacity vs closed form on the 1024^2 annulus, flux contour-independence."""
    t0 = time.perf_counter()
    rtol = _tol(overrides, "c8_rtol")
    grid = cap.annulus_grid(1.0, 0.5, nodes=1024)
    sol = cap.planar_capacity_fd(grid)
    oracle = 2.0 * math.pi / math.log(2.0)
    rel = abs(sol.capacity.value - oracle) / oracle
    fluxes = [cap.flux_through_level(grid, lv) for lv in (-0.75, -0.5, -0.25)]
    flux_tol = 10.0 * (sol.residual + grid.h)
    flux_spread = max(fluxes) - min(fluxes)
    elapsed = time.perf_counter() - t0
    ok = (
        rel <= rtol
        and flux_spread <= flux_tol
        and elapsed < _tol(overrides, "c8_seconds")
    )
    detail = (
        f"flux {sol.capacity.value:.4f} vs 2pi/log2 = {oracle:.4f} "
        f"(rel {rel:.4f}, tol {rtol}); contour spread {flux_spread:.2e} "
        f"<= {flux_tol:.2e}; residual {sol.residual:.1e}"
    )
    return CriterionResult(8, "FD capacity oracle", ("fd",), ok, detail, elapsed)


def criterion_9(overrides=None) -> CriterionResult:
    """Polyhedral capacity equals the pullback closed form; Hefer identity holds."""
    t0 = time.perf_counter()
    rtol = _tol(overrides, "c9_rtol")
    pc = cap.PolyhedralCondenser((2,), (1.0,), (0.5,))
    poly_cap = cap.product_capacity(pc).value
    pullback = cap.ReinhardtCondenser((1.0,), (math.sqrt(0.5),))
    pull_cap = cap.product_capacity(pullback).value
    cap_ok = math.isclose(poly_cap, pull_cap, rel_tol=rtol) and math.isclose(
        poly_cap, 4.0 * math.pi / math.log(2.0), rel_tol=rtol
    )
    rng = np.random.default_rng(SEED + 9)
    defect = max(
        bw.HeferData(p).max_identity_defect(rng, pairs=pairs)
        for p, pairs in (((2,), 4000), ((3, 1), 3000), ((2, 2, 4), 3000))
    )
    hefer_tol = _tol(overrides, "c9_hefer_tol")
    elapsed = time.perf_counter() - t0
    ok = cap_ok and defect <= hefer_tol
    detail = (
        f"p=2 capacity {poly_cap:.10f} = pullback {pull_cap:.10f} = 4pi/log2; "
        f"Hefer defect {defect:.2e} over 1e4 pairs (tol {hefer_tol:.1e})"
    )
    return CriterionResult(9, "polyhedral consistency", ("closed-form",), ok, detail, elapsed)


def criterion_10(overrides=None) -> CriterionResult:
    """Sup-norm sandwich: lower <= upper entrywise, both slopes near the target."""
    t0 = time.perf_counter()
    rtol = _tol(overrides, "c10_slope_rtol")
    conds = [
        cap.ReinhardtCondenser((1.0,), (0.5,)),
        cap.ReinhardtCondenser((1.3,), (0.52,)),
        cap.ReinhardtCondenser((1.0, 1.0), (0.5, 0.5)),
        cap.ReinhardtCondenser((1.2, 0.9), (0.6, 0.27)),
    ]
    M = 10_000
    worst_rel = 0.0
    sandwich_ok = True
    for cond in conds:
        lower, upper = wd.supnorm_bounds(cond, M)
        sandwich_ok &= bool(np.all(lower.log_d <= upper.log_d + 1e-9))
        target = wd.target_slope(cap.product_capacity(cond), cond.n)
        for table in (lower, upper):
            est = wd.slope_estimate(table, cond.n, target=target)
            worst_rel = max(worst_rel, est.relative_error)
    elapsed = time.perf_counter() - t0
    ok = sandwich_ok and worst_rel <= rtol
    detail = (
        f"entrywise lower<=upper on {len(conds)} condensers: {sandwich_ok}; "
        f"worst slope deviation {worst_rel:.4f} (tol {rtol})"
    )
    return CriterionResult(10, "sup-norm sandwich", ("sandwich",), ok, detail, elapsed)


def criterion_11(overrides=None) -> CriterionResult:
    """Property suites: tail bounds, counting brackets, weighted widths, ranks."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 11)
    failures = []

    # (a) explicit gamma/tail bounds on 1000 random geometries up to m = 1e4
    M = 10_000
    for i in range(1000):
        n = int(rng.choice([1, 1, 2, 2, 3]))
        geom = mi.GeometryVector(tuple(float(v) for v in rng.uniform(0.05, 0.9, n)))
        seq = mi.rearrange(geom, M)
        m = np.arange(1, M + 1, dtype=float)
        log_gb = sum(geom.beta) - (geom.c * m) ** (1.0 / n)
        if not np.all(seq.log_gamma <= log_gb + 1e-9):
            failures.append(f"gamma bound failed for geometry #{i}")
        profile = mi.tail_profile(geom, M)
        log_pref = sum(b - math.log(b) for b in geom.beta)
        cm = geom.c * m
        series = sum(cm ** (k / n) / math.factorial(k) for k in range(n))
        log_tb = log_pref + np.log(series) - cm ** (1.0 / n)
        tail_ok = np.all(profile.log_tail[1:] <= log_tb + 1e-9) and (
            profile.log_tail[0] <= log_pref + 1e-9  # m=0: series = 1, exp(0) = 1
        )
        if not tail_ok:
            failures.append(f"tail bound failed for geometry #{i}")
        if len(failures) > 3:
            break

    # (b) volume bounds bracket the counting function on 1000 random queries
    for i in range(1000):
        n = int(rng.integers(1, 5))
        beta = tuple(float(v) for v in rng.uniform(0.1, 3.0, n))
        T = float(rng.uniform(1.0, 2000.0))
        r = (math.factorial(n) * math.prod(beta) * T) ** (1.0 / n) * float(
            rng.uniform(0.7, 1.3)
        )
        q = mi.CountingQuery(beta, r)
        count = mi.count_lattice(q)
        lo, hi = mi.count_lattice_bounds(q)
        if not (lo - 1e-9 <= count <= hi + 1e-9):
            failures.append(f"counting bracket failed for query #{i}")
            break

    # (c) weighted comparison d_m(k) <= e^k d_m(0) for k <= 20
    cond = cap.ReinhardtCondenser((1.0,), (0.5,))
    w = RadialWeight((1.0,), (1.0,))  # phi - 1 is the normalized weight; spectra agree
    base = wd.embedding_widths(cond, M=48)
    for k in range(1, 21):
        weighted = wd.embedding_widths(cond, k=float(k), w=w, M=48)
        if not np.all(weighted.log_d <= base.log_d + k + 1e-9):
            failures.append(f"weighted comparison failed at k={k}")
            break

    # (d) rank(J_m) <= m0 * m on probe bases
    rank_cases = [
        (cap.PolyhedralCondenser((2,), (1.0,), (0.5,)), 3),
        (cap.PolyhedralCondenser((3,), (1.2,), (0.4,)), 2),
        (cap.PolyhedralCondenser((2, 2), (1.0, 1.0), (0.5, 0.4)), 2),
        (cap.PolyhedralCondenser((2, 1), (1.0, 1.1), (0.45, 0.5)), 4),
    ]
    for cnd, m in rank_cases:
        spec = bw.ApproximantSpec(cnd, m)
        rank = bw.numerical_rank(spec, rng)
        if rank > spec.rank_bound:
            failures.append(
                f"rank {rank} exceeds m0*m = {spec.rank_bound} for p={cnd.p}, m={m}"
            )
    elapsed = time.perf_counter() - t0
    ok = not failures
    detail = "all property suites passed" if ok else "; ".join(failures[:4])
    return CriterionResult(11, "property suites", ("property",), ok, detail, elapsed)


ACCEPTANCE_CRITERIA = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
    criterion_11,
]


def run_acceptance(
    tags: tuple[str, ...] | None = None,
    ids: tuple[int, ...] | None = None,
    overrides: dict | None = None,
) -> list[CriterionResult]:
    """Run the selected criteria; a criterion that raises counts as failed."""
    results = []
    for idx, fn in enumerate(ACCEPTANCE_CRITERIA, start=1):
        if ids is not None and idx not in ids:
            continue
        try:
            res = fn(overrides)
        except WidthlabError as exc:
            res = CriterionResult(idx, fn.__name__, (), False, f"raised {exc!r}", 0.0)
        if tags is not None and not set(res.tags) & set(tags):
            continue
        results.append(res)
    return results
