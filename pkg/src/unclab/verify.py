"""Registry of invariant checks run by ``unclab verify``.

Each check measures one number and compares it with a threshold.
Tolerance-style checks (``measured <= threshold``) can be tightened or
loosened globally; bound-style checks (``measured >= threshold``) are
fixed.
"""

from dataclasses import dataclass
import math
import time

import numpy as np

from . import deficit as df
from . import exprdsl
from . import funcrep as fr
from . import gaussfit as gf
from . import spectral as sp
from . import stabilitylab as sl
from . import suites
from .errors import InvalidInputError, NotApplicableError

SUITES = ("funcrep", "deficit", "gaussfit", "spectral", "stabilitylab", "exprdsl")


@dataclass(frozen=True)
class Check:
    name: str
    suite: str
    tag: str
    measure: object          # () -> float
    threshold: float
    relation: str = "<="     # "<=" or ">="
    overridable: bool = True  # whether --tol replaces the threshold


@dataclass(frozen=True)
class CheckResult:
    name: str
    suite: str
    tag: str
    measured: float
    threshold: float
    relation: str
    passed: bool
    seconds: float

    def to_dict(self, timings=False):
        d = {"name": self.name, "suite": self.suite, "citation": self.tag,
             "measured": self.measured, "threshold": self.threshold,
             "relation": self.relation, "passed": self.passed}
        if timings:
            d["seconds"] = self.seconds
        return d


REGISTRY = []


def check(suite, tag, threshold, relation="<=", overridable=None):
    """Register a check; only ``<=`` checks are overridable by default."""
    if overridable is None:
        overridable = relation == "<="

    def register(func):
        REGISTRY.append(Check(func.__name__.removeprefix("check_").replace("_", "-"),
                              suite, tag, func, threshold, relation, overridable))
        return func
    return register


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# --------------------------------------------------------------------------
# funcrep
# --------------------------------------------------------------------------

@check("funcrep", "hermite-ladder-norms", 1e-12)
def check_hermite_ladder_norms():
    worst = 0.0
    for k in range(21):
        h = fr.hermite_mode(k)
        worst = max(worst, abs(fr.moment_sq(h) - (k + 0.5)), abs(fr.grad_norm_sq(h) - (k + 0.5)))
    return worst


@check("funcrep", "grid-gaussian-norm", 1e-10)
def check_grid_gaussian_norm():
    u = fr.sample(lambda x: math.pi ** -0.25 * np.exp(-x * x / 2), fr.Grid1DSpec(12.0, 1024))
    return abs(fr.norm_l2_sq(u) - 1.0)


@check("funcrep", "grid-gaussian-gradient", 1e-6)
def check_grid_gaussian_gradient():
    u = fr.sample(lambda x: math.pi ** -0.25 * np.exp(-x * x / 2), fr.Grid1DSpec(12.0, 1024))
    return abs(fr.grad_norm_sq(u) - 0.5)


@check("funcrep", "gaussian-product-integral", 1e-8)
def check_gaussian_product_integral():
    spec = fr.Grid1DSpec(12.0, 1024)
    worst = 0.0
    for a, b in [(0.3, 0.7), (1.0, 2.0), (0.5, 0.5)]:
        ga = fr.sample(lambda x: np.exp(-a * x * x), spec)
        gb = fr.sample(lambda x: np.exp(-b * x * x), spec)
        worst = max(worst, abs(fr.inner(ga, gb) - math.sqrt(math.pi / (a + b))))
    return worst


@check("funcrep", "radial-gaussian-norm", 1e-8)
def check_radial_gaussian_norm():
    worst = 0.0
    for n in (1, 2, 3):
        u = fr.sample(lambda r: np.exp(-r * r), fr.RadialSpec(n, 10.0, 1024))
        worst = max(worst, _rel(fr.norm_l2_sq(u), (math.pi / 2) ** (n / 2)))
    return worst


@check("funcrep", "hermite-grid-round-trip", 1e-8)
def check_hermite_grid_round_trip():
    g = fr.resample(fr.hermite_mode(0), fr.Grid1DSpec(12.0, 1024))
    back = fr.resample(g, fr.HermiteSpec(8))
    return float(np.max(np.abs(back.values - np.eye(8)[0])))


@check("funcrep", "refinement-stability", 1e-8)
def check_refinement_stability():
    u = fr.sample(lambda x: np.exp(-x * x / 2), fr.Grid1DSpec(12.0, 512))
    v = fr.resample(u, fr.Grid1DSpec(12.0, 1024))
    return abs(fr.norm_l2_sq(v) - fr.norm_l2_sq(u))


@check("funcrep", "cauchy-schwarz", 1e-12)
def check_cauchy_schwarz():
    funcs = [u for _, u in suites.hermite_suite(10)]
    worst = 0.0
    for u in funcs:
        for w in funcs:
            worst = max(worst, fr.inner(u, w) ** 2 - fr.norm_l2_sq(u) * fr.norm_l2_sq(w))
    return max(worst, 0.0)


# --------------------------------------------------------------------------
# deficit
# --------------------------------------------------------------------------

@check("deficit", "equality-case", 1e-8)
def check_equality_case():
    spec = fr.Grid1DSpec(64.0, 1 << 17)
    worst = 0.0
    for g in suites.gaussians(50):
        b = df.compute_deficit(gf.gaussian_eval(g, spec))
        worst = max(worst, abs(b.deficit) / (1.0 + b.moment_sq * b.grad_sq))
    return worst


@check("deficit", "lambda-diagnostics-on-gaussians", 1e-6)
def check_lambda_diagnostics_on_gaussians():
    spec = fr.Grid1DSpec(64.0, 1 << 17)
    worst = 0.0
    for g in suites.gaussians(50):
        b = df.compute_deficit(gf.gaussian_eval(g, spec))
        target = -1.0 / (2.0 * g.alpha)
        worst = max(worst, _rel(b.lambda_grad, target), _rel(b.lambda_moment, target))
    return worst


@check("deficit", "hermite-deficit-ladder", 1e-12)
def check_hermite_deficit_ladder():
    return max(abs(df.deficit(fr.hermite_mode(k)) - k * (k + 1)) for k in range(11))


@check("deficit", "hermite-deficit-grid", 1e-5)
def check_hermite_deficit_grid():
    spec = fr.Grid1DSpec(12.0, 4096)
    return max(abs(df.deficit(fr.resample(fr.hermite_mode(k), spec)) - k * (k + 1))
               for k in range(11))


@check("deficit", "quartic-expansion-hermite", 1e-9)
def check_quartic_expansion_hermite():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        u = fr.hermite(rng.standard_normal(int(rng.integers(1, 12))))
        phi = fr.hermite(rng.standard_normal(int(rng.integers(1, 12))))
        worst = max(worst, df.expansion_residual(u, phi, [-1.0, -0.5, 0.1, 1.0]))
    return worst


@check("deficit", "quartic-expansion-grid", 1e-6)
def check_quartic_expansion_grid():
    funcs = [u for _, u in suites.grid_suite_1d(12.0, 1024)]
    worst = 0.0
    for i in range(len(funcs) - 1):
        worst = max(worst, df.expansion_residual(funcs[i], funcs[i + 1], [-1.0, -0.5, 0.1, 1.0]))
    return worst


@check("deficit", "nonnegativity", 1e-8)
def check_nonnegativity():
    worst = 0.0
    for _, u in suites.grid_suite_1d() + suites.hermite_suite() + suites.radial_suite(3):
        b = df.compute_deficit(u)
        worst = max(worst, -b.deficit / (1.0 + b.moment_sq * b.grad_sq))
    return max(worst, 0.0)


@check("deficit", "dilation-invariance", 1e-8)
def check_dilation_invariance():
    worst = 0.0
    for _, u in suites.grid_suite_1d(12.0, 1024)[:6] + suites.radial_suite(2)[:3]:
        d = df.deficit(u)
        for lam in (0.25, 0.5, 2.0, 4.0):
            worst = max(worst, abs(df.deficit(df.dilate(u, lam)) - d) / (1.0 + d))
    return worst


@check("deficit", "homogeneity", 1e-10)
def check_homogeneity():
    worst = 0.0
    for _, u in suites.hermite_suite(6):
        d = df.deficit(u)
        for c in (-2.0, 0.5, 3.0):
            worst = max(worst, abs(df.deficit(c * u) - c ** 4 * d) / max(1.0, abs(c ** 4 * d)))
    return worst


# --------------------------------------------------------------------------
# gaussfit
# --------------------------------------------------------------------------

def _projections():
    if not _CACHE:
        _CACHE.extend((name, u, gf.project(u)) for name, u in suites.projection_suite())
    return _CACHE


_CACHE = []


@check("gaussfit", "gaussian-recovery", 1e-6)
def check_gaussian_recovery():
    worst = 0.0
    spec = fr.Grid1DSpec(12.0, 1024)
    for g in [gf.GaussianParams(1, 1.7, 0.37), gf.GaussianParams(1, -0.4, 2.5),
              gf.GaussianParams(1, 3.0, 0.08)]:
        p = gf.project(gf.gaussian_eval(g, spec))
        worst = max(worst, _rel(p.gaussian.c, g.c), _rel(p.gaussian.alpha, g.alpha))
    return worst


@check("gaussfit", "transversality", 1e-6)
def check_transversality():
    worst = 0.0
    for _, u, p in _projections():
        scale = 1.0 + df.delta_norm(u) ** 2
        worst = max(worst, abs(p.r0) / scale, abs(p.r1) / scale, abs(p.r2) / scale)
    return worst


@check("gaussfit", "norm-domination", 1e-8)
def check_norm_domination():
    worst = 0.0
    for _, u, p in _projections():
        for q in (fr.norm_l2_sq, fr.moment_sq, fr.grad_norm_sq):
            worst = max(worst, math.sqrt(q(p.vstar)) - math.sqrt(q(u)))
    return max(worst, 0.0)


@check("gaussfit", "sandwich", 1e-8)
def check_sandwich():
    worst = 0.0
    for _, u, p in _projections():
        us = gf.radial_split(u).u_s
        dist = math.sqrt(p.distance_sq)
        worst = max(worst, math.sqrt(fr.norm_l2_sq(us)) - dist, dist - math.sqrt(fr.norm_l2_sq(u)))
    return max(worst, 0.0)


@check("gaussfit", "radial-split-orthogonality", 1e-8)
def check_radial_split_orthogonality():
    worst = 0.0
    for _, u in suites.grid_suite_1d(12.0, 1024) + suites.hermite_suite() + suites.nd_suite(2):
        s = gf.radial_split(u)
        total = fr.norm_l2_sq(u)
        worst = max(worst, abs(total - fr.norm_l2_sq(s.u_r) - fr.norm_l2_sq(s.u_s)) / total)
    return worst


@check("gaussfit", "radial-reduction", 1e-6)
def check_radial_reduction():
    worst = 0.0
    for _, u in suites.grid_suite_1d(12.0, 1024)[:6] + suites.nd_suite(2):
        a = gf.project(u)
        b = gf.project(gf.radial_split(u).u_r)
        worst = max(worst, abs(a.gaussian.c - b.gaussian.c))
        if not a.is_zero:
            worst = max(worst, _rel(b.gaussian.alpha, a.gaussian.alpha))
    return worst


@check("gaussfit", "zero-projection-iff-spherical", 0.5, overridable=False)
def check_zero_projection_iff_spherical():
    mismatches = 0
    for _, u, p in _projections():
        ur = fr.norm_l2_sq(gf.radial_split(u).u_r)
        mismatches += p.is_zero != (ur <= 1e-16 * fr.norm_l2_sq(u))
    return float(mismatches)


@check("gaussfit", "sign-change", 0.5, overridable=False)
def check_sign_change():
    failures = 0
    for _, u, p in _projections():
        try:
            failures += not gf.sign_change_check(u, p)
        except NotApplicableError:
            pass
    return float(failures)


@check("gaussfit", "dilation-equivariance", 1e-6)
def check_dilation_equivariance():
    worst = 0.0
    for _, u in suites.grid_suite_1d(12.0, 1024)[2:7]:
        p = gf.project(u)
        for lam in (0.5, 2.0):
            q = gf.project(df.dilate(u, lam))
            moved = df.dilate(p.vstar, lam)
            worst = max(worst, math.sqrt(fr.norm_l2_sq(q.vstar - moved)))
    return worst


@check("gaussfit", "cone-scaling", 0.5, overridable=False)
def check_cone_scaling():
    u = [suites.reference_function()]
    g = gf.GaussianParams(1, 0.8, 0.6)
    return float(sum(not gf.cone_check(g, c, u) for c in (0.0, -2.0, 2.0, 0.5)))


# --------------------------------------------------------------------------
# spectral
# --------------------------------------------------------------------------

def _self_dual(n=32768):
    return fr.Grid1DSpec(sp.self_dual_half_width(n), n)


def _fourier_suite():
    spec = _self_dual()
    out = [(name, fr.resample(u, spec)) for name, u in suites.hermite_suite(8)]
    x = spec.axis()
    out.append(("shifted", fr.normalize(fr.SampledFunction(spec, np.exp(-(x - 1.0) ** 2)))))
    out.append(("quartic-bump", fr.normalize(fr.SampledFunction(
        spec, (1 + 0.1 * x ** 4) * np.exp(-x * x / 2)))))
    return out


@check("spectral", "plancherel", 1e-8)
def check_plancherel():
    return max(abs(fr.norm_l2_sq(sp.fourier(u).u_hat) - fr.norm_l2_sq(u))
               for _, u in _fourier_suite())


@check("spectral", "fourier-deficit-symmetry", 1e-6)
def check_fourier_deficit_symmetry():
    worst = 0.0
    for _, u in _fourier_suite():
        d = df.deficit(u)
        worst = max(worst, abs(df.deficit(sp.fourier(u).u_hat) - d) / (1.0 + d))
    return worst


@check("spectral", "fourier-exchange", 1e-6)
def check_fourier_exchange():
    worst = 0.0
    for _, u in _fourier_suite():
        uh = sp.fourier(u).u_hat
        worst = max(worst, _rel(fr.moment_sq(uh), fr.grad_norm_sq(u)),
                    _rel(fr.grad_norm_sq(uh), fr.moment_sq(u)))
    return worst


@check("spectral", "fourier-gaussian-closed-form", 1e-7)
def check_fourier_gaussian_closed_form():
    spec = fr.Grid1DSpec(12.0, 1024)
    uh = sp.fourier(fr.sample(lambda x: np.exp(-x * x), spec)).u_hat
    xi = uh.spec.axis()
    return float(np.max(np.abs(uh.values - 2 ** -0.5 * np.exp(-xi * xi / 4))))


@check("spectral", "fourier-round-trip", 1e-7)
def check_fourier_round_trip():
    worst = 0.0
    for _, u in _fourier_suite():
        back = sp.fourier(sp.fourier(u).u_hat).u_hat
        worst = max(worst, math.sqrt(fr.norm_l2_sq(back - sp.reflect(u))))
    return worst


@check("spectral", "hermite-fourier-deficit", 1e-12)
def check_hermite_fourier_deficit():
    worst = 0.0
    for _, u in suites.hermite_suite(10):
        s = sp.hermite_spectrum(u)
        worst = max(worst, abs(sp.spectrum_deficit(s) - sp.spectrum_deficit(sp.hermite_fourier(s))))
    return worst


@check("spectral", "debruijn-identity", 1e-10)
def check_debruijn_identity():
    rng = np.random.default_rng(5)
    worst = 0.0
    for K in (0, 1, 5, 12, 30):
        c = rng.standard_normal(K + 1)
        s = sp.HermiteSpectrum(c / np.linalg.norm(c))
        worst = max(worst, abs(sp.debruijn_check(s).margin))
    return worst


@check("spectral", "debruijn-distance-bound", 0.0, ">=")
def check_debruijn_distance_bound():
    rng = np.random.default_rng(9)
    worst = math.inf
    for _ in range(20):
        c = np.zeros(9)
        c[0] = 1.0
        c[1:] = 0.3 * rng.standard_normal(8)
        s = sp.hermite_spectrum(fr.normalize(fr.hermite(c)))
        worst = min(worst, sp.debruijn_distance_bound(s).margin)
    return worst


# --------------------------------------------------------------------------
# stabilitylab
# --------------------------------------------------------------------------

@check("stabilitylab", "odd-family-ratio", 1e-10)
def check_odd_family_ratio():
    scan = sl.ratio_scan("odd-only", {"k": [1, 3, 5]})
    return max(abs(r.ratio - r.parameters["k"] * (r.parameters["k"] + 1)) for r in scan.records)


@check("stabilitylab", "perturbation-ratio-near-four", 0.15, overridable=False)
def check_perturbation_ratio_near_four():
    scan = sl.ratio_scan("hermite-perturbation", {"mode": [4], "eps": [0.05, 0.1, 0.2, 0.4]})
    return abs(scan.min_ratio - 4.0) / 4.0


@check("stabilitylab", "decomposition-identity", 1e-6)
def check_decomposition_identity():
    worst = 0.0
    for _, u, p in _projections():
        if p.distance_sq > sl.CONE_TOL:
            worst = max(worst, sl.stability_record(u).decomposition_residual)
    return worst


@check("stabilitylab", "second-variation-chain", 1e-6)
def check_second_variation_chain():
    worst = 0.0
    for _, u, _p in _projections():
        try:
            sv = sl.second_variation_positivity(u)
        except NotApplicableError:
            continue
        worst = max(worst, sv.lower_bound - sv.value, 0.0 if sv.value > 0 else math.inf)
    return worst


@check("stabilitylab", "empirical-ratio-floor", 0.01, ">=")
def check_empirical_ratio_floor():
    scans = [
        sl.ratio_scan("odd-only", {"k": [1, 3, 5]}),
        sl.ratio_scan("hermite-perturbation", {"mode": [1, 2, 3, 4, 5, 6], "eps": [0.1, 0.3]}),
        sl.ratio_scan("two-bump", {"a": [0.5, 1.0, 2.0, 4.0]}),
        sl.ratio_scan("radial-perturbation", {"m": [1, 2], "eps": [0.2]}, dim=2),
        sl.ratio_scan("two-scale", {"beta": [2.0], "t": [0.5]}, dim=3),
    ]
    return min(s.min_ratio for s in scans)


@check("stabilitylab", "sharpness-band", 2.0, overridable=False)
def check_sharpness_band():
    curve = sl.sharpness_curve(suites.reference_function(), [4, 8, 16, 32, 64], validate=False)
    scaled = curve.scaled()
    return max(scaled) / min(scaled)


@check("stabilitylab", "dilation-joint-invariance", 1e-6)
def check_dilation_joint_invariance():
    u = suites.grid_suite_1d(12.0, 1024)[3][1]
    a = sl.stability_record(u)
    worst = 0.0
    for lam in (0.5, 2.0):
        b = sl.stability_record(df.dilate(u, lam))
        worst = max(worst, abs(a.deficit - b.deficit), abs(a.distance_sq - b.distance_sq))
    return worst


# --------------------------------------------------------------------------
# exprdsl
# --------------------------------------------------------------------------

ROUND_TRIP_CORPUS = (
    "exp(-x^2)", "2^3^2", "-x^2", "(1+0.1*x^4)*exp(-x^2/2)", "x1*x2*exp(-r^2)",
    "x - 1 - 2",
    "x/2/3", "x-(1-2)", "sqrt(abs(sin(x)))+cos(pi*x)", "x^-2.5", "--x", "(x^2)^3",
)


@check("exprdsl", "print-parse-fixed-point", 0.5, overridable=False)
def check_print_parse_fixed_point():
    failures = 0
    for src in ROUND_TRIP_CORPUS:
        e = exprdsl.parse(src, 2)
        text = str(e)
        again = exprdsl.parse(text, 2)
        failures += (str(again) != text
                     or exprdsl.strip_spans(again.root) != exprdsl.strip_spans(e.root))
    return float(failures)


@check("exprdsl", "expression-sampling", 1e-8)
def check_expression_sampling():
    e = exprdsl.parse("exp(-r^2)", 3)
    u = exprdsl.sample(e, fr.RadialSpec(3, 10.0, 1024))
    return _rel(fr.norm_l2_sq(u), (math.pi / 2) ** 1.5)


# --------------------------------------------------------------------------
# runner
# --------------------------------------------------------------------------

def select(suite=None):
    if suite is not None and suite not in SUITES:
        raise InvalidInputError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    return [c for c in REGISTRY if suite is None or c.suite == suite]


def run_checks(suite=None, tol=None):
    """Run the selected checks; ``tol`` replaces every tolerance threshold."""
    _CACHE.clear()
    results = []
    for c in select(suite):
        threshold = tol if (tol is not None and c.overridable) else c.threshold
        t0 = time.perf_counter()
        measured = float(c.measure())
        seconds = time.perf_counter() - t0
        passed = measured <= threshold if c.relation == "<=" else measured >= threshold
        results.append(CheckResult(c.name, c.suite, c.tag, measured, threshold,
                                   c.relation, bool(passed), seconds))
    return results
