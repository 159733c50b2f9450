"""Acceptance run: twelve criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s``; the lines are written to the
terminal even without ``-s``.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from unclab import deficit as df
from unclab import funcrep as fr
from unclab import gaussfit as gf
from unclab import spectral as sp
from unclab import stabilitylab as sl
from unclab import suites
from unclab.errors import NotApplicableError

DILATIONS = (0.25, 0.5, 2.0, 4.0)


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\nAC{number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        assert ok, detail
    return emit


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.fixture(scope="module")
def suite_projections():
    """The thirty-function projection suite plus four non-radial 2-D grid
    functions, each with its nearest Gaussian."""
    functions = suites.projection_suite() + suites.nd_suite(2, 6.0, 512)
    return [(name, u, gf.project(u)) for name, u in functions]


# --------------------------------------------------------------------------

def test_ac01_equality_case(verdict):
    start = time.perf_counter()
    spec = fr.Grid1DSpec(64.0, 1 << 17)
    worst_deficit = worst_lambda = 0.0
    for g in suites.gaussians(50):
        b = df.compute_deficit(gf.gaussian_eval(g, spec))
        worst_deficit = max(worst_deficit, abs(b.deficit) / (1.0 + b.moment_sq * b.grad_sq))
        target = -1.0 / (2.0 * g.alpha)
        worst_lambda = max(worst_lambda, rel(b.lambda_grad, target), rel(b.lambda_moment, target))
    elapsed = time.perf_counter() - start
    ok = worst_deficit <= 1e-8 and worst_lambda <= 1e-6 and elapsed < 5.0
    verdict(1, "equality case on 50 Gaussians", ok,
            f"max scaled |deficit| {worst_deficit:.2e} (<=1e-8), max lambda rel err "
            f"{worst_lambda:.2e} (<=1e-6), {elapsed:.2f} s (<5 s)")


def test_ac02_hermite_oracle(verdict):
    spec = fr.Grid1DSpec(12.0, 4096)
    ladder = max(abs(df.deficit(fr.hermite_mode(k)) - k * (k + 1)) for k in range(11))
    grid = max(abs(df.deficit(fr.resample(fr.hermite_mode(k), spec)) - k * (k + 1))
               for k in range(11))
    verdict(2, "deficit of h_k is k(k+1), k <= 10", ladder <= 1e-12 and grid <= 1e-5,
            f"ladder max err {ladder:.2e} (<=1e-12), grid max err {grid:.2e} (<=1e-5)")


def test_ac03_quartic_expansion(verdict):
    rng = np.random.default_rng(2024)
    eps = [-1.0, -0.5, 0.1, 1.0]
    hermite = 0.0
    for _ in range(100):
        u = fr.hermite(rng.standard_normal(int(rng.integers(1, 12))))
        phi = fr.hermite(rng.standard_normal(int(rng.integers(1, 12))))
        hermite = max(hermite, df.expansion_residual(u, phi, eps))
    pools = [[u for _, u in suites.grid_suite_1d(12.0, 1024)],
             [u for _, u in suites.radial_suite(2)], [u for _, u in suites.radial_suite(3)]]
    grid = 0.0
    for count, pool in zip((10, 5, 5), pools):
        for _ in range(count):
            i, j = rng.choice(len(pool), 2, replace=False)
            grid = max(grid, df.expansion_residual(pool[i], pool[j], eps))
    verdict(3, "quartic expansion", hermite < 1e-9 and grid < 1e-6,
            f"100 Hermite pairs max {hermite:.2e} (<1e-9), 20 grid pairs max {grid:.2e} (<1e-6)")


def test_ac04_projection(verdict, suite_projections):
    trans = 0.0
    for _, u, p in suite_projections[:30]:
        scale = 1.0 + df.delta_norm(u) ** 2
        trans = max(trans, abs(p.r0) / scale, abs(p.r1) / scale, abs(p.r2) / scale)
    recovery = 0.0
    targets = [(g, suites.grid_for_width(g.alpha)) for g in suites.gaussians(20, seed=4)]
    targets += [(gf.GaussianParams(n, c, a), fr.RadialSpec(n, 12.0, 2048))
                for n in (2, 3) for c, a in ((1.3, 0.4), (-0.7, 2.2))]
    for g, spec in targets:
        q = gf.project(gf.gaussian_eval(g, spec)).gaussian
        recovery = max(recovery, rel(q.c, g.c), rel(q.alpha, g.alpha))
    verdict(4, "projection transversality and Gaussian recovery",
            trans <= 1e-6 and recovery <= 1e-6,
            f"30-function max scaled |r_i| {trans:.2e} (<=1e-6), recovery of "
            f"{len(targets)} Gaussians max rel err {recovery:.2e} (<=1e-6)")


def test_ac05_decomposition_identity(verdict, suite_projections):
    worst, count = 0.0, 0
    for _, u, p in suite_projections:
        if p.distance_sq > sl.CONE_TOL:
            worst = max(worst, sl.stability_record(u).decomposition_residual)
            count += 1
    verdict(5, "decomposition identity", worst <= 1e-6,
            f"max relative residual {worst:.2e} over {count} functions off the cone (<=1e-6)")


def test_ac06_geometry(verdict, suite_projections):
    domination = sandwich = 0.0
    sign_failures = sign_checked = zero_mismatch = 0
    for _, u, p in suite_projections:
        for q in (fr.norm_l2_sq, fr.moment_sq, fr.grad_norm_sq):
            domination = max(domination, math.sqrt(q(p.vstar)) - math.sqrt(q(u)))
        split = gf.radial_split(u)
        dist = math.sqrt(p.distance_sq)
        sandwich = max(sandwich, math.sqrt(fr.norm_l2_sq(split.u_s)) - dist,
                       dist - math.sqrt(fr.norm_l2_sq(u)))
        try:
            sign_failures += not gf.sign_change_check(u, p)
            sign_checked += 1
        except NotApplicableError:
            pass
        zero_mismatch += p.is_zero != (fr.norm_l2_sq(split.u_r) <= 1e-16 * fr.norm_l2_sq(u))
    ok = domination <= 1e-8 and sandwich <= 1e-8 and sign_failures == 0 and zero_mismatch == 0
    verdict(6, "geometry", ok,
            f"norm domination excess {max(domination, 0):.2e} (<=1e-8), sandwich excess "
            f"{max(sandwich, 0):.2e} (<=1e-8), sign change failures {sign_failures}/{sign_checked}, "
            f"zero-projection mismatches {zero_mismatch}/{len(suite_projections)}")


def test_ac07_invariances(verdict):
    functions = (suites.grid_suite_1d() + suites.radial_suite(2) + suites.radial_suite(3)
                 + suites.nd_suite(2))
    dil = 0.0
    for _, u in functions:
        d = df.deficit(u)
        for lam in DILATIONS:
            dil = max(dil, abs(df.deficit(df.dilate(u, lam)) - d) / (1.0 + abs(d)))
    n = 32768
    grid = suites.grid_suite_1d(sp.self_dual_half_width(n), n)
    four = 0.0
    for _, u in grid:
        d = df.deficit(u)
        four = max(four, abs(df.deficit(sp.fourier(u).u_hat) - d) / (1.0 + abs(d)))
    for _, u in suites.hermite_suite():
        s = sp.hermite_spectrum(u)
        d = sp.spectrum_deficit(s)
        four = max(four, abs(sp.spectrum_deficit(sp.hermite_fourier(s)) - d) / (1.0 + abs(d)))
    verdict(7, "dilation and Fourier invariance", dil <= 1e-6 and four <= 1e-6,
            f"dilation max rel change {dil:.2e} over {len(functions)} functions x 4 factors, "
            f"Fourier max rel change {four:.2e} (both <=1e-6)")


def test_ac08_stability_evidence(verdict):
    start = time.perf_counter()
    one_d = [
        sl.ratio_scan("odd-only", sl.DEFAULT_GRIDS["odd-only"]),
        sl.ratio_scan("hermite-perturbation", sl.DEFAULT_GRIDS["hermite-perturbation"]),
        sl.ratio_scan("two-bump", sl.DEFAULT_GRIDS["two-bump"]),
    ]
    radial = [sl.ratio_scan(fam, sl.DEFAULT_GRIDS[fam], dim=n)
              for n in (2, 3) for fam in ("radial-perturbation", "two-scale", "shell")]
    elapsed = time.perf_counter() - start
    min1 = min(s.min_ratio for s in one_d)
    odd = max(abs(r.ratio - r.parameters["k"] * (r.parameters["k"] + 1))
              for r in one_d[0].records)
    min_rad = min(s.min_ratio for s in radial)
    residual = max(s.max_decomposition_residual for s in radial)
    count = sum(len(s.records) for s in one_d + radial)
    ok = min1 >= 0.5 and min_rad > 0 and residual <= 1e-6 and elapsed < 600
    verdict(8, "stability ratio scans", ok,
            f"n=1 min ratio {min1:.4f} (>=0.5; odd k=1 ratio 2, max err vs k(k+1) {odd:.1e}), "
            f"n=2,3 radial min ratio {min_rad:.4f} (>0), max decomposition residual "
            f"{residual:.2e} (<=1e-6), {count} records in {elapsed:.1f} s (<600 s)")


def test_ac09_second_variation(verdict, suite_projections):
    worst_value = math.inf
    worst_slack = math.inf
    half_n = {}
    applicable = 0
    for _, u, _p in suite_projections:
        try:
            sv = sl.second_variation_positivity(u)
        except NotApplicableError:
            continue
        applicable += 1
        worst_value = min(worst_value, sv.value)
        worst_slack = min(worst_slack, sv.value - sv.lower_bound)
        if u.dim >= 2:
            half_n[u.dim] = min(half_n.get(u.dim, math.inf), sv.value - sv.lower_bound_half_n)
    ok = applicable > 0 and worst_value > 0 and worst_slack >= -1e-6
    extra = ", ".join(f"n={n} slack with n/2 factor {s:.3e}" for n, s in sorted(half_n.items()))
    verdict(9, "second variation at v*", ok,
            f"{applicable} applicable, min value {worst_value:.3e} (>0), min slack over the "
            f"n^2/2 chain bound {worst_slack:.3e} (>=-1e-6); reported only: {extra}")


def test_ac10_sharpness(verdict):
    start = time.perf_counter()
    curve = sl.sharpness_curve(suites.reference_function(), [4.0, 8.0, 16.0, 32.0, 64.0])
    elapsed = time.perf_counter() - start
    scaled = curve.scaled()
    band = max(scaled) / min(scaled)
    verdict(10, "Q(lambda) lambda^2 band on [4, 64]", band <= 2.0 and elapsed < 30.0,
            f"max/min {band:.4f} (<=2), values {', '.join(f'{s:.4f}' for s in scaled)}, "
            f"{elapsed:.2f} s (<30 s)")


def test_ac11_debruijn(verdict):
    rng = np.random.default_rng(17)
    identity = 0.0
    for K in range(31):
        c = rng.standard_normal(K + 1)
        identity = max(identity, abs(sp.debruijn_check(sp.HermiteSpectrum(c / np.linalg.norm(c))).margin))
    margins = []
    for _ in range(20):
        c = np.zeros(9)
        c[0] = 1.0
        c[1:] = 0.3 * rng.standard_normal(8)
        margins.append(sp.debruijn_distance_bound(sp.hermite_spectrum(fr.normalize(fr.hermite(c)))).margin)
    ok = identity <= 1e-10 and min(margins) >= 0
    verdict(11, "de Bruijn identity and distance bound", ok,
            f"max |margin| on pure spectra K<=30 {identity:.2e} (<=1e-10), min distance-bound "
            f"margin on 20 perturbed ground states {min(margins):.4f} (>=0)")


def test_ac12_verify_command(verdict):
    start = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "unclab.cli", "verify"],
                          capture_output=True, text=True)
    elapsed = time.perf_counter() - start
    ok = proc.returncode == 0 and elapsed < 60.0
    verdict(12, "verify under default configuration", ok,
            f"exit {proc.returncode} (0), {elapsed:.1f} s (<60 s)"
            + (f"; stderr: {proc.stderr.strip()[:300]}" if proc.returncode else ""))
