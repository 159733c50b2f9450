import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from unclab import deficit as df
from unclab import funcrep as fr
from unclab import suites
from unclab.errors import IncompatibleRepresentationError, InvalidInputError

GROUND = lambda x: math.pi ** -0.25 * np.exp(-x * x / 2)
coeffs = arrays(float, st.integers(1, 10), elements=st.floats(-2, 2))


def grid_function(profile, L=12.0, N=4096):
    return fr.sample(profile, fr.Grid1DSpec(L, N))


# --------------------------------------------------------------------------
# compute_deficit
# --------------------------------------------------------------------------

def test_ground_state_on_grid_is_extremal():
    b = df.compute_deficit(grid_function(GROUND, N=4096))
    assert abs(b.deficit) <= 1e-8 * (1 + b.moment_sq * b.grad_sq)
    assert b.lambda_grad == pytest.approx(-1.0, abs=1e-6)
    assert b.lambda_moment == pytest.approx(-1.0, abs=1e-12)


@pytest.mark.parametrize("k", range(11))
def test_hermite_modes_have_deficit_k_times_k_plus_one(k):
    assert df.deficit(fr.hermite_mode(k)) == pytest.approx(k * (k + 1), abs=1e-12)


def test_zero_function():
    b = df.compute_deficit(fr.zeros(fr.Grid1DSpec(5.0, 64)))
    assert b.deficit == 0.0
    assert b.lambda_grad is None and b.lambda_moment is None


def test_breakdown_recomputation_identity():
    u = grid_function(lambda x: (1 + 0.2 * x ** 3) * np.exp(-x * x / 2))
    b = df.compute_deficit(u)
    direct = b.moment_sq * b.grad_sq - 0.25 * b.l2_sq ** 2
    assert b.deficit == pytest.approx(direct, rel=1e-12)
    assert b.delta_norm == pytest.approx(
        math.sqrt(b.l2_sq) + math.sqrt(b.grad_sq) + math.sqrt(b.moment_sq))


def test_lambda_diagnostics_negative_for_nonzero():
    for _, u in suites.grid_suite_1d() + suites.radial_suite(3) + suites.nd_suite(2):
        b = df.compute_deficit(u)
        assert b.lambda_grad < 0 and b.lambda_moment < 0


@pytest.mark.parametrize("alpha", [0.01, 0.3, 1.0, 7.0, 100.0])
def test_lambda_consistency_on_gaussians(alpha):
    from unclab.gaussfit import GaussianParams
    g = GaussianParams(1, 1.0, alpha)
    u = suites.sampled_gaussian(g, suites.grid_for_width(alpha, points_per_width=256))
    b = df.compute_deficit(u)
    assert b.lambda_grad == pytest.approx(b.lambda_moment, rel=1e-8)
    assert b.lambda_grad == pytest.approx(-1 / (2 * alpha), rel=1e-8)


def test_closed_form_gaussian_deficit_vanishes():
    for dim in (1, 2, 3):
        b = df.gaussian_deficit_closed_form(dim, 1.7, 0.4)
        assert abs(b.deficit) <= 1e-14 * b.moment_sq * b.grad_sq


def test_nonnegativity_across_suites():
    functions = (suites.grid_suite_1d() + suites.hermite_suite() + suites.nd_suite(2)
                 + suites.nd_suite(3, n_points=64) + suites.radial_suite(2) + suites.radial_suite(3))
    for name, u in functions:
        b = df.compute_deficit(u)
        assert b.deficit >= -1e-8 * (1 + b.moment_sq * b.grad_sq), name


@given(coeffs)
def test_nonnegativity_on_random_hermite_series(c):
    b = df.compute_deficit(fr.hermite(c))
    assert b.deficit >= -1e-12 * (1 + b.moment_sq * b.grad_sq)


@given(coeffs, st.sampled_from([-2.0, 0.5, 3.0]))
def test_homogeneity_of_degree_four(c, scale):
    u = fr.hermite(c)
    d = df.deficit(u)
    assert df.deficit(scale * u) == pytest.approx(scale ** 4 * d, rel=1e-10, abs=1e-10)


def test_serializes_flat():
    d = df.compute_deficit(fr.hermite_mode(2)).to_dict()
    assert set(d) >= {"l2_sq", "grad_sq", "moment_sq", "deficit", "lambda_grad",
                      "lambda_moment", "delta_norm", "normalized_deficit"}
    assert all(not isinstance(v, (dict, list)) for v in d.values())


# --------------------------------------------------------------------------
# dilation
# --------------------------------------------------------------------------

def test_dilation_factor_must_be_positive():
    for bad in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(InvalidInputError):
            df.DilationFactor(bad)


def test_unit_dilation_is_identity():
    u = grid_function(GROUND, N=512)
    assert df.dilate(u, df.DilationFactor(1.0)) is u


def test_dilation_scaling_laws():
    u = grid_function(lambda x: (1 + x) * np.exp(-x * x / 2), N=1024)
    v = df.dilate(u, df.DilationFactor(2.0))
    assert abs(fr.norm_l2_sq(v) - fr.norm_l2_sq(u)) <= 1e-10
    assert fr.moment_sq(v) == pytest.approx(fr.moment_sq(u) / 4, abs=1e-8)
    assert fr.grad_norm_sq(v) == pytest.approx(4 * fr.grad_norm_sq(u), abs=1e-8)


def test_dilation_matches_direct_sampling():
    lam = 1.7
    u = grid_function(lambda x: np.exp(-(x - 0.5) ** 2), N=1024)
    v = df.dilate(u, lam)
    direct = fr.sample(lambda x: lam ** 0.5 * np.exp(-(lam * x - 0.5) ** 2), v.spec)
    assert np.max(np.abs(v.values - direct.values)) < 1e-14


@pytest.mark.parametrize("lam", [0.25, 0.5, 2.0, 4.0])
def test_deficit_dilation_invariance(lam):
    functions = (suites.grid_suite_1d() + suites.radial_suite(2) + suites.radial_suite(3)
                 + suites.nd_suite(2))
    for name, u in functions:
        d = df.deficit(u)
        assert abs(df.deficit(df.dilate(u, lam)) - d) <= 1e-8 * (1 + abs(d)), name


def test_hermite_dilation_requires_resampling():
    with pytest.raises(InvalidInputError):
        df.dilate(fr.hermite([1.0]), 2.0)


# --------------------------------------------------------------------------
# quartic expansion
# --------------------------------------------------------------------------

def test_zero_direction_has_no_variation():
    u = fr.hermite([1.0, 0.3, 0.2])
    t = df.variation_terms(u, fr.hermite([0.0]))
    assert (t.d1, t.d2, t.d3, t.d4) == (0.0, 0.0, 0.0, 0.0)
    assert df.expansion_residual(u, fr.hermite([0.0]), [0.5]) == 0.0


def test_gaussian_in_own_direction_has_no_variation():
    u = grid_function(GROUND)
    t = df.variation_terms(u, u)
    for c in t.coefficients():
        assert abs(c) < 1e-8


def test_second_variation_of_ground_state_towards_h4():
    t = df.variation_terms(fr.hermite_mode(0, 5), fr.hermite_mode(4))
    assert t.d2 == pytest.approx(4.0, abs=1e-12)
    assert t.d1 == pytest.approx(0.0, abs=1e-12)


def test_second_variation_matches_small_eps_deficit():
    # delta((h0 + eps h4)/sqrt(1+eps^2)) ~ 4 eps^2
    eps = 1e-3
    u = fr.normalize(fr.hermite([1, 0, 0, 0, eps]))
    assert df.deficit(u) / eps ** 2 == pytest.approx(4.0, rel=1e-5)


def test_expansion_h1_h3():
    assert df.expansion_residual(fr.hermite_mode(1), fr.hermite_mode(3), [0.3]) < 1e-9


def test_expansion_terms_agree_with_finite_differences():
    u = fr.hermite([1.0, 0.2, -0.4, 0.1])
    phi = fr.hermite([0.1, -0.3, 0.5, 0.0, 0.2])
    t = df.variation_terms(u, phi)
    h = 1e-4
    d = [df.deficit(u + e * phi) for e in (-2 * h, -h, 0.0, h, 2 * h)]
    first = (d[0] - 8 * d[1] + 8 * d[3] - d[4]) / (12 * h)
    second = (-d[0] + 16 * d[1] - 30 * d[2] + 16 * d[3] - d[4]) / (12 * h * h) / 2
    assert first == pytest.approx(t.d1, rel=1e-7)
    assert second == pytest.approx(t.d2, rel=1e-5)


@given(arrays(float, 7, elements=st.floats(-2, 2)), arrays(float, 7, elements=st.floats(-2, 2)))
def test_quartic_identity_hermite(a, b):
    assert df.expansion_residual(fr.hermite(a), fr.hermite(b), [-1.0, -0.5, 0.1, 1.0]) < 1e-9


def test_quartic_identity_on_100_seeded_hermite_pairs():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        u = fr.hermite(rng.standard_normal(rng.integers(1, 12)))
        phi = fr.hermite(rng.standard_normal(rng.integers(1, 12)))
        worst = max(worst, df.expansion_residual(u, phi, [-1.0, -0.5, 0.1, 1.0]))
    assert worst < 1e-9


@pytest.mark.parametrize("spec", [fr.Grid1DSpec(10.0, 512), fr.GridNDSpec(2, 6.0, 48),
                                  fr.RadialSpec(3, 8.0, 256)])
def test_quartic_identity_on_grids(spec):
    rng = np.random.default_rng(5)
    for _ in range(3):
        a, b = rng.uniform(0.3, 2.0, 2)
        s = rng.uniform(-1, 1)
        if spec.kind == "radial":
            u = fr.sample(lambda r: np.exp(-a * r * r), spec)
            phi = fr.sample(lambda r: (1 + s * r * r) * np.exp(-b * r * r), spec)
        else:
            u = fr.sample(lambda *x: np.exp(-a * sum(c * c for c in x)), spec)
            phi = fr.sample(lambda *x: (x[0] + s) * np.exp(-b * sum(c * c for c in x)), spec)
        assert df.expansion_residual(u, phi, [-1.0, -0.5, 0.1, 1.0]) < 1e-9


def test_expansion_rejects_empty_eps_and_mismatch():
    u = fr.hermite([1.0])
    with pytest.raises(InvalidInputError):
        df.expansion_residual(u, u, [])
    with pytest.raises(IncompatibleRepresentationError):
        df.variation_terms(u, grid_function(GROUND, N=64))
