"""Standard test functions used by ``verify`` and the acceptance run.

Every suite is a list of ``(name, SampledFunction)`` pairs; members are
unit-norm unless noted and decay fast enough for their boxes.
"""

import math

import numpy as np

from . import funcrep as fr
from .gaussfit import GaussianParams, gaussian_eval

REFERENCE_COEFFS = (1.0, 0.0, 0.0, 0.0, 0.3)


def reference_function():
    """``(h_0 + 0.3 h_4)/sqrt(1.09)`` as a Hermite series."""
    return fr.normalize(fr.hermite(REFERENCE_COEFFS))


_PROFILES_1D = {
    "gaussian": lambda x: np.exp(-x * x / 2),
    "narrow-gaussian": lambda x: np.exp(-2.0 * x * x),
    "odd": lambda x: x * np.exp(-x * x / 2),
    "quartic-bump": lambda x: (1.0 + 0.1 * x ** 4) * np.exp(-x * x / 2),
    "shifted": lambda x: np.exp(-(x - 1.0) ** 2),
    "two-bump": lambda x: np.exp(-(x - 1.5) ** 2) + np.exp(-(x + 1.5) ** 2),
    "asymmetric-pair": lambda x: np.exp(-(x - 1.0) ** 2) + 0.5 * np.exp(-2 * (x + 1.0) ** 2),
    "modulated": lambda x: np.cos(2.0 * x) * np.exp(-x * x / 2),
    "quadratic": lambda x: x * x * np.exp(-x * x),
    "sech": lambda x: 1.0 / np.cosh(2.0 * x),
}


def grid_suite_1d(half_width=12.0, n_points=4096):
    """Smooth decaying 1-D functions sampled on one grid, plus the reference
    function resampled from its Hermite series."""
    spec = fr.Grid1DSpec(half_width, n_points)
    out = [(name, fr.normalize(fr.sample(f, spec))) for name, f in _PROFILES_1D.items()]
    out.append(("reference", fr.resample(reference_function(), spec)))
    return out


def hermite_suite(count=10, seed=7):
    """Basis modes, the reference function and seeded random short series."""
    out = [(f"h{k}", fr.hermite_mode(k)) for k in (0, 1, 2, 3, 4)]
    out.append(("reference", reference_function()))
    rng = np.random.default_rng(seed)
    while len(out) < count:
        c = rng.standard_normal(int(rng.integers(3, 9)))
        out.append((f"random-{len(out)}", fr.normalize(fr.hermite(c))))
    return out


def radial_suite(dim, max_radius=12.0, n_points=2048):
    spec = fr.RadialSpec(dim, max_radius, n_points)
    profiles = {
        "gaussian": lambda r: np.exp(-r * r / 2),
        "perturbed": lambda r: np.exp(-r * r / 2) * (1.0 + 0.2 * r * r),
        "two-scale": lambda r: np.exp(-r * r / 2) - 0.4 * np.exp(-2.0 * r * r),
        "shell": lambda r: np.exp(-(r - 1.0) ** 2),
        "quartic": lambda r: np.exp(-r * r) * (1.0 + 0.1 * r ** 4),
    }
    return [(f"{name}-n{dim}", fr.normalize(fr.sample(f, spec))) for name, f in profiles.items()]


def nd_suite(dim=2, half_width=8.0, n_points=128):
    """Non-radial functions on a 2-D or 3-D grid."""
    spec = fr.GridNDSpec(dim, half_width, n_points)
    profiles = {
        "tilted": lambda *x: np.exp(-sum(c * c for c in x) / 2) * (1.0 + 0.3 * x[0]),
        "anisotropic": lambda *x: np.exp(-sum((i + 1) * c * c for i, c in enumerate(x)) / 2),
        "saddle": lambda *x: x[0] * x[1] * np.exp(-sum(c * c for c in x) / 2),
        "mixed": lambda *x: np.exp(-sum(c * c for c in x) / 2) * (1.0 + 0.2 * x[0] ** 2),
    }
    return [(f"{name}-{dim}d", fr.normalize(fr.sample(f, spec))) for name, f in profiles.items()]


def projection_suite():
    """Thirty functions: eleven 1-D grid, nine Hermite and ten radial
    (five each in two and three dimensions)."""
    return grid_suite_1d() + hermite_suite(9) + radial_suite(2) + radial_suite(3)


def gaussians(count=50, seed=11, lo=0.01, hi=100.0):
    """``count`` Gaussians with log-uniform widths in ``[lo, hi]`` and
    amplitudes in ``[0.5, 2]``."""
    rng = np.random.default_rng(seed)
    alphas = np.exp(rng.uniform(math.log(lo), math.log(hi), count))
    amps = rng.uniform(0.5, 2.0, count) * rng.choice([-1.0, 1.0], count)
    return [GaussianParams(1, float(c), float(a)) for c, a in zip(amps, alphas)]


def grid_for_width(alpha, points_per_width=128, decay=40.0):
    """A 1-D grid holding ``exp(-alpha x^2)`` to ``exp(-decay)`` at the edge
    with a fixed number of points per standard width."""
    width = 1.0 / math.sqrt(alpha)
    L = math.sqrt(decay / alpha)
    N = 1 << max(4, math.ceil(math.log2(2.0 * L / width * points_per_width)))
    return fr.Grid1DSpec(L, N)


def sampled_gaussian(g, spec=None):
    return gaussian_eval(g, spec or grid_for_width(g.alpha))
