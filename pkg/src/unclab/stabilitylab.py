"""Empirical stability of the uncertainty inequality.

For ``||u|| = 1`` outside the extremal cone, with ``v*`` the nearest
Gaussian and ``w = v* - u``, the transversality conditions kill the odd
terms of the quartic expansion around ``v*``, leaving

    delta(u) = delta''(v*)(w) + ||w||^4 delta(w_hat)

(``w_hat = w/||w||``; ``delta''(v*)(w)`` is the quadratic coefficient).
An AM-GM step on that coefficient gives the lower bound

    delta''(v*)(w) >= (n^2/2) ||v*||^2 ||w||^2 (sqrt(1 + 4 delta(w_hat)/n^2) - 1).

The constants found by scans are per-family minima, reported as
empirical evidence only.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
import itertools
import math
import os

import numpy as np

from . import funcrep as fr
from .deficit import compute_deficit, deficit, dilate, variation_terms
from .errors import (DegenerateInputError, InvalidInputError, NotApplicableError)
from .gaussfit import project, radial_split

NORM_TOL = 1e-8
CONE_TOL = 1e-12


def thread_count():
    """Worker cap from ``UNCLAB_THREADS`` (default 1, i.e. serial)."""
    raw = os.environ.get("UNCLAB_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(f"UNCLAB_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def ordered_map(func, items, workers=None):
    """``map`` over ``items`` with up to ``workers`` threads; results keep
    the input order."""
    items = list(items)
    workers = thread_count() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) < 2:
        return [func(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def _check_unit(u):
    nsq = fr.norm_l2_sq(u)
    if abs(nsq - 1.0) > NORM_TOL:
        raise InvalidInputError(f"expected ||u|| = 1, got ||u||^2 = {nsq!r}")


def _common(u, vstar):
    if u.kind == "hermite":
        return fr.pad_modes(u, vstar.spec.n_modes)
    return u


def chain_lower_bound(dim, vstar_sq, w_sq, d_hat, factor=None):
    """``factor ||v*||^2 ||w||^2 (sqrt(1 + 4 d_hat/n^2) - 1)``; the factor
    defaults to ``n^2/2``."""
    if factor is None:
        factor = dim * dim / 2.0
    return factor * vstar_sq * w_sq * (math.sqrt(1.0 + 4.0 * d_hat / (dim * dim)) - 1.0)


@dataclass(frozen=True)
class StabilityRecord:
    family: str
    parameters: dict
    dim: int
    deficit: float
    distance_sq: float
    ratio: float
    d2_at_vstar: float
    chain_lower: float
    chain_lower_half_n: float
    d_hat: float
    vstar_norm: float
    decomposition_residual: float
    is_zero: bool

    def to_dict(self):
        d = asdict(self)
        d["parameters"] = dict(self.parameters)
        return d


def stability_record(u, family="custom", parameters=None):
    """Deficit, distance and the decomposition terms for a unit-norm ``u``.

    ``decomposition_residual`` is
    ``|delta(u) - (delta''(v*)(w) + ||w||^4 delta(w_hat))| / (1 + delta(u))``.
    ``chain_lower_half_n`` evaluates the same bound with ``n/2`` in place of
    ``n^2/2``; the two agree in one dimension.
    """
    _check_unit(u)
    p = project(u)
    if p.distance_sq <= CONE_TOL:
        raise DegenerateInputError("u lies on the extremal cone")
    uu = _common(u, p.vstar)
    w = p.vstar - uu
    w_sq = fr.norm_l2_sq(w)
    w_hat = w / math.sqrt(w_sq)
    d_u = deficit(uu)
    d_hat = deficit(w_hat)
    d2 = variation_terms(p.vstar, w).d2
    vstar_sq = fr.norm_l2_sq(p.vstar)
    decomposition = d2 + w_sq * w_sq * d_hat
    return StabilityRecord(
        family=family,
        parameters=dict(parameters or {}),
        dim=u.dim,
        deficit=d_u,
        distance_sq=p.distance_sq,
        ratio=d_u / p.distance_sq,
        d2_at_vstar=d2,
        chain_lower=chain_lower_bound(u.dim, vstar_sq, w_sq, d_hat),
        chain_lower_half_n=chain_lower_bound(u.dim, vstar_sq, w_sq, d_hat, u.dim / 2.0),
        d_hat=d_hat,
        vstar_norm=math.sqrt(vstar_sq),
        decomposition_residual=abs(d_u - decomposition) / (1.0 + abs(d_u)),
        is_zero=p.is_zero,
    )


@dataclass(frozen=True)
class SecondVariation:
    value: float
    lower_bound: float
    lower_bound_half_n: float

    @property
    def holds(self):
        return self.value > 0 and self.value >= self.lower_bound - 1e-6

    def to_dict(self):
        return {"value": self.value, "lower_bound": self.lower_bound,
                "lower_bound_half_n": self.lower_bound_half_n, "holds": self.holds}


def second_variation_positivity(u, radial_tol=1e-8):
    """``delta''(v*)(v* - u)`` and its AM-GM lower bound.

    Needs ``u`` off the cone and with a nonzero radial part.
    """
    nsq = fr.norm_l2_sq(u)
    split = radial_split(u)
    if fr.norm_l2_sq(split.u_r) <= radial_tol ** 2 * nsq:
        raise NotApplicableError("u has no radial part, so v* = 0")
    p = project(u)
    if p.distance_sq <= CONE_TOL * nsq:
        raise NotApplicableError("u lies on the extremal cone")
    w = p.vstar - _common(u, p.vstar)
    w_sq = fr.norm_l2_sq(w)
    d_hat = deficit(w) / (w_sq * w_sq)
    vstar_sq = fr.norm_l2_sq(p.vstar)
    return SecondVariation(
        value=variation_terms(p.vstar, w).d2,
        lower_bound=chain_lower_bound(u.dim, vstar_sq, w_sq, d_hat),
        lower_bound_half_n=chain_lower_bound(u.dim, vstar_sq, w_sq, d_hat, u.dim / 2.0),
    )


# --------------------------------------------------------------------------
# test families
# --------------------------------------------------------------------------

def _pow2_at_least(n):
    return 1 << max(4, math.ceil(math.log2(n)))


def _hermite_perturbation(mode=4, eps=0.1, **_):
    mode = int(mode)
    if mode < 1:
        raise InvalidInputError("perturbation mode must be >= 1")
    c = np.zeros(mode + 1)
    c[0] = 1.0
    c[mode] += eps
    return fr.normalize(fr.hermite(c))


def _odd_only(k=1, **_):
    k = int(k)
    if k % 2 == 0 or k < 1:
        raise InvalidInputError("odd-only family needs an odd mode index")
    return fr.hermite_mode(k)


def _random_hermite(seed=0, modes=8, **_):
    rng = np.random.default_rng(int(seed))
    c = rng.standard_normal(int(modes) + 1)
    return fr.normalize(fr.hermite(c))


def _two_bump(a=2.0, alpha=0.5, c1=1.0, c2=1.0, **_):
    width = 1.0 / math.sqrt(alpha)
    # the nearest Gaussian of well-separated bumps is about 3.5|a| wide
    # and has to fit in the box too
    L = max(12.0, 10.0 * width + 16.0 * abs(a))
    N = _pow2_at_least(2.0 * L / (0.02 * width))
    spec = fr.Grid1DSpec(L, N)
    x = spec.axis()
    v = c1 * np.exp(-alpha * (x - a) ** 2) + c2 * np.exp(-alpha * (x + a) ** 2)
    return fr.normalize(fr.SampledFunction(spec, v))


def _radial(dim, profile, R=12.0, step=0.006):
    spec = fr.RadialSpec(int(dim), R, _pow2_at_least(R / step))
    return fr.normalize(fr.SampledFunction(spec, profile(spec.radii())))


def _radial_perturbation(dim=2, m=1, eps=0.2, **_):
    return _radial(dim, lambda r: np.exp(-r * r / 2) * (1.0 + eps * r ** (2 * int(m))))


def _two_scale(dim=2, beta=2.0, t=0.5, **_):
    R = max(12.0, 8.0 / math.sqrt(min(beta, 0.5)))
    return _radial(dim, lambda r: np.exp(-r * r / 2) + t * np.exp(-beta * r * r), R)


def _shell(dim=2, a=1.0, **_):
    return _radial(dim, lambda r: np.exp(-(r - a) ** 2), 12.0 + 4.0 * abs(a))


FAMILIES = {
    "hermite-perturbation": (_hermite_perturbation, (1,)),
    "odd-only": (_odd_only, (1,)),
    "random-hermite": (_random_hermite, (1,)),
    "two-bump": (_two_bump, (1,)),
    "radial-perturbation": (_radial_perturbation, (1, 2, 3)),
    "two-scale": (_two_scale, (1, 2, 3)),
    "shell": (_shell, (1, 2, 3)),
}


DEFAULT_GRIDS = {
    "hermite-perturbation": {"mode": [1, 2, 3, 4, 5, 6], "eps": [0.05, 0.1, 0.2, 0.4]},
    "odd-only": {"k": [1, 3, 5]},
    "random-hermite": {"seed": list(range(10))},
    "two-bump": {"a": [0.5, 1.0, 2.0, 4.0, 8.0]},
    "radial-perturbation": {"m": [1, 2], "eps": [0.1, 0.5]},
    "two-scale": {"beta": [0.25, 2.0], "t": [0.5, -0.3]},
    "shell": {"a": [0.5, 1.0, 2.0]},
}


def family_member(family, dim=1, **params):
    """Build one unit-norm member of a named test family."""
    try:
        build, dims = FAMILIES[family]
    except KeyError:
        raise InvalidInputError(f"unknown family {family!r}; choose from {sorted(FAMILIES)}") from None
    if dim not in dims:
        raise InvalidInputError(f"family {family!r} supports dimensions {dims}, not {dim}")
    if dims != (1,):
        params["dim"] = dim
    return build(**params)


@dataclass(frozen=True)
class ScanResult:
    family: str
    dim: int
    records: list
    skipped: list
    min_ratio: float
    argmin: dict
    min_vstar_norm: float
    max_decomposition_residual: float

    def summary(self):
        return {
            "family": self.family,
            "dim": self.dim,
            "count": len(self.records),
            "skipped": [dict(s) for s in self.skipped],
            "empirical_min_ratio": self.min_ratio,
            "argmin": dict(self.argmin),
            "empirical_min_vstar_norm": self.min_vstar_norm,
            "max_decomposition_residual": self.max_decomposition_residual,
        }


def parameter_grid(grid):
    """Cartesian product of ``{name: [values]}`` in key order."""
    if not grid or any(len(list(v)) == 0 for v in grid.values()):
        raise InvalidInputError("parameter grid is empty")
    names = list(grid)
    return [dict(zip(names, combo)) for combo in itertools.product(*(list(grid[k]) for k in names))]


def ratio_scan(family, grid, dim=1, workers=None):
    """Stability records over a parameter grid of one family.

    Members on the cone (distance zero) are listed in ``skipped``.
    """
    points = parameter_grid(grid)

    def run(params):
        u = family_member(family, dim, **params)
        try:
            return stability_record(u, family, params)
        except DegenerateInputError:
            return None

    results = ordered_map(run, points, workers)
    records = [r for r in results if r is not None]
    skipped = [p for p, r in zip(points, results) if r is None]
    if not records:
        raise DegenerateInputError("every scanned function lies on the extremal cone")
    best = min(records, key=lambda r: r.ratio)
    return ScanResult(
        family=family,
        dim=dim,
        records=records,
        skipped=skipped,
        min_ratio=best.ratio,
        argmin=best.parameters,
        min_vstar_norm=min(r.vstar_norm for r in records),
        max_decomposition_residual=max(r.decomposition_residual for r in records),
    )


# --------------------------------------------------------------------------
# sharpness under dilation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SharpnessCurve:
    lambdas: tuple
    quotients: tuple
    deficits: tuple
    max_projection_mismatch: float = field(default=0.0)

    def scaled(self, power=2):
        """``Q(lambda) lambda^power``."""
        return tuple(q * lam ** power for lam, q in zip(self.lambdas, self.quotients))

    def rows(self):
        return list(zip(self.lambdas, self.quotients))


def _weighted_norm_sq(w):
    return fr.norm_l2_sq(w) + fr.grad_norm_sq(w) + fr.moment_sq(w)


def sharpness_curve(u, lambdas, validate=True):
    """``Q(lambda) = delta(Phi u) / (||Phi w||^2 + ||grad Phi w||^2 + ||x Phi w||^2)``
    with ``w = u - v*(u)`` and ``Phi`` the dilation by ``lambda``.

    The nearest Gaussian of ``Phi u`` is taken as ``Phi v*``; with
    ``validate`` a fresh projection of ``Phi u`` is compared against it and
    the largest relative distance mismatch is reported.  Hermite input is
    resampled to a grid first.
    """
    lambdas = tuple(float(lam) for lam in lambdas)
    if not lambdas or min(lambdas) <= 0:
        raise InvalidInputError("lambda grid must be nonempty and positive")
    if u.kind == "hermite":
        K = u.spec.n_modes
        u = fr.resample(u, fr.Grid1DSpec(max(12.0, 2.0 * math.sqrt(2 * K + 1) + 8.0), 2048))
    _check_unit(u)
    p = project(u)
    if p.distance_sq <= CONE_TOL:
        raise DegenerateInputError("u lies on the extremal cone")
    w = u - p.vstar

    def point(lam):
        ul = dilate(u, lam)
        wl = dilate(w, lam)
        d = deficit(ul)
        mismatch = 0.0
        if validate:
            lo, hi = 1e-4 * lam * lam, 1e4 * lam * lam
            fresh = project(ul, alpha_range=(lo, hi))
            wsq = fr.norm_l2_sq(wl)
            mismatch = abs(fresh.distance_sq - wsq) / wsq
        return d / _weighted_norm_sq(wl), d, mismatch

    out = ordered_map(point, lambdas)
    return SharpnessCurve(
        lambdas=lambdas,
        quotients=tuple(q for q, _, _ in out),
        deficits=tuple(d for _, d, _ in out),
        max_projection_mismatch=max(m for _, _, m in out),
    )


# --------------------------------------------------------------------------
# sharpened inequality
# --------------------------------------------------------------------------

def sharpened_margin(record, C1, c4=0.0):
    """Margin of the sharpened inequality for the unit-norm function behind
    a stability record: ``delta - C1 D - c4 D^2``."""
    D = record.distance_sq
    return record.deficit - C1 * D - c4 * D * D


def sharpened_inequality_check(u, C1, c4=0.0):
    """``||xu||^2 ||grad u||^2 - [(n^2/4)||u||^4 + C1 ||u||^2 D + c4 D^2]``
    with ``D = ||u - v*||^2``."""
    b = compute_deficit(u)
    D = project(u).distance_sq if b.l2_sq > 0 else 0.0
    lhs = b.moment_sq * b.grad_sq
    rhs = 0.25 * u.dim ** 2 * b.l2_sq ** 2 + C1 * b.l2_sq * D + c4 * D * D
    return lhs - rhs


@dataclass(frozen=True)
class FittedConstants:
    C1: float
    c4_at_C1: float

    def to_dict(self):
        return {"empirical_C1": self.C1, "empirical_c4_at_C1": self.c4_at_C1}


def fit_sharpened_constants(records):
    """Largest ``C1`` (with ``c4 = 0``) passing on all unit-norm records,
    then the largest ``c4`` passing together with that ``C1``."""
    if not records:
        raise InvalidInputError("no records to fit")
    C1 = min(r.deficit / r.distance_sq for r in records)
    c4 = min((r.deficit - C1 * r.distance_sq) / r.distance_sq ** 2 for r in records)
    return FittedConstants(C1, c4)
