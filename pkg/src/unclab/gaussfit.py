"""Nearest Gaussian in L2 and the geometry of the extremal cone.

The extremal set is ``E = {c exp(-alpha |x|^2)}``.  For fixed ``alpha``
the best amplitude is ``c(alpha) = <u, g>/||g||^2`` with
``g = exp(-alpha |x|^2)``, so the projection reduces to maximizing

    F(alpha) = <u, g_alpha>^2 / ||g_alpha||^2

over ``alpha > 0``.  We scan a logarithmic grid, refine the best bracket
by golden-section search in ``log alpha`` and polish with a root solve of
``dF/dalpha``, whose zero is exactly the moment orthogonality condition.
All pairings use the native quadrature of ``u``, so the amplitude
condition ``<v*, u - v*> = 0`` holds to rounding.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.optimize import brentq

from . import funcrep as fr
from . import hermite as _h
from .deficit import gaussian_deficit_closed_form
from .errors import InvalidInputError, NotApplicableError

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GaussianParams:
    """``c exp(-alpha |x|^2)`` on R^dim."""

    dim: int
    c: float
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidInputError(f"Gaussian width must be positive, got {self.alpha}")

    @property
    def l2_sq(self):
        return self.c ** 2 * (math.pi / (2.0 * self.alpha)) ** (self.dim / 2.0)

    @property
    def moment_sq(self):
        return self.l2_sq * self.dim / (4.0 * self.alpha)

    @property
    def grad_sq(self):
        return self.l2_sq * self.dim * self.alpha

    def deficit(self):
        return gaussian_deficit_closed_form(self.dim, self.c, self.alpha).deficit

    def scaled(self, factor):
        return GaussianParams(self.dim, self.c * factor, self.alpha)

    def to_dict(self):
        return {"dim": self.dim, "c": self.c, "alpha": self.alpha}


def gaussian_eval(g, target):
    """Sample ``g`` on the descriptor ``target``.

    Hermite targets receive the exact expansion coefficients truncated to
    ``target.n_modes``.
    """
    if target.dim != g.dim:
        raise InvalidInputError(f"dimension mismatch: {g.dim} vs {target.dim}")
    if g.c == 0.0:
        return fr.zeros(target)
    if target.kind == "hermite":
        coeffs = g.c * _h.gaussian_coefficients(g.alpha, target.n_modes - 1)
        return fr.SampledFunction(target, coeffs)
    return fr.SampledFunction(target, g.c * np.exp(-g.alpha * fr.radius_sq(target)))


# --------------------------------------------------------------------------
# objective evaluation per representation
# --------------------------------------------------------------------------

class _SampledObjective:
    """``P(alpha) = <u, g>``, ``Q(alpha) = ||g||^2`` and their alpha-derivatives
    on a grid or radial quadrature."""

    CHUNK = 1 << 22

    def __init__(self, u):
        self.r2 = np.ravel(fr.radius_sq(u.spec))
        w = np.ravel(fr.quadrature_weights(u.spec))
        self.w = w
        self.wu = w * np.ravel(u.values)

    def values(self, alphas):
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        P = np.empty(alphas.size)
        Q = np.empty(alphas.size)
        step = max(1, self.CHUNK // self.r2.size)
        for i in range(0, alphas.size, step):
            a = alphas[i:i + step, None]
            G = np.exp(-a * self.r2)
            P[i:i + step] = G @ self.wu
            Q[i:i + step] = (G * G) @ self.w
        return P, Q

    def derivatives(self, alpha):
        G = np.exp(-alpha * self.r2)
        dP = -np.dot(self.wu * self.r2, G)
        dQ = -2.0 * np.dot(self.w * self.r2, G * G)
        return dP, dQ


class _HermiteObjective:
    def __init__(self, u):
        self.c = np.asarray(u.values)
        self.K = self.c.size - 1

    def values(self, alphas):
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        P = _h.gaussian_coefficients(alphas, self.K) @ self.c
        Q = np.sqrt(math.pi / (2.0 * alphas))
        return P, Q

    def derivatives(self, alpha):
        dP = float(_h.gaussian_coefficients_dalpha(alpha, self.K) @ self.c)
        dQ = -0.25 * math.sqrt(math.pi / 2.0) * alpha ** -1.5 * 2.0
        return dP, dQ


def _objective(u):
    if u.kind == "hermite":
        return _HermiteObjective(u)
    return _SampledObjective(u)


def _F(obj, alphas):
    P, Q = obj.values(alphas)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(Q > 0, P * P / np.where(Q > 0, Q, 1.0), 0.0)
    return F, P, Q


# --------------------------------------------------------------------------
# golden section
# --------------------------------------------------------------------------

def golden_section_max(f, a, b, tol=1e-10, max_iter=200, trace=None):
    """Maximize a unimodal ``f`` on ``[a, b]`` to bracket width ``tol``.

    ``trace`` (a list) receives every ``(x, f(x))`` evaluated.
    """
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    if trace is not None:
        trace += [(x1, f1), (x2, f2)]
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
            if trace is not None:
                trace.append((x1, f1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
            if trace is not None:
                trace.append((x2, f2))
    return (x1, f1) if f1 >= f2 else (x2, f2)


# --------------------------------------------------------------------------
# projection
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ProjectionResult:
    gaussian: GaussianParams
    vstar: fr.SampledFunction = field(repr=False)
    distance_sq: float
    r0: float
    r1: float
    r2: float
    alpha_trace: list = field(repr=False)
    is_zero: bool
    zero_threshold: float
    objective: float
    tied_alphas: tuple = ()
    at_range_boundary: bool = False
    edge_decay: float = 0.0

    def to_dict(self, trace=True):
        d = {
            "gaussian": self.gaussian.to_dict(),
            "distance_sq": self.distance_sq,
            "r0": self.r0, "r1": self.r1, "r2": self.r2,
            "is_zero": self.is_zero,
            "zero_threshold": self.zero_threshold,
            "objective": self.objective,
            "tied_alphas": list(self.tied_alphas),
            "at_range_boundary": self.at_range_boundary,
            "edge_decay": self.edge_decay,
        }
        if trace:
            d["alpha_trace"] = [[a, f] for a, f in self.alpha_trace]
        return d


def _refine(obj, s_lo, s_hi, tol, trace):
    def f(s):
        return float(_F(obj, [math.exp(s)])[0][0])

    s_best, _ = golden_section_max(f, s_lo, s_hi, tol=tol, trace=trace)

    def dlogF(s):
        a = math.exp(s)
        (P,), (Q,) = obj.values([a])
        dP, dQ = obj.derivatives(a)
        return 2.0 * dP * Q - P * dQ if P >= 0 else -(2.0 * dP * Q - P * dQ)

    # dF/dalpha = (2 P P' Q - P^2 Q') / Q^2 has the sign of P (2 P' Q - P Q');
    # its zero is the moment orthogonality condition, so polish on it
    step = 1e-9
    while step < 1e-1:
        lo, hi = max(s_lo, s_best - step), min(s_hi, s_best + step)
        g_lo, g_hi = dlogF(lo), dlogF(hi)
        if g_lo > 0 > g_hi:
            s_best = brentq(dlogF, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
            break
        if lo == s_lo and hi == s_hi:
            break
        step *= 10.0
    F_best = f(s_best)
    trace.append((s_best, F_best))
    return s_best, F_best


def project(u, tol=1e-8, alpha_range=(1e-4, 1e4), n_alpha=200):
    """L2-nearest point of the extremal cone to ``u``.

    Parameters
    ----------
    u : SampledFunction
        Real-valued; projected on its own representation.
    tol : float
        Relative bracket width of the golden-section stage, and the
        zero-detection threshold: ``v* = 0`` when
        ``max F <= tol^2 ||u||^2``.
    alpha_range, n_alpha
        Logarithmic scan grid for the width.

    Returns
    -------
    ProjectionResult
        ``alpha_trace`` holds every ``(alpha, F(alpha))`` evaluated.
    """
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    if np.iscomplexobj(u.values):
        raise InvalidInputError("projection needs a real-valued function")
    lo, hi = alpha_range
    if not 0 < lo < hi:
        raise InvalidInputError(f"bad alpha range {alpha_range}")
    unorm = fr.norm_l2_sq(u)
    threshold = tol * tol * unorm
    if unorm == 0.0:
        zero = fr.zeros(u.spec)
        return ProjectionResult(GaussianParams(u.dim, 0.0, 1.0), zero, 0.0, 0.0, 0.0, 0.0,
                                [], True, 0.0, 0.0)

    obj = _objective(u)
    s_grid = np.linspace(math.log(lo), math.log(hi), n_alpha)
    F_grid = _F(obj, np.exp(s_grid))[0]
    log_trace = list(zip(s_grid.tolist(), F_grid.tolist()))

    # candidate brackets: local maxima of the scan within 1e-3 of the best
    fmax = F_grid.max()
    peaks = [i for i in range(n_alpha)
             if (i == 0 or F_grid[i] >= F_grid[i - 1])
             and (i == n_alpha - 1 or F_grid[i] >= F_grid[i + 1])
             and F_grid[i] >= fmax * (1.0 - 1e-3)]
    refined = []
    for i in peaks:
        a, b = s_grid[max(i - 1, 0)], s_grid[min(i + 1, n_alpha - 1)]
        s_i, F_i = _refine(obj, a, b, tol, log_trace)
        refined.append((s_i, F_i, i))
    F_best = max(F for _, F, _ in refined)
    ties = sorted((s, F, i) for s, F, i in refined if F >= F_best * (1.0 - tol))
    s_star, F_star, i_star = ties[0]
    alpha = math.exp(s_star)
    boundary = i_star in (0, n_alpha - 1)
    trace = [(math.exp(s), F) for s, F in log_trace]
    tied = tuple(math.exp(s) for s, _, _ in ties) if len(ties) > 1 else ()

    if F_star <= threshold:
        vstar = fr.zeros(u.spec)
        params = GaussianParams(u.dim, 0.0, alpha)
        is_zero = True
        uu = u
    else:
        (P,), (Q,) = obj.values([alpha])
        params = GaussianParams(u.dim, float(P / Q), alpha)
        is_zero = False
        if u.kind == "hermite":
            n_modes = max(u.spec.n_modes, _h.gaussian_modes_needed(alpha) + 1)
            uu = fr.pad_modes(u, n_modes)
            vstar = gaussian_eval(params, fr.HermiteSpec(n_modes))
        else:
            uu = u
            vstar = gaussian_eval(params, u.spec)
    diff = uu - vstar
    return ProjectionResult(
        gaussian=params,
        vstar=vstar,
        distance_sq=fr.norm_l2_sq(diff),
        r0=fr.inner(vstar, diff),
        r1=-fr.moment_inner(vstar, diff),
        r2=-fr.grad_inner(vstar, diff),
        alpha_trace=trace,
        is_zero=is_zero,
        zero_threshold=threshold,
        objective=float(F_star),
        tied_alphas=tied,
        at_range_boundary=boundary,
        edge_decay=_edge_decay(u.spec, alpha) if not is_zero else 0.0,
    )


def _edge_decay(spec, alpha):
    """``exp(-alpha r_edge^2)``: how much of the fitted Gaussian the box cuts
    off (zero for Hermite series)."""
    if spec.kind == "hermite":
        return 0.0
    edge = spec.max_radius if spec.kind == "radial" else spec.half_width
    return math.exp(-alpha * edge * edge)


# --------------------------------------------------------------------------
# radial / spherical decomposition
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialSplit:
    u_r: fr.SampledFunction
    u_s: fr.SampledFunction


def _reflect_1d(values):
    # x_j -> -x_j maps index j to N - j; the node -L has no mirror on the grid
    out = np.zeros_like(values)
    out[1:] = values[:0:-1]
    return out


def radial_split(u, method="orbit", n_angular=None):
    """Split ``u = u_r + u_s`` into radial and spherical parts.

    Grid1D: even and odd parts.  Hermite: even and odd coefficients.
    Radial input is already radial.  GridND offers two methods:

    ``"orbit"`` (default)
        average over nodes of equal ``|x|``.  This is the orthogonal
        projection onto the closed span of the sampled Gaussians, so the
        split is exactly orthogonal in the grid inner product.
    ``"interp"``
        spherical average of the multilinear interpolant using
        ``n_angular`` (default ``64 n``) directions per shell, spread back
        onto the grid by linear interpolation in ``r``.
    """
    if u.kind == "radial":
        return RadialSplit(u, fr.zeros(u.spec))
    if u.kind == "hermite":
        even = np.array(u.values)
        even[1::2] = 0.0
        u_r = u.with_values(even)
        return RadialSplit(u_r, u - u_r)
    if u.kind == "grid1d":
        u_r = u.with_values(0.5 * (u.values + _reflect_1d(u.values)))
        return RadialSplit(u_r, u - u_r)
    if method == "orbit":
        u_r = u.with_values(_orbit_average(u))
    elif method == "interp":
        u_r = u.with_values(_interp_average(u, n_angular or 64 * u.dim))
    else:
        raise InvalidInputError(f"unknown radial split method {method!r}")
    return RadialSplit(u_r, u - u_r)


def _orbit_average(u):
    spec = u.spec
    m = np.arange(spec.n_points) - spec.n_points // 2
    idx = np.meshgrid(*([m] * spec.dim), indexing="ij")
    key = sum(i * i for i in idx).ravel()
    _, inv = np.unique(key, return_inverse=True)
    vals = np.ravel(u.values)
    sums = np.bincount(inv, weights=vals)
    counts = np.bincount(inv)
    return (sums / counts)[inv].reshape(spec.shape)


def _sphere_directions(dim, count):
    if dim == 2:
        t = 2.0 * math.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(t), np.sin(t)], axis=1)
    # Fibonacci lattice on S^2
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    phi = math.pi * (3.0 - math.sqrt(5.0)) * i
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


def _interp_average(u, n_angular):
    spec = u.spec
    axis = spec.axis()
    interp = RegularGridInterpolator([axis] * spec.dim, u.values, method="linear",
                                     bounds_error=False, fill_value=0.0)
    h = spec.spacing
    shells = h * np.arange(int(spec.half_width / h) + 1)
    dirs = _sphere_directions(spec.dim, n_angular)
    pts = shells[:, None, None] * dirs[None, :, :]
    profile = interp(pts.reshape(-1, spec.dim)).reshape(shells.size, n_angular).mean(axis=1)
    r = np.sqrt(fr.radius_sq(spec))
    return np.interp(r, shells, profile, right=0.0)


# --------------------------------------------------------------------------
# geometry checks
# --------------------------------------------------------------------------

def _sign_samples(u):
    if u.kind == "hermite":
        K = u.spec.n_modes
        grid = fr.Grid1DSpec(max(12.0, 2.0 * math.sqrt(2 * K + 1) + 8.0), 4096)
        return fr.resample(u, grid).values
    return np.ravel(u.values)


def sign_change_check(u, p, tol_sign=None, cone_tol=1e-10):
    """Whether ``u - v*`` takes both signs on the sample set.

    Raises NotApplicableError when ``u`` is (numerically) on the cone.
    ``tol_sign`` defaults to ``1e-8 max|u - v*|``.
    """
    if p.distance_sq <= cone_tol * max(fr.norm_l2_sq(u), 1e-300):
        raise NotApplicableError("u lies on the extremal cone; u - v* vanishes")
    diff = (fr.pad_modes(u, p.vstar.spec.n_modes) if u.kind == "hermite" else u) - p.vstar
    d = _sign_samples(diff)
    if tol_sign is None:
        tol_sign = 1e-8 * float(np.max(np.abs(d)))
    return bool(d.min() < -tol_sign and d.max() > tol_sign)


def _default_probe(g):
    if g.dim == 1:
        spec = fr.Grid1DSpec(12.0, 1024)
    else:
        spec = fr.RadialSpec(g.dim, 12.0, 2048)
    return gaussian_eval(GaussianParams(g.dim, 1.0 if g.c == 0 else g.c, g.alpha), spec)


def cone_check(g, c, test_inputs=None, rtol=1e-6):
    """Check that ``c g`` stays in the cone and that projection commutes
    with scaling by ``c`` on ``test_inputs``."""
    scaled = g.scaled(c)
    scale = max(1.0, scaled.moment_sq * scaled.grad_sq)
    if abs(scaled.deficit()) > 1e-12 * scale:
        return False
    if test_inputs is None:
        test_inputs = [_default_probe(g)]
    for u in test_inputs:
        pu = project(u)
        pcu = project(c * u)
        want = pu.gaussian.c * c
        if abs(pcu.gaussian.c - want) > rtol * max(abs(want), 1e-300):
            if not (c == 0 and pcu.gaussian.c == 0):
                return False
        if not (pu.is_zero or c == 0):
            if abs(pcu.gaussian.alpha - pu.gaussian.alpha) > rtol * pu.gaussian.alpha:
                return False
    return True
