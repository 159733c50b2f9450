"""The Heisenberg deficit, dilations, and the quartic expansion.

For ``u`` on R^n::

    delta(u) = ||x u||^2 ||grad u||^2 - (n^2/4) ||u||^4

``delta(u + eps*phi)`` is a polynomial of degree four in ``eps`` whose
coefficients are built from six pairings of ``u`` and ``phi``;
:func:`variation_terms` evaluates them from cached pairings, never by
numerical differentiation.
"""

from dataclasses import dataclass, asdict
import math

from . import funcrep as fr
from .errors import InvalidInputError


@dataclass(frozen=True)
class DeficitBreakdown:
    dim: int
    l2_sq: float
    grad_sq: float
    moment_sq: float
    deficit: float
    lambda_grad: float | None
    lambda_moment: float | None
    delta_norm: float

    def normalized_deficit(self):
        """``delta(u / ||u||)``, using four-homogeneity."""
        if self.l2_sq == 0.0:
            return 0.0
        return self.deficit / self.l2_sq ** 2

    def to_dict(self):
        d = asdict(self)
        d["normalized_deficit"] = self.normalized_deficit()
        return d


def deficit_from_norms(dim, l2_sq, grad_sq, moment_sq):
    """Assemble a :class:`DeficitBreakdown` from the three squared norms."""
    deficit = moment_sq * grad_sq - 0.25 * dim * dim * l2_sq * l2_sq
    if l2_sq > 0.0 and grad_sq > 0.0:
        lam_g = -0.5 * dim * l2_sq / grad_sq
        lam_m = -2.0 / dim * moment_sq / l2_sq
    else:
        lam_g = lam_m = None
    dnorm = math.sqrt(l2_sq) + math.sqrt(grad_sq) + math.sqrt(moment_sq)
    return DeficitBreakdown(dim, l2_sq, grad_sq, moment_sq, deficit,
                            lam_g, lam_m, dnorm)


def compute_deficit(u):
    """Deficit and diagnostics of a sampled function.

    The deficit is reported raw; quadrature error may make it slightly
    negative for Gaussians.
    """
    return deficit_from_norms(u.dim, fr.norm_l2_sq(u), fr.grad_norm_sq(u),
                              fr.moment_sq(u))


def deficit(u):
    return compute_deficit(u).deficit


def delta_norm(u):
    """``||u|| + ||grad u|| + ||x u||``."""
    return compute_deficit(u).delta_norm


@dataclass(frozen=True)
class DilationFactor:
    lam: float

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidInputError(f"dilation factor must be positive, got {self.lam}")


def dilate(u, factor):
    """``(Phi_lam u)(x) = lam^(n/2) u(lam x)``.

    Grid and radial samples are kept as-is and the box is rescaled by
    ``1/lam``, so no interpolation happens.  Hermite input must be
    resampled to a grid first.
    """
    lam = factor.lam if isinstance(factor, DilationFactor) else DilationFactor(factor).lam
    if u.kind == "hermite":
        raise InvalidInputError("dilate a Hermite series after resampling it to a grid")
    if lam == 1.0:
        return u
    return fr.SampledFunction(u.spec.rescaled(1.0 / lam), u.values * lam ** (u.dim / 2.0))


@dataclass(frozen=True)
class Pairings:
    """The Gram entries needed by the expansion: for each of the three
    pairings (plain, moment, gradient) the values ``<u,u>, <u,phi>, <phi,phi>``."""
    dim: int
    uu: float
    up: float
    pp: float
    xuu: float
    xup: float
    xpp: float
    guu: float
    gup: float
    gpp: float


def pairings(u, phi):
    return Pairings(
        u.dim,
        fr.inner(u, u), fr.inner(u, phi), fr.inner(phi, phi),
        fr.moment_inner(u, u), fr.moment_inner(u, phi), fr.moment_inner(phi, phi),
        fr.grad_inner(u, u), fr.grad_inner(u, phi), fr.grad_inner(phi, phi),
    )


@dataclass(frozen=True)
class VariationTerms:
    d0: float
    d1: float
    d2: float
    d3: float
    d4: float

    def coefficients(self):
        return (self.d0, self.d1, self.d2, self.d3, self.d4)

    def evaluate(self, eps):
        return sum(c * eps ** j for j, c in enumerate(self.coefficients()))

    def to_dict(self):
        return asdict(self)


def terms_from_pairings(p):
    n2 = p.dim * p.dim
    d0 = p.xuu * p.guu - 0.25 * n2 * p.uu ** 2
    d1 = 2 * p.xup * p.guu + 2 * p.gup * p.xuu - n2 * p.uu * p.up
    d2 = (p.xpp * p.guu + 4 * p.gup * p.xup + p.gpp * p.xuu
          - 0.5 * n2 * p.uu * p.pp - n2 * p.up ** 2)
    d3 = 2 * p.xup * p.gpp + 2 * p.xpp * p.gup - n2 * p.up * p.pp
    d4 = p.xpp * p.gpp - 0.25 * n2 * p.pp ** 2
    return VariationTerms(d0, d1, d2, d3, d4)


def variation_terms(u, phi):
    """Coefficients of ``delta(u + eps*phi) = sum_j eps^j d_j``.

    ``d1, d2, d3`` are the first, second and third variations of the
    deficit at ``u`` in direction ``phi``; ``d4 = delta(phi)``.
    """
    return terms_from_pairings(pairings(u, phi))


def expansion_residual(u, phi, eps_list):
    """Largest relative mismatch between the direct deficit of
    ``u + eps*phi`` and the quartic polynomial, over ``eps_list``."""
    eps_list = list(eps_list)
    if not eps_list:
        raise InvalidInputError("eps_list must be nonempty")
    terms = variation_terms(u, phi)
    worst = 0.0
    for eps in eps_list:
        direct = deficit(u + eps * phi)
        worst = max(worst, abs(direct - terms.evaluate(eps)) / (1.0 + abs(direct)))
    return worst


def gaussian_deficit_closed_form(dim, c, alpha):
    """Deficit of ``c exp(-alpha |x|^2)`` from closed-form norms (zero up to
    rounding)."""
    base = c * c * (math.pi / (2.0 * alpha)) ** (dim / 2.0)
    return deficit_from_norms(dim, base, base * dim * alpha, base * dim / (4.0 * alpha))
