"""Unitary Fourier transform, Hermite spectra and de Bruijn's inequality.

Convention: ``u_hat(xi) = (2 pi)^(-n/2) \\int u(x) exp(-i x.xi) dx``.  With
it ``||u_hat|| = ||u||``, ``||xi u_hat|| = ||grad u||`` and
``||grad u_hat|| = ||x u||``, so the deficit is Fourier invariant with no
constants.

The frequency-2pi convention writes de Bruijn's inequality with ``exp(-2 pi i t w)`` and the
ground state ``2^(1/4) exp(-pi t^2)``.  Substituting ``t = x/sqrt(2 pi)``
and ``w = xi/sqrt(2 pi)`` maps it to the units used here:

=========================  ==============================
frequency-2pi form          unitary angular form
=========================  ==============================
``||t f|| ||w f_hat||``     ``(1/2pi) ||x f|| ||f'||``
constant ``1/(4 pi)``       constant ``1/2``
``2^(1/4) exp(-pi t^2)``    ``pi^(-1/4) exp(-x^2/2)``
``sum |<f,H_k>|^2 (2k+1)``  ``sum c_k^2 (2k+1)``
=========================  ==============================

so the bound reads ``||x f|| ||f'|| >= (1/2)[3 - 2(1 - d^2/2)^2]``, with
``d`` the distance from ``f`` to the nearest unit-norm Gaussian
``+- (2a/pi)^(1/4) exp(-a x^2)``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import funcrep as fr
from . import hermite as _h
from .deficit import compute_deficit
from .errors import InvalidInputError, IncompatibleRepresentationError
from .gaussfit import project

CONVENTION = "unitary-angular"
DEFAULT_MODES = 30


@dataclass(frozen=True, eq=False)
class FourierPair:
    u: fr.SampledFunction
    u_hat: fr.SampledFunction
    convention: str = CONVENTION


def self_dual_half_width(n_points):
    """Half-width ``L`` for which the frequency grid equals the space grid."""
    return math.sqrt(math.pi * n_points / 2.0)


def _transform_axis(v, axis, n, dx):
    sign = (-1.0) ** np.arange(n)
    shape = [1] * v.ndim
    shape[axis] = n
    sign = sign.reshape(shape)
    out = np.fft.fft(v * sign, axis=axis) * sign
    return out * (dx / math.sqrt(2.0 * math.pi) * (-1j) ** (n % 4))


def fourier(u):
    """Discrete approximation of the unitary transform.

    Nodes ``x_j = -L + j dx`` map to ``xi_k = -L_xi + k dxi`` with
    ``L_xi = pi N / (2L)`` and ``dxi = pi/L``; the phase factors from the
    shifted origins reduce to alternating signs.  The discrete map is
    exactly unitary in the grid inner products.
    """
    if u.kind not in ("grid1d", "gridnd"):
        raise IncompatibleRepresentationError(
            f"Fourier transform needs a grid; use hermite_fourier or resample a {u.kind} input")
    spec = u.spec
    n = spec.n_points
    v = np.asarray(u.values, dtype=complex)
    for axis in range(v.ndim):
        v = _transform_axis(v, axis, n, spec.spacing)
    L_xi = math.pi * n / (2.0 * spec.half_width)
    if math.isclose(L_xi, spec.half_width, rel_tol=1e-13):
        L_xi = spec.half_width  # keep self-dual grids bitwise identical
    if u.kind == "grid1d":
        target = fr.Grid1DSpec(L_xi, n)
    else:
        target = fr.GridNDSpec(spec.dim, L_xi, n)
    return FourierPair(u, fr.SampledFunction(target, v))


def real_part_if_real(u, rtol=1e-12):
    """Drop a negligible imaginary part (e.g. after a double transform)."""
    vals = np.asarray(u.values)
    if not np.iscomplexobj(vals):
        return u
    if np.max(np.abs(vals.imag), initial=0.0) <= rtol * max(np.max(np.abs(vals)), 1e-300):
        return u.with_values(vals.real.copy())
    return u


def reflect(u):
    """``x -> -x`` on a grid; the node ``-L`` has no mirror and maps to
    itself, matching the discrete double transform."""
    v = np.asarray(u.values)
    for axis in range(v.ndim):
        v = np.roll(np.flip(v, axis=axis), 1, axis=axis)
    return u.with_values(v)


# --------------------------------------------------------------------------
# Hermite spectra
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HermiteSpectrum:
    """``c_k = <f, h_k>`` for ``k <= K`` and ``residual = ||f - sum c_k h_k||^2``.

    ``source`` keeps the function the spectrum was taken from, if any, so
    that norms can be measured on it rather than on the truncation.
    """

    coefficients: np.ndarray
    residual: float = 0.0
    source: fr.SampledFunction | None = field(default=None, repr=False)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).ravel()
        if not np.all(np.isfinite(c)):
            raise InvalidInputError("Hermite coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        if self.residual < 0 or not math.isfinite(self.residual):
            raise InvalidInputError(f"residual must be a finite nonnegative number, got {self.residual}")

    @property
    def n_modes(self):
        return self.coefficients.size

    def norm_sq(self):
        return float(np.dot(self.coefficients, self.coefficients)) + self.residual

    def as_function(self):
        """The truncated series."""
        return fr.hermite(self.coefficients)


def hermite_spectrum(f, n_modes=DEFAULT_MODES + 1):
    """Project ``f`` onto ``h_0 .. h_{n_modes-1}``.

    Hermite input is truncated exactly.  Grid1D input uses the grid
    quadrature; the residual is measured directly as the norm of the
    remainder on the grid.
    """
    if f.kind == "hermite":
        c = np.asarray(f.values)
        return HermiteSpectrum(c[:n_modes].copy(), float(np.sum(c[n_modes:] ** 2)), f)
    if f.kind != "grid1d":
        raise IncompatibleRepresentationError("Hermite spectra are one-dimensional")
    if np.iscomplexobj(f.values):
        raise InvalidInputError("Hermite spectra are taken of real functions")
    x = f.spec.axis()
    H = _h.hermite_functions(x, n_modes - 1)
    w = fr.quadrature_weights(f.spec)
    c = H @ (w * f.values)
    rest = f.values - c @ H
    return HermiteSpectrum(c, float(np.dot(w, rest * rest)), f)


FOURIER_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])


def hermite_fourier(s):
    """Fourier transform in the Hermite basis.

    ``h_k`` has eigenvalue ``(-i)^k``.  For real coefficients the transform
    is ``Re + Im`` of the complex result, i.e. signs ``+, -, -, +``
    repeating; the even (real) and odd (imaginary) parity classes do not
    interact in any of the norms, so the deficit is unchanged.
    """
    c = s.coefficients
    signs = FOURIER_SIGNS[np.arange(c.size) % 4]
    return HermiteSpectrum(c * signs, s.residual)


def spectrum_deficit(s):
    """Deficit of the truncated series (exact ladder algebra)."""
    return compute_deficit(s.as_function()).deficit


def _check_unit(s, rtol=1e-8):
    if abs(s.norm_sq() - 1.0) > rtol:
        raise InvalidInputError(f"expected a unit-norm function, got ||f||^2 = {s.norm_sq()!r}")


@dataclass(frozen=True)
class DeBruijnCheck:
    lhs: float
    rhs: float
    margin: float

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "margin": self.margin}


def _measured(s):
    f = s.source if s.source is not None else s.as_function()
    return fr.moment_sq(f), fr.grad_norm_sq(f)


def debruijn_check(s):
    """``||x f||^2 + ||f'||^2`` against ``sum (2k+1) c_k^2 + residual``.

    On the span of ``h_0..h_K`` the two sides agree (the left side is the
    oscillator energy); any mass beyond the truncation carries energy at
    least ``2K+3`` per unit, so the margin is nonnegative.
    """
    _check_unit(s)
    xm, gm = _measured(s)
    lhs = xm + gm
    k = np.arange(s.n_modes)
    rhs = float(np.dot(2 * k + 1, s.coefficients ** 2)) + s.residual
    return DeBruijnCheck(lhs, rhs, lhs - rhs)


def debruijn_bound(d):
    """``(1/2)[3 - 2(1 - d^2/2)^2]``; increasing on ``[0, sqrt 2]``."""
    if d < 0:
        raise InvalidInputError("distance must be nonnegative")
    return 0.5 * (3.0 - 2.0 * (1.0 - 0.5 * d * d) ** 2)


@dataclass(frozen=True)
class DistanceBound:
    distance: float
    bound: float
    product: float
    margin: float

    def to_dict(self):
        return {"distance": self.distance, "bound": self.bound,
                "product": self.product, "margin": self.margin}


def unit_gaussian_distance(f):
    """Distance from a unit-norm real ``f`` to ``{+-g : g unit Gaussian}``.

    For unit ``g_a`` the squared distance is ``2 - 2|<f, g_a>|``, minimized at the
    width that maximizes the projection objective, giving
    ``d^2 = 2 - 2 sqrt(F*)``.
    """
    p = project(f)
    return math.sqrt(max(0.0, 2.0 - 2.0 * math.sqrt(p.objective)))


def debruijn_distance_bound(s):
    """The de Bruijn lower bound at the measured distance, and the product
    ``||x f|| ||f'||`` it bounds."""
    _check_unit(s)
    f = s.source if s.source is not None else s.as_function()
    d = unit_gaussian_distance(f)
    xm, gm = _measured(s)
    product = math.sqrt(xm * gm)
    bound = debruijn_bound(d)
    return DistanceBound(d, bound, product, product - bound)
