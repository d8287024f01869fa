"""Fractional time derivatives and capacity integrals on the cutoff family.

The central objects are the power cutoff ``phi(t) = (1 - t/T)_+^mu`` and its
smooth variant, the right-sided Riemann-Liouville derivative ``D^nu_{t|T}``
(which has a gamma-ratio closed form on the cutoff family), the left-sided
Caputo derivative, and the two time integrals whose T-scaling drives the
capacity estimates:

    integral_0^T phi^{-1/(p-1)} |D^nu phi|^{p/(p-1)} dt = C * T^{1 - nu p/(p-1)}
    (1/T) integral_0^T D^nu phi dt                      = C * T^{-nu}

Every closed form here has a quadrature twin used as its oracle in the tests.
Orders exactly 1 and 2 dispatch to the classical derivatives, which are the
integer limits of the fractional definitions under the sign conventions used
throughout (right derivative of order 1 is -d/dt, of order 2 is +d^2/dt^2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

from scipy.integrate import quad
from scipy.special import gammaln

from .errors import (
    DomainError,
    IntegrabilityError,
    MissingDataError,
    QuadratureError,
)

__all__ = [
    "CutoffKind",
    "DerivativeSide",
    "FracOrder",
    "TestFunctionParams",
    "cutoff_value",
    "smooth_ramp",
    "smooth_ramp_derivative",
    "rl_right_derivative_closed",
    "rl_right_derivative_quadrature",
    "caputo_left_derivative",
    "capacity_time_integral",
    "capacity_time_integral_quadrature",
    "mean_time_integral",
    "mean_time_integral_quadrature",
    "smooth_cutoff_capacity",
]

_QUAD_LIMIT = 200


class CutoffKind(enum.Enum):
    POWER = "power"
    SMOOTH = "smooth"


class DerivativeSide(enum.Enum):
    TIME_LEFT = "left"
    TIME_RIGHT = "right"


@dataclass(frozen=True)
class FracOrder:
    """A fractional derivative order with its side and regime.

    ``value`` must lie in (0, 2].  ``regime`` is the open interval (0, 1) or
    (1, 2), or the integer 1 or 2 at which the classical derivative is meant.
    """

    value: float
    side: DerivativeSide = DerivativeSide.TIME_LEFT

    def __post_init__(self):
        if not 0.0 < self.value <= 2.0:
            raise DomainError(f"fractional order must lie in (0, 2], got {self.value}")

    @property
    def regime(self):
        if self.value in (1.0, 2.0):
            return int(self.value)
        return (0.0, 1.0) if self.value < 1.0 else (1.0, 2.0)

    @property
    def is_integer(self) -> bool:
        return self.value in (1.0, 2.0)


def default_cutoff_exponent(order: float) -> float:
    """Default mu for a requested derivative order: max(2*order + 3, 10)."""
    return max(2.0 * order + 3.0, 10.0)


@dataclass(frozen=True)
class TestFunctionParams:
    """Parameters of the time cutoff family.

    ``mu`` is the power of the cutoff (1 - t/T)_+^mu; ``ell`` the power of the
    smooth variant.  ``mu`` must dominate every derivative order taken of phi
    with margin >= 1 so the capacity integrals converge.
    """

    T: float
    mu: float
    ell: Optional[float] = None
    kind: CutoffKind = CutoffKind.POWER

    def __post_init__(self):
        if self.T <= 0:
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if self.mu <= 0:
            raise DomainError(f"cutoff exponent mu must be positive, got {self.mu}")
        if self.kind is CutoffKind.SMOOTH and self.ell is None:
            raise MissingDataError("smooth cutoff requires the power ell")

    @classmethod
    def for_order(cls, order: float, T: float = 1.0) -> "TestFunctionParams":
        return cls(T=T, mu=default_cutoff_exponent(order))

    def require_order(self, order: float, margin: float = 1.0):
        if order + margin > self.mu + 1e-12:
            raise IntegrabilityError(
                f"cutoff exponent mu={self.mu} too small for derivative order "
                f"{order} (need mu >= order + {margin})"
            )


def cutoff_value(params: TestFunctionParams, t) -> float:
    """phi(t) = (1 - t/T)_+^mu, or the smooth variant raised to ell."""
    if params.kind is CutoffKind.SMOOTH:
        return smooth_ramp(t / params.T) ** params.ell
    s = 1.0 - t / params.T
    return s**params.mu if s > 0.0 else 0.0


def _bump(x: float) -> float:
    return math.exp(-1.0 / x) if x > 0.0 else 0.0


def _bump_derivative(x: float) -> float:
    if x <= 0.0:
        return 0.0
    return math.exp(-1.0 / x) / (x * x)


def smooth_ramp(tau: float) -> float:
    """C-infinity non-increasing ramp: 1 on (-inf, 1/2], 0 on [1, inf).

    Built from the standard exp(-1/x) bump partition; the exact profile in
    (1/2, 1) is a free choice and only monotonicity and support matter.
    """
    if tau <= 0.5:
        return 1.0
    if tau >= 1.0:
        return 0.0
    a = _bump(1.0 - tau)
    b = _bump(tau - 0.5)
    return a / (a + b)


def smooth_ramp_derivative(tau: float) -> float:
    if tau <= 0.5 or tau >= 1.0:
        return 0.0
    a = _bump(1.0 - tau)
    b = _bump(tau - 0.5)
    da = -_bump_derivative(1.0 - tau)
    db = _bump_derivative(tau - 0.5)
    return (da * b - a * db) / (a + b) ** 2


def _gamma_ratio(mu: float, nu: float) -> float:
    """Gamma(mu+1) / Gamma(mu+1-nu) via log-gamma (mu+1-nu > 0 assumed)."""
    return math.exp(gammaln(mu + 1.0) - gammaln(mu + 1.0 - nu))


def rl_right_derivative_closed(params: TestFunctionParams, order: float, t: float) -> float:
    """Closed form of D^order_{t|T} applied to the power cutoff.

    Returns Gamma(mu+1)/Gamma(mu+1-order) * T^{-order} * (1 - t/T)^{mu-order}.
    Valid for any real order in [0, mu); integer orders are the classical
    derivatives up to the right-sided sign convention.
    """
    if params.kind is not CutoffKind.POWER:
        raise DomainError("closed form applies to the power cutoff only")
    if not 0.0 <= t <= params.T:
        raise DomainError(f"t={t} outside [0, T={params.T}]")
    if order >= params.mu:
        raise IntegrabilityError(
            f"derivative order {order} >= cutoff exponent mu={params.mu}"
        )
    if order < 0.0:
        raise DomainError(f"order must be nonnegative, got {order}")
    s = 1.0 - t / params.T
    if s == 0.0:
        # positive exponent since order < mu
        return 0.0
    return _gamma_ratio(params.mu, order) * params.T ** (-order) * s ** (params.mu - order)


def _quad_checked(func, a, b, tol, **kw):
    val, err = quad(func, a, b, epsabs=tol, epsrel=tol, limit=_QUAD_LIMIT, **kw)
    if err > max(tol * 100.0, 1e-8 * (1.0 + abs(val))):
        raise QuadratureError(
            f"quadrature error estimate {err:.3e} above tolerance", achieved=err
        )
    return val


def _singular_integral(h: Callable[[float], float], c: float, upper: float, tol: float) -> float:
    """integral_0^upper z^{-c} h(z) dz for c < 1 and h smooth.

    The substitution z = w^{1/(1-c)} absorbs the endpoint singularity exactly.
    """
    if upper <= 0.0:
        return 0.0
    if c <= 0.0:
        return _quad_checked(lambda z: z ** (-c) * h(z), 0.0, upper, tol)
    g = 1.0 / (1.0 - c)
    return g * _quad_checked(lambda w: h(w**g), 0.0, upper ** (1.0 - c), tol)


def _fd_derivative(f, t, n=1, h=None):
    """Central finite difference of order n in {1, 2}, O(h^4) accurate.

    Default steps balance truncation against roundoff (eps/h for n=1,
    eps/h^2 for n=2), keeping the noise floor near 1e-12.
    """
    if h is None:
        h = (1e-3 if n == 1 else 2e-3) * (1.0 + abs(t))
    if n == 1:
        return (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)
    return (
        -f(t + 2 * h) + 16 * f(t + h) - 30 * f(t) + 16 * f(t - h) - f(t - 2 * h)
    ) / (12 * h * h)


def rl_right_derivative_quadrature(
    f: Callable[[float], float],
    order: float,
    t: float,
    T: float,
    df: Optional[Callable[[float], float]] = None,
    d2f: Optional[Callable[[float], float]] = None,
    tol: float = 1e-10,
) -> float:
    """Right-sided Riemann-Liouville derivative of a smooth f by quadrature.

    Integration by parts turns the differentiated singular integral into a
    boundary term plus an absolutely convergent integral against f' (orders in
    (0,1)) or f'' (orders in (1,2)):

        D^a_{t|T} f(t)   = [ (T-t)^{-a} f(T) - integral_0^{T-t} u^{-a} f'(t+u) du ] / Gamma(1-a)
        D^{1+b}_{t|T} f  = [ -b (T-t)^{-b-1} f(T) - (T-t)^{-b} f'(T)
                             + integral_0^{T-t} u^{-b} f''(t+u) du ] / Gamma(1-b)

    Missing derivatives are computed by high-order central differences, which
    is adequate for the smooth fields this oracle is applied to.  This routine
    is the independent check for every closed form in this module.
    """
    if not 0.0 <= t <= T:
        raise DomainError(f"t={t} outside [0, T={T}]")
    if order == 1.0:
        dfv = df if df is not None else (lambda s: _fd_derivative(f, s, 1))
        return -dfv(t)
    if order == 2.0:
        d2fv = d2f if d2f is not None else (lambda s: _fd_derivative(f, s, 2))
        return d2fv(t)
    if not (0.0 < order < 1.0 or 1.0 < order < 2.0):
        raise DomainError(f"quadrature form requires order in (0,1) or (1,2), got {order}")
    span = T - t
    if order < 1.0:
        a = order
        dfv = df if df is not None else (lambda s: _fd_derivative(f, s, 1))
        boundary = span ** (-a) * f(T) if span > 0 else math.inf * (f(T) or 0.0)
        integral = _singular_integral(lambda u: dfv(t + u), a, span, tol)
        return (boundary - integral) / math.gamma(1.0 - a)
    b = order - 1.0
    d2fv = d2f if d2f is not None else (lambda s: _fd_derivative(f, s, 2))
    dfv = df if df is not None else (lambda s: _fd_derivative(f, s, 1))
    boundary = -b * span ** (-b - 1.0) * f(T) - span ** (-b) * dfv(T)
    integral = _singular_integral(lambda u: d2fv(t + u), b, span, tol)
    return (boundary + integral) / math.gamma(1.0 - b)


def caputo_left_derivative(
    f: Callable[[float], float],
    order: float,
    t: float,
    df: Optional[Callable[[float], float]] = None,
    d2f: Optional[Callable[[float], float]] = None,
    df0: Optional[float] = None,
    tol: float = 1e-10,
) -> float:
    """Left-sided Caputo derivative at t > 0.

    Defined as the Riemann-Liouville derivative of f minus its Taylor jet at
    0, which after integration by parts is

        order in (0,1):  integral_0^t (t-s)^{-order} f'(s) ds / Gamma(1-order)
        order in (1,2):  integral_0^t (t-s)^{1-order} f''(s) ds / Gamma(2-order)

    For orders in (1,2) the jet needs f'(0); pass ``df0`` (or ``df``) or a
    MissingDataError is raised.  Orders exactly 1 and 2 are the classical
    derivatives.  Constants are annihilated identically.
    """
    if t <= 0.0:
        raise DomainError(f"Caputo derivative needs t > 0, got {t}")
    if order == 1.0:
        return df(t) if df is not None else _fd_derivative(f, t, 1)
    if order == 2.0:
        return d2f(t) if d2f is not None else _fd_derivative(f, t, 2)
    if 0.0 < order < 1.0:
        dfv = df if df is not None else (lambda s: _fd_derivative(f, s, 1))
        integral = _singular_integral(lambda u: dfv(t - u), order, t, tol)
        return integral / math.gamma(1.0 - order)
    if 1.0 < order < 2.0:
        if df is None and df0 is None:
            raise MissingDataError(
                "Caputo order in (1,2) requires f'(0): pass df or df0"
            )
        d2fv = d2f if d2f is not None else (lambda s: _fd_derivative(f, s, 2))
        integral = _singular_integral(lambda u: d2fv(t - u), order - 1.0, t, tol)
        return integral / math.gamma(2.0 - order)
    raise DomainError(f"order must lie in (0,1) u (1,2) u {{1,2}}, got {order}")


def capacity_time_integral(params: TestFunctionParams, order: float, p: float):
    """Closed form of integral_0^T phi^{-1/(p-1)} |D^order phi|^{p/(p-1)} dt.

    Returns (C, exponent) with the integral equal to C * T^exponent,

        C        = [Gamma(mu+1)/Gamma(mu+1-order)]^{p/(p-1)} / (mu + 1 - order*p/(p-1))
        exponent = 1 - order * p/(p-1)

    The cutoff must satisfy mu > order*p/(p-1) - 1 for the time integral to
    converge.
    """
    if p <= 1.0:
        raise DomainError(f"p must exceed 1, got {p}")
    pp = p / (p - 1.0)
    if params.mu <= order * pp - 1.0:
        raise IntegrabilityError(
            f"need mu > order*p/(p-1) - 1 = {order * pp - 1.0}, got mu={params.mu}"
        )
    params.require_order(order)
    constant = _gamma_ratio(params.mu, order) ** pp / (params.mu + 1.0 - order * pp)
    return constant, 1.0 - order * pp


def capacity_time_integral_quadrature(
    params: TestFunctionParams, order: float, p: float, tol: float = 1e-11
) -> float:
    """Quadrature twin of capacity_time_integral at the params' own T."""
    pp = p / (p - 1.0)
    mu = params.mu
    T = params.T

    def integrand(s):  # s = 1 - t/T
        if s <= 0.0:
            return 0.0
        phi = s**mu
        dval = _gamma_ratio(mu, order) * T ** (-order) * s ** (mu - order)
        return phi ** (-1.0 / (p - 1.0)) * abs(dval) ** pp

    # the integrand behaves like s^(mu - order*pp) near s=0, integrable by the
    # precondition; adaptive quadrature of the raw form keeps this an oracle
    raw, err = quad(integrand, 0.0, 1.0, epsabs=tol, epsrel=tol,
                    limit=_QUAD_LIMIT, points=[0.0, 1.0])
    if err > 1e-7 * (1.0 + abs(raw)):
        raise QuadratureError("capacity time integral quadrature did not converge",
                              achieved=err)
    return T * raw


def mean_time_integral(params: TestFunctionParams, order: float):
    """Time average of the right derivative of the cutoff.

    Returns (C, exponent) with (1/T) integral_0^T D^order phi dt = C * T^exponent,
    C = Gamma(mu+1)/Gamma(mu+2-order) and exponent = -order.  At order 1 this
    is phi(0)/T by the fundamental theorem of calculus, i.e. C = 1.
    """
    params.require_order(order)
    constant = math.exp(gammaln(params.mu + 1.0) - gammaln(params.mu + 2.0 - order))
    return constant, -order


def mean_time_integral_quadrature(params: TestFunctionParams, order: float,
                                  tol: float = 1e-11) -> float:
    """Quadrature twin of mean_time_integral at the params' own T."""
    val = _quad_checked(
        lambda t: rl_right_derivative_closed(params, order, t), 0.0, params.T, tol
    )
    return val / params.T


def smooth_cutoff_capacity(ell: float, p: float, tol: float = 1e-10) -> float:
    """integral_0^1 ramp^{ell - p'} |d ramp/d tau|^{p'} d tau for the smooth cutoff.

    This is the T- and R-free constant of the smooth-cutoff refinement; it
    requires ell > p' = p/(p-1).
    """
    if p <= 1.0:
        raise DomainError(f"p must exceed 1, got {p}")
    pp = p / (p - 1.0)
    if ell <= pp:
        raise IntegrabilityError(f"smooth cutoff needs ell > p/(p-1) = {pp}, got {ell}")

    def integrand(tau):
        r = smooth_ramp(tau)
        if r <= 0.0:
            return 0.0
        return r ** (ell - pp) * abs(smooth_ramp_derivative(tau)) ** pp

    val, err = quad(integrand, 0.5, 1.0, epsabs=tol, epsrel=tol, limit=_QUAD_LIMIT)
    if err > 1e-7 * (1.0 + abs(val)):
        raise QuadratureError("smooth cutoff capacity quadrature did not converge",
                              achieved=err)
    return val
