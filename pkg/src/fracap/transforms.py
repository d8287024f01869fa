"""Space transforms, assumption certificates, and the pullback inequality.

The equations evaluate their nonlinearity at a transformed argument g(x).
Admissible transforms must have a Jacobian-of-inverse determinant bounded
below (A1) and must not move points toward the origin, either everywhere (A2:
|g(x)| >= |x|) or outside a ball (A2*: |g(x)| >= c0*|x| for |x| >= rho).

Three closed-form families carry exact certificates:

* dilation g(x) = k x, |k| > 1:  A1 with c0 = |k|^{-d}, A2 holds;
* rotation g(x) = A x, A orthogonal:  c0 = 1 and |g(x)| = |x|;
* shift g(x) = x - x0:  c0 = 1, A2 fails near x0/2 but A2* holds with
  c0* = 1/2 and rho = 2|x0|.

Custom maps get sampled falsification only; their certificates are flagged
empirical and the CLI labels them non-rigorous.

The payoff is the change-of-variables lower bound used against the radial
weight (its monotonicity turns |g(x)| >= |x| into Phi_R(g^{-1}(x)) >= Phi_R(x)):

    integral |u(g(x))|^p Phi_R(x) dx  >=  c0 * integral |u(x)|^p Phi_R(x) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionError, CertificateError, DomainError
from .frac_space import WeightParams, weight_value

__all__ = [
    "SpaceTransform",
    "Dilation",
    "Rotation",
    "Shift",
    "CustomMap",
    "TransformCertificate",
    "certify",
    "pullback_capacity_lower_bound",
]


@dataclass(frozen=True)
class SpaceTransform:
    d: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse_jacobian_det(self, x: np.ndarray) -> float:
        """|det J_{g^{-1}}(x)| at the point x."""
        raise NotImplementedError


@dataclass(frozen=True)
class Dilation(SpaceTransform):
    k: float = 2.0

    def __post_init__(self):
        if abs(self.k) <= 1.0:
            raise DomainError(f"dilation requires |k| > 1, got k={self.k}")

    def apply(self, x):
        return self.k * np.asarray(x, dtype=float)

    def inverse(self, x):
        return np.asarray(x, dtype=float) / self.k

    def inverse_jacobian_det(self, x):
        return abs(self.k) ** (-self.d)


@dataclass(frozen=True)
class Rotation(SpaceTransform):
    matrix: tuple = ()

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if A.shape != (self.d, self.d):
            raise DomainError(f"rotation matrix must be {self.d}x{self.d}")
        if not np.allclose(A @ A.T, np.eye(self.d), atol=1e-12):
            raise DomainError("rotation matrix is not orthogonal to 1e-12")
        object.__setattr__(self, "matrix", tuple(map(tuple, A)))

    @classmethod
    def identity(cls, d: int) -> "Rotation":
        return cls(d=d, matrix=tuple(map(tuple, np.eye(d))))

    @classmethod
    def planar(cls, angle_deg: float) -> "Rotation":
        t = math.radians(angle_deg)
        return cls(d=2, matrix=((math.cos(t), -math.sin(t)), (math.sin(t), math.cos(t))))

    def _mat(self):
        return np.asarray(self.matrix, dtype=float)

    def apply(self, x):
        return self._mat() @ np.asarray(x, dtype=float)

    def inverse(self, x):
        return self._mat().T @ np.asarray(x, dtype=float)

    def inverse_jacobian_det(self, x):
        return 1.0


@dataclass(frozen=True)
class Shift(SpaceTransform):
    x0: tuple = ()

    def __post_init__(self):
        v = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if v.shape != (self.d,):
            raise DomainError(f"shift vector must have length {self.d}")
        object.__setattr__(self, "x0", tuple(v))

    def apply(self, x):
        return np.asarray(x, dtype=float) - np.asarray(self.x0)

    def inverse(self, x):
        return np.asarray(x, dtype=float) + np.asarray(self.x0)

    def inverse_jacobian_det(self, x):
        return 1.0


@dataclass(frozen=True)
class CustomMap(SpaceTransform):
    forward: Callable = None
    backward: Callable = None
    backward_jacobian_det: Callable = None

    def __post_init__(self):
        if self.forward is None or self.backward is None or self.backward_jacobian_det is None:
            raise DomainError("custom map needs forward, backward and backward_jacobian_det")

    def apply(self, x):
        return np.asarray(self.forward(np.asarray(x, dtype=float)), dtype=float)

    def inverse(self, x):
        return np.asarray(self.backward(np.asarray(x, dtype=float)), dtype=float)

    def inverse_jacobian_det(self, x):
        return float(abs(self.backward_jacobian_det(np.asarray(x, dtype=float))))


@dataclass(frozen=True)
class TransformCertificate:
    """Certificate of (A1)/(A2)/(A2*) for a transform.

    ``c0`` is the Jacobian-of-inverse lower bound; ``a2_holds`` records the
    global |g(x)| >= |x| property; ``a2star`` is (c0*, rho) when only the
    relaxed outside-a-ball bound holds.  ``empirical`` marks sampled (not
    proved) certificates; ``witnesses`` stores the sampled infima evidence.
    """

    c0: float
    a2_holds: bool
    a2star: Optional[tuple] = None
    empirical: bool = False
    witnesses: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.c0 <= 0.0:
            raise AssumptionError("(A1) requires a positive Jacobian lower bound")
        if self.a2star is not None and self.a2star[0] > 1.0:
            raise DomainError("A2* constant c0* cannot exceed 1")


def _sample_box(d: int, half_width: float, n: int, rng) -> np.ndarray:
    return rng.uniform(-half_width, half_width, size=(n, d))


def certify(
    transform: SpaceTransform,
    sample_budget: int = 2000,
    box_half_width: float = 10.0,
    seed: int = 0,
    tol: float = 1e-9,
) -> TransformCertificate:
    """Certificate for the named families; sampled falsification for custom maps.

    Dilation, rotation and shift certificates are exact closed forms.  For a
    CustomMap the assumptions are universally quantified and cannot be machine
    certified, so the box is sampled: the returned certificate carries the
    empirical infima and is flagged ``empirical``; a falsified assumption
    raises AssumptionError with a witness point.
    """
    if isinstance(transform, Dilation):
        return TransformCertificate(
            c0=abs(transform.k) ** (-transform.d), a2_holds=True
        )
    if isinstance(transform, Rotation):
        return TransformCertificate(c0=1.0, a2_holds=True)
    if isinstance(transform, Shift):
        norm = float(np.linalg.norm(transform.x0))
        if norm == 0.0:
            return TransformCertificate(c0=1.0, a2_holds=True)
        return TransformCertificate(
            c0=1.0, a2_holds=False, a2star=(0.5, 2.0 * norm)
        )
    if not isinstance(transform, CustomMap):
        raise DomainError(f"unknown transform type {type(transform).__name__}")

    rng = np.random.default_rng(seed)
    pts = _sample_box(transform.d, box_half_width, sample_budget, rng)

    # inverse consistency: g(g^{-1}(x)) = x on the sample
    for x in pts[: min(64, len(pts))]:
        back = transform.apply(transform.inverse(x))
        if not np.allclose(back, x, atol=1e-6 * (1.0 + np.linalg.norm(x))):
            raise AssumptionError(
                "custom map inverse is inconsistent with the forward map",
                witness=tuple(x),
            )

    jac_vals = np.array([transform.inverse_jacobian_det(x) for x in pts])
    c0_emp = float(jac_vals.min())
    if c0_emp <= tol:
        raise AssumptionError(
            "(A1) falsified: Jacobian-of-inverse determinant vanishes on a sample",
            witness=tuple(pts[int(jac_vals.argmin())]),
        )

    norms_in = np.linalg.norm(pts, axis=1)
    norms_out = np.array([np.linalg.norm(transform.apply(x)) for x in pts])
    a2_defect = norms_out - norms_in
    a2_holds = bool(a2_defect.min() >= -tol)

    a2star = None
    if not a2_holds:
        # relaxed bound outside a ball: scan candidate radii at norm quantiles
        # and keep the one giving the largest ratio infimum beyond it
        best = None
        for q in (0.25, 0.5, 0.75):
            rho = float(np.quantile(norms_in, q))
            outside = norms_in > rho
            if outside.sum() < 20:
                continue
            with np.errstate(divide="ignore"):
                ratios = norms_out[outside] / norms_in[outside]
            cand = float(min(np.min(ratios), 1.0))
            if best is None or cand > best[0]:
                best = (cand, rho)
        if best is None or best[0] <= tol:
            raise AssumptionError(
                "(A2*) falsified: |g(x)|/|x| has no positive infimum outside "
                "any sampled ball",
                witness=tuple(pts[int(a2_defect.argmin())]),
            )
        a2star = best

    return TransformCertificate(
        c0=c0_emp,
        a2_holds=a2_holds,
        a2star=a2star,
        empirical=True,
        witnesses={
            "jacobian_inf": c0_emp,
            "a2_defect_min": float(a2_defect.min()),
            "samples": sample_budget,
            "box_half_width": box_half_width,
        },
    )


def _grid_quadrature(func, d: int, half_width: float, n: int) -> float:
    """Tensor trapezoid rule for a smooth, box-concentrated integrand."""
    axis = np.linspace(-half_width, half_width, n)
    if d == 1:
        vals = np.array([func(np.array([x])) for x in axis])
        return float(np.trapezoid(vals, axis))
    X, Y = np.meshgrid(axis, axis, indexing="ij")
    vals = np.empty_like(X)
    for i in range(n):
        for j in range(n):
            vals[i, j] = func(np.array([X[i, j], Y[i, j]]))
    return float(np.trapezoid(np.trapezoid(vals, axis, axis=1), axis))


def pullback_capacity_lower_bound(
    u: Callable,
    transform: SpaceTransform,
    weight: WeightParams,
    p: float,
    certificate: Optional[TransformCertificate] = None,
    box_half_width: float = 10.0,
    grid_points: int = 401,
):
    """Both sides of the transformed-argument lower bound.

    Returns (lhs, rhs) with

        lhs = integral |u(x)|^p Phi_R(g^{-1}(x)) |det J_{g^{-1}}(x)| dx
        rhs = c0 * integral |u(x)|^p Phi_R(x) dx

    where lhs is the change-of-variables form of integral |u(g(x))|^p Phi_R dx.
    The contract lhs >= rhs - tol holds for every certified transform (the
    weight is radially non-increasing).  ``u`` must be negligible outside the
    integration box.
    """
    if certificate is None:
        certificate = certify(transform)
    if certificate is None or certificate.c0 <= 0.0:
        raise CertificateError("transform lacks an (A1) certificate")
    d = transform.d
    if weight.d != d:
        raise DomainError(f"weight dimension {weight.d} != transform dimension {d}")

    def lhs_integrand(x):
        return abs(u(x)) ** p * weight_value(weight, transform.inverse(x)) * (
            transform.inverse_jacobian_det(x)
        )

    def rhs_integrand(x):
        return abs(u(x)) ** p * weight_value(weight, x)

    lhs = _grid_quadrature(lhs_integrand, d, box_half_width, grid_points)
    rhs = certificate.c0 * _grid_quadrature(rhs_integrand, d, box_half_width, grid_points)
    return lhs, rhs


def pullback_direct_integral(
    u: Callable,
    transform: SpaceTransform,
    weight: WeightParams,
    p: float,
    box_half_width: float = 10.0,
    grid_points: int = 401,
) -> float:
    """Direct quadrature of integral |u(g(x))|^p Phi_R(x) dx.

    Self-consistency oracle for the substituted form in
    pullback_capacity_lower_bound: for |k| > 1 dilations the integrand support
    shrinks, so the same box covers it.
    """

    def integrand(x):
        return abs(u(transform.apply(x))) ** p * weight_value(weight, x)

    return _grid_quadrature(integrand, transform.d, box_half_width, grid_points)
