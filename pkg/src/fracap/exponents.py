"""Critical exponents, the D/E exponent families, and regime classifiers.

The scalar problems share one threshold power

    p* = 1 + alpha*delta / (alpha*d + delta*(1 - alpha)),

below which (strictly for alpha < 1, allowing equality at alpha = 1) no
global nontrivial weak solution exists.  The 2x2 system's threshold is a
dimension bound d < max(Dbar, Ebar) built from eight rational expressions in
(gamma, theta, mu, sigma, p, q), with four equality rows carrying side
conditions.

Dbar and Ebar also arise as max-min values of four-member families of
monotone rational functions of an auxiliary exponent d0 (the h- and
H-families); `maxmin_h`/`maxmin_H` computes those by grid + golden-section
refinement and the tests assert agreement with the closed forms, plus the
endpoint identities h2(theta/sigma) = D1 etc. in exact rational arithmetic.

All formulas run in exact arithmetic when handed Fractions/ints and in floats
otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import DomainError, HypothesisError

__all__ = [
    "ExponentInputs",
    "RegimeReport",
    "p_star",
    "theorem1_classify",
    "theorem3_classify",
    "d_exponents",
    "e_exponents",
    "h_functions",
    "H_functions",
    "maxmin_h",
    "maxmin_H",
    "theorem2_classify",
]

_GOLDEN = (5**0.5 - 1.0) / 2.0


def _div(a, b):
    """Division that stays exact when both operands are ints/Fractions."""
    if isinstance(a, (int, Fraction)) and isinstance(b, (int, Fraction)):
        return Fraction(a, 1) / b
    return a / b


@dataclass(frozen=True)
class ExponentInputs:
    """Parameter bundle for the three nonexistence theorems.

    Scalar problems use (alpha, delta, p, d) and the damped one adds beta;
    the system uses (gamma, theta, mu, sigma, p, q, d).  Unused fields may be
    left None.  Values may be ints/Fractions (exact path) or floats.
    """

    d: object
    p: object
    alpha: object = None
    beta: object = None
    delta: object = None
    gamma: object = None
    theta: object = None
    mu: object = None
    sigma: object = None
    q: object = None

    def validate_scalar(self):
        if self.alpha is None or not 0 < self.alpha <= 1:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.delta is None or not 0 < self.delta <= 2:
            raise DomainError(f"delta must lie in (0, 2], got {self.delta}")
        if self.p is None or not self.p > 1:
            raise DomainError(f"p must exceed 1, got {self.p}")
        if self.d is None or self.d < 1:
            raise DomainError(f"dimension d must be >= 1, got {self.d}")

    def validate_damped(self):
        self.validate_scalar()
        if self.beta is None or not 1 < self.beta <= 2:
            raise DomainError(f"beta must lie in (1, 2], got {self.beta}")

    def validate_system(self, require_positivity: bool = True):
        for name in ("gamma", "theta"):
            v = getattr(self, name)
            if v is None or not 0 < v <= 1:
                raise DomainError(f"{name} must lie in (0, 1], got {v}")
        for name in ("mu", "sigma"):
            v = getattr(self, name)
            if v is None or not 0 < v <= 2:
                raise DomainError(f"{name} must lie in (0, 2], got {v}")
        for name in ("p", "q"):
            v = getattr(self, name)
            if v is None or not v > 1:
                raise DomainError(f"{name} must exceed 1, got {v}")
        if self.d is None or self.d < 1:
            raise DomainError(f"dimension d must be >= 1, got {self.d}")
        if require_positivity:
            g, t, p, q = self.gamma, self.theta, self.p, self.q
            if not t * p + g * p * q - p * q + 1 > 0:
                raise HypothesisError(
                    "positivity hypothesis theta*p + gamma*p*q - p*q + 1 > 0 violated"
                )
            if not g * q + t * p * q - p * q + 1 > 0:
                raise HypothesisError(
                    "positivity hypothesis gamma*q + theta*p*q - p*q + 1 > 0 violated"
                )


@dataclass
class RegimeReport:
    """Classifier verdict with the numbers that produced it."""

    verdict: str  # "Nonexistence" | "Undetermined"
    fired_condition: str
    numbers: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "verdict": self.verdict,
            "fired_condition": self.fired_condition,
            "numbers": {k: float(v) for k, v in self.numbers.items()},
        }


def p_star(alpha, delta, d):
    """Threshold power 1 + alpha*delta/(alpha*d + delta*(1-alpha)).

    Exact for Fraction/int inputs; reduces to the classical 1 + delta/d at
    alpha = 1.  Strictly increasing in delta and decreasing in d.
    """
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    if not 0 < delta <= 2:
        raise DomainError(f"delta must lie in (0, 2], got {delta}")
    if d < 1:
        raise DomainError(f"dimension d must be >= 1, got {d}")
    denom = alpha * d + delta * (1 - alpha)
    if isinstance(denom, float):
        return 1.0 + alpha * delta / denom
    return 1 + Fraction(alpha * delta, 1) / denom


def theorem1_classify(inputs: ExponentInputs) -> RegimeReport:
    """Nonexistence iff p < p* (alpha < 1) or p <= p* (alpha = 1)."""
    inputs.validate_scalar()
    ps = p_star(inputs.alpha, inputs.delta, inputs.d)
    numbers = {"p": inputs.p, "p_star": ps}
    boundary_allowed = inputs.alpha == 1
    if inputs.p < ps:
        return RegimeReport("Nonexistence", "scalar p < p* (strict branch)", numbers)
    if inputs.p == ps and boundary_allowed:
        return RegimeReport("Nonexistence", "scalar p = p* at alpha = 1", numbers)
    return RegimeReport("Undetermined", "p above threshold", numbers)


def theorem3_classify(inputs: ExponentInputs) -> RegimeReport:
    """Damped-problem classifier: same p* inequality; beta must be admissible.

    beta enters only the capacity terms of the bound, not the threshold, so
    the report records it without using it.
    """
    inputs.validate_damped()
    report = theorem1_classify(inputs)
    report.numbers["beta"] = inputs.beta
    report.fired_condition = report.fired_condition.replace("scalar", "damped")
    return report


def _system_pieces(inputs: ExponentInputs):
    g, t = inputs.gamma, inputs.theta
    m, s = inputs.mu, inputs.sigma
    p, q = inputs.p, inputs.q
    pq1 = p * q - 1
    return g, t, m, s, p, q, pq1


def d_exponents(inputs: ExponentInputs) -> dict:
    """The four D-expressions and their min-max aggregate Dbar."""
    inputs.validate_system()
    g, t, m, s, p, q, pq1 = _system_pieces(inputs)
    D1 = _div(t * s * p + t * m * p * q - s * p * q + s, t * pq1)
    D2 = _div(m * (t * p + g * p * q - p * q + 1), g * pq1)
    D3 = _div(g * s * p + g * m * p * q - m * p * q + m, g * pq1)
    D4 = _div(s * (t * p + g * p * q - p * q + 1), t * pq1)
    return {"D1": D1, "D2": D2, "D3": D3, "D4": D4,
            "Dbar": min(max(D1, D2), max(D3, D4))}


def e_exponents(inputs: ExponentInputs) -> dict:
    """The four E-expressions and their min-max aggregate Ebar."""
    inputs.validate_system()
    g, t, m, s, p, q, pq1 = _system_pieces(inputs)
    E1 = _div(t * m * q + t * s * p * q - s * p * q + s, t * pq1)
    E2 = _div(m * (g * q + t * p * q - p * q + 1), g * pq1)
    E3 = _div(g * m * q + g * s * p * q - m * p * q + m, g * pq1)
    E4 = _div(s * (g * q + t * p * q - p * q + 1), t * pq1)
    return {"E1": E1, "E2": E2, "E3": E3, "E4": E4,
            "Ebar": min(max(E1, E2), max(E3, E4))}


def h_functions(inputs: ExponentInputs):
    """The h-family: four monotone functions of d0 whose min-envelope maximum
    equals Dbar (each has the form a + b/d0)."""
    g, t, m, s, p, q, pq1 = _system_pieces(inputs)

    def h1(d0):
        return _div(p * (t + g * q) - p * q + 1, d0 * pq1)

    def h2(d0):
        return _div(p * (t + d0 * m * q) - p * q + 1, d0 * pq1)

    def h3(d0):
        return _div(p * (s * d0 + g * q) - p * q + 1, d0 * pq1)

    def h4(d0):
        return _div(p * (s + m * q), pq1) - _div(1, d0)

    return (h1, h2, h3, h4)


def H_functions(inputs: ExponentInputs):
    """The q-leading H-family whose min-envelope maximum equals Ebar."""
    g, t, m, s, p, q, pq1 = _system_pieces(inputs)

    def H1(d0):
        return _div(q * (g + t * p) - p * q + 1, d0 * pq1)

    def H2(d0):
        return _div(q * (g + d0 * s * p) - p * q + 1, d0 * pq1)

    def H3(d0):
        return _div(q * (m * d0 + t * p) - p * q + 1, d0 * pq1)

    def H4(d0):
        return _div(q * (m + s * p), pq1) - _div(1, d0)

    return (H1, H2, H3, H4)


def _pairwise_crossings(funcs, lo, hi):
    """Crossing points of a + b/d0 family members inside (lo, hi)."""
    # extract (a, b) by evaluating at two points
    coeffs = []
    for f in funcs:
        f1, f2 = f(1.0), f(2.0)
        b = 2.0 * (f1 - f2)
        a = f1 - b
        coeffs.append((a, b))
    pts = []
    for i in range(len(coeffs)):
        for j in range(i + 1, len(coeffs)):
            da = coeffs[i][0] - coeffs[j][0]
            db = coeffs[i][1] - coeffs[j][1]
            if da != 0.0:
                x = -db / da
                if lo < x < hi:
                    pts.append(x)
    return pts


def _golden_max(f, a, b, iters=80):
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    return max(f1, f2)


def _maxmin(funcs, breakpoints, d0_grid):
    """max over d0 > 0 of min_i funcs[i](d0) by grid + golden refinement.

    The envelope's maximum sits at a breakpoint of the active-function
    pattern, so the exact candidates (the supplied breakpoints and all
    pairwise crossings) are evaluated directly; golden-section refinement
    around the discrete argmax guards against any candidate that was missed.
    """
    lo, hi = float(min(d0_grid)), float(max(d0_grid))
    bps = [float(b) for b in breakpoints]
    if any(not lo < b < hi for b in bps):
        raise DomainError(
            f"d0 grid [{lo}, {hi}] does not bracket the breakpoints {bps}"
        )

    def envelope(d0):
        return min(f(d0) for f in funcs)

    candidates = sorted(
        set(list(map(float, d0_grid)) + bps + _pairwise_crossings(funcs, lo, hi))
    )
    values = [envelope(x) for x in candidates]
    k = max(range(len(values)), key=values.__getitem__)
    best = values[k]
    a = candidates[k - 1] if k > 0 else lo
    b = candidates[k + 1] if k + 1 < len(candidates) else hi
    refined = _golden_max(envelope, a, b)
    return max(best, refined)


def _default_grid(inputs, n=200):
    t_s = inputs.theta / inputs.sigma
    g_m = inputs.gamma / inputs.mu
    lo = 0.05 * min(t_s, g_m)
    hi = 20.0 * max(t_s, g_m)
    ratio = (hi / lo) ** (1.0 / (n - 1))
    return [lo * ratio**i for i in range(n)]


def maxmin_h(inputs: ExponentInputs, d0_grid=None) -> float:
    """max over d0 of min_i h_i(d0); equals Dbar for admissible inputs."""
    inputs.validate_system()
    grid = d0_grid if d0_grid is not None else _default_grid(inputs)
    funcs = [lambda x, f=f: float(f(x)) for f in h_functions(inputs)]
    bps = (inputs.theta / inputs.sigma, inputs.gamma / inputs.mu)
    return _maxmin(funcs, bps, grid)


def maxmin_H(inputs: ExponentInputs, d0_grid=None) -> float:
    """max over d0 of min_i H_i(d0); equals Ebar for admissible inputs."""
    inputs.validate_system()
    grid = d0_grid if d0_grid is not None else _default_grid(inputs)
    funcs = [lambda x, f=f: float(f(x)) for f in H_functions(inputs)]
    bps = (inputs.theta / inputs.sigma, inputs.gamma / inputs.mu)
    return _maxmin(funcs, bps, grid)


def theorem2_classify(inputs: ExponentInputs) -> RegimeReport:
    """System classifier: d < max(Dbar, Ebar), or one of four equality rows.

    The equality rows are evaluated literally as printed; every row whose
    condition holds is named in the fired condition.
    """
    inputs.validate_system()
    dd = d_exponents(inputs)
    ee = e_exponents(inputs)
    numbers = {**dd, **ee, "d": inputs.d}
    dbar, ebar = dd["Dbar"], ee["Ebar"]
    d = inputs.d
    g, t, p, q = inputs.gamma, inputs.theta, inputs.p, inputs.q

    if d < max(dbar, ebar):
        return RegimeReport("Nonexistence", "system d < max(Dbar, Ebar)", numbers)

    rows = []
    if d == dbar and t == 1 and g != 1 and p * q * (1 - g) > 1:
        rows.append("d = Dbar, theta = 1, gamma != 1, pq > 1/(1-gamma)")
    if d == dbar and t == 1 and g <= 1 and g * q * (p - 1) <= p * (q - 1):
        rows.append("d = Dbar, theta = 1, gamma <= p(q-1)/(q(p-1))")
    if d == ebar and g == 1 and t != 1 and p * q * (1 - t) > 1:
        rows.append("d = Ebar, gamma = 1, theta != 1, pq > 1/(1-theta)")
    if d == ebar and g == 1 and t <= 1 and t * p * (q - 1) <= q * (p - 1):
        rows.append("d = Ebar, gamma = 1, theta <= q(p-1)/(p(q-1))")
    if rows:
        return RegimeReport("Nonexistence", "; ".join(rows), numbers)
    return RegimeReport("Undetermined", "d above both aggregates", numbers)
