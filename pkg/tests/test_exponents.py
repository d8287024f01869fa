"""Tests for the critical exponents, D/E families, and classifiers."""

import random
from fractions import Fraction as F

import pytest

from fracap import exponents as ex
from fracap.errors import DomainError, HypothesisError


def random_admissible_system(rng, d=1):
    """Rejection-sample system parameters satisfying both positivity hypotheses."""
    while True:
        g = rng.uniform(0.05, 1.0)
        t = rng.uniform(0.05, 1.0)
        m = rng.uniform(0.1, 2.0)
        s = rng.uniform(0.1, 2.0)
        p = rng.uniform(1.05, 4.0)
        q = rng.uniform(1.05, 4.0)
        if t * p + g * p * q - p * q + 1 > 1e-9 and g * q + t * p * q - p * q + 1 > 1e-9:
            return ex.ExponentInputs(d=d, p=p, q=q, gamma=g, theta=t, mu=m, sigma=s)


class TestPStar:
    def test_classical_fujita(self):
        assert ex.p_star(1, 2, 1) == 3
        assert ex.p_star(1, 2, 2) == 2

    def test_fractional_value(self):
        assert ex.p_star(F(1, 2), 2, 1) == F(5, 3)

    def test_alpha_one_reduces(self):
        for delta in (F(1, 2), 1, 2):
            for d in (1, 2, 3):
                assert ex.p_star(1, delta, d) == 1 + F(delta, d)

    def test_monotonicity(self):
        rng = random.Random(11)
        for _ in range(100):
            a = rng.uniform(0.05, 1.0)
            d1 = rng.uniform(0.1, 1.9)
            d2 = rng.uniform(d1 + 1e-6, 2.0)
            dim = rng.randint(1, 5)
            assert ex.p_star(a, d2, dim) > ex.p_star(a, d1, dim)
            assert ex.p_star(a, d1, dim) > ex.p_star(a, d1, dim + 1)

    def test_range_validation(self):
        with pytest.raises(DomainError):
            ex.p_star(1.5, 2, 1)
        with pytest.raises(DomainError):
            ex.p_star(0.5, 3, 1)


class TestTheorem1:
    def test_boundary_allowed_at_alpha_one(self):
        rep = ex.theorem1_classify(ex.ExponentInputs(d=1, p=3, alpha=1, delta=2))
        assert rep.verdict == "Nonexistence"
        assert "p = p*" in rep.fired_condition

    def test_strict_inequality_below_one(self):
        rep = ex.theorem1_classify(
            ex.ExponentInputs(d=1, p=F(5, 3), alpha=F(1, 2), delta=2)
        )
        assert rep.verdict == "Undetermined"

    def test_far_supercritical(self):
        rep = ex.theorem1_classify(ex.ExponentInputs(d=1, p=10, alpha=0.7, delta=1.5))
        assert rep.verdict == "Undetermined"

    def test_strict_branch(self):
        rep = ex.theorem1_classify(ex.ExponentInputs(d=1, p=2, alpha=1, delta=2))
        assert rep.verdict == "Nonexistence"
        assert "strict" in rep.fired_condition


class TestTheorem3:
    def test_boundary_case(self):
        rep = ex.theorem3_classify(
            ex.ExponentInputs(d=1, p=3, alpha=1, beta=2, delta=2)
        )
        assert rep.verdict == "Nonexistence"
        assert rep.numbers["beta"] == 2

    def test_strict_case_undetermined(self):
        rep = ex.theorem3_classify(
            ex.ExponentInputs(d=1, p=F(5, 3), alpha=F(1, 2), beta=F(3, 2), delta=2)
        )
        assert rep.verdict == "Undetermined"

    def test_near_one_always_nonexistence(self):
        rng = random.Random(3)
        for _ in range(30):
            inputs = ex.ExponentInputs(
                d=rng.randint(1, 4),
                p=1 + 1e-9,
                alpha=rng.uniform(0.1, 1.0),
                beta=rng.uniform(1.01, 2.0),
                delta=rng.uniform(0.1, 2.0),
            )
            assert ex.theorem3_classify(inputs).verdict == "Nonexistence"

    def test_beta_required(self):
        with pytest.raises(DomainError):
            ex.theorem3_classify(ex.ExponentInputs(d=1, p=2, alpha=1, delta=2))


class TestDEFamilies:
    def test_remark1_closed_forms(self):
        # gamma=theta=1, mu=sigma=2: Dbar = 2(p+1)/(pq-1), Ebar = 2(q+1)/(pq-1)
        rng = random.Random(17)
        for _ in range(50):
            p = F(rng.randint(11, 40), 10)
            q = F(rng.randint(11, 40), 10)
            inputs = ex.ExponentInputs(d=1, p=p, q=q, gamma=1, theta=1, mu=2, sigma=2)
            assert ex.d_exponents(inputs)["Dbar"] == 2 * (p + 1) / (p * q - 1)
            assert ex.e_exponents(inputs)["Ebar"] == 2 * (q + 1) / (p * q - 1)

    def test_specific_values(self):
        inputs = ex.ExponentInputs(d=1, p=2, q=2, gamma=1, theta=1, mu=2, sigma=2)
        assert ex.d_exponents(inputs)["Dbar"] == 2
        assert ex.e_exponents(inputs)["Ebar"] == 2
        inputs23 = ex.ExponentInputs(d=1, p=2, q=3, gamma=1, theta=1, mu=2, sigma=2)
        assert ex.d_exponents(inputs23)["Dbar"] == F(6, 5)
        assert ex.e_exponents(inputs23)["Ebar"] == F(8, 5)

    def test_swap_symmetry(self):
        rng = random.Random(23)
        for _ in range(50):
            inputs = random_admissible_system(rng)
            swapped = ex.ExponentInputs(
                d=inputs.d, p=inputs.q, q=inputs.p,
                gamma=inputs.theta, theta=inputs.gamma,
                mu=inputs.sigma, sigma=inputs.mu,
            )
            dd = ex.d_exponents(inputs)
            ee_sw = ex.e_exponents(swapped)
            # the families map onto each other as sets and aggregates agree
            ds = sorted([dd["D1"], dd["D2"], dd["D3"], dd["D4"]])
            es = sorted([ee_sw["E1"], ee_sw["E2"], ee_sw["E3"], ee_sw["E4"]])
            assert all(a == pytest.approx(b, rel=1e-12) for a, b in zip(ds, es))
            assert dd["Dbar"] == pytest.approx(ee_sw["Ebar"], rel=1e-12)

    def test_positivity_hypothesis_enforced(self):
        bad = ex.ExponentInputs(d=1, p=4, q=4, gamma=0.1, theta=0.1, mu=1, sigma=1)
        with pytest.raises(HypothesisError):
            ex.d_exponents(bad)


class TestMaxMin:
    def test_symmetric_point(self):
        inputs = ex.ExponentInputs(d=1, p=2, q=2, gamma=1, theta=1, mu=2, sigma=2)
        assert ex.maxmin_h(inputs) == pytest.approx(2.0, abs=1e-10)
        assert ex.maxmin_H(inputs) == pytest.approx(2.0, abs=1e-10)

    def test_equivalence_random_sweep(self):
        rng = random.Random(41)
        for _ in range(200):
            inputs = random_admissible_system(rng)
            dbar = float(ex.d_exponents(inputs)["Dbar"])
            ebar = float(ex.e_exponents(inputs)["Ebar"])
            assert abs(ex.maxmin_h(inputs) - dbar) <= 1e-4
            assert abs(ex.maxmin_H(inputs) - ebar) <= 1e-4

    def test_endpoint_identities_exact(self):
        inputs = ex.ExponentInputs(
            d=1, p=F(7, 3), q=F(5, 2),
            gamma=F(3, 4), theta=F(2, 3), mu=F(5, 4), sigma=F(7, 5),
        )
        h1, h2, h3, h4 = ex.h_functions(inputs)
        dd = ex.d_exponents(inputs)
        ts = inputs.theta / inputs.sigma
        gm = inputs.gamma / inputs.mu
        assert h2(ts) == dd["D1"] and h4(ts) == dd["D1"]
        assert h2(gm) == dd["D2"] and h1(gm) == dd["D2"]
        assert h3(gm) == dd["D3"] and h4(gm) == dd["D3"]
        assert h3(ts) == dd["D4"] and h1(ts) == dd["D4"]
        H1, H2, H3, H4 = ex.H_functions(inputs)
        ee = ex.e_exponents(inputs)
        assert H3(ts) == ee["E1"] and H4(ts) == ee["E1"]
        assert H3(gm) == ee["E2"] and H1(gm) == ee["E2"]
        assert H2(gm) == ee["E3"] and H4(gm) == ee["E3"]
        assert H2(ts) == ee["E4"] and H1(ts) == ee["E4"]

    def test_h2_monotonicity_switch(self):
        # h2 non-increasing in d0 iff p(q - theta) <= 1
        rng = random.Random(53)
        for _ in range(60):
            inputs = random_admissible_system(rng)
            _, h2, _, _ = ex.h_functions(inputs)
            grid = [0.1 * 1.5**k for k in range(12)]
            vals = [h2(x) for x in grid]
            non_increasing = all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
            flag = inputs.p * (inputs.q - inputs.theta) <= 1
            assert non_increasing == flag

    def test_h4_limit(self):
        inputs = ex.ExponentInputs(
            d=1, p=2.0, q=2.0, gamma=0.8, theta=0.9, mu=1.5, sigma=1.2
        )
        _, _, _, h4 = ex.h_functions(inputs)
        limit = inputs.p * (inputs.sigma + inputs.mu * inputs.q) / (inputs.p * inputs.q - 1)
        assert h4(1e9) == pytest.approx(limit, rel=1e-8)

    def test_grid_must_bracket_breakpoints(self):
        inputs = ex.ExponentInputs(
            d=1, p=2.0, q=2.0, gamma=1.0, theta=1.0, mu=2.0, sigma=2.0
        )
        with pytest.raises(DomainError):
            ex.maxmin_h(inputs, d0_grid=[1.0, 2.0, 4.0])  # breakpoint 0.5 outside


class TestTheorem2:
    def test_subcritical_dimension(self):
        rep = ex.theorem2_classify(
            ex.ExponentInputs(d=1, p=2, q=2, gamma=1, theta=1, mu=2, sigma=2)
        )
        assert rep.verdict == "Nonexistence"
        assert "d < max" in rep.fired_condition

    def test_supercritical_dimension(self):
        rep = ex.theorem2_classify(
            ex.ExponentInputs(d=3, p=2, q=2, gamma=1, theta=1, mu=2, sigma=2)
        )
        assert rep.verdict == "Undetermined"

    def test_boundary_row_one(self):
        # theta = 1, gamma = 1/2, p = 2, q = 4/3: pq(1-gamma) = 4/3 > 1, and
        # mu = 1, sigma = 2 give Dbar = Ebar = 2 exactly, so d = 2 sits on
        # the equality row rather than in the strict branch
        inputs = ex.ExponentInputs(
            d=2, p=2, q=F(4, 3), gamma=F(1, 2), theta=1, mu=1, sigma=2
        )
        dd = ex.d_exponents(inputs)
        assert dd["Dbar"] == 2
        rep = ex.theorem2_classify(inputs)
        assert rep.verdict == "Nonexistence"
        assert "Dbar" in rep.fired_condition

    def test_strictly_above_both_aggregates_is_undetermined(self):
        # gamma = theta = 1, p = 3, q = 3/2: Dbar = 16/7, Ebar = 10/7; d = 3
        # exceeds both and no equality row can fire
        inputs = ex.ExponentInputs(d=3, p=3, q=F(3, 2), gamma=1, theta=1, mu=2, sigma=2)
        assert ex.d_exponents(inputs)["Dbar"] == F(16, 7)
        assert ex.e_exponents(inputs)["Ebar"] == F(10, 7)
        rep = ex.theorem2_classify(inputs)
        assert rep.verdict == "Undetermined"

    def test_report_serializes(self):
        rep = ex.theorem2_classify(
            ex.ExponentInputs(d=1, p=2.0, q=2.0, gamma=1.0, theta=1.0, mu=2.0, sigma=2.0)
        )
        blob = rep.to_json_dict()
        assert blob["verdict"] == "Nonexistence"
        assert isinstance(blob["numbers"]["Dbar"], float)
