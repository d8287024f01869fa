"""Tests for capacity bound assembly, system exponents, and sign analysis."""

import math
import random
from fractions import Fraction as F

import numpy as np
import pytest

from fracap import capacity as cap
from fracap import exponents as ex
from fracap.errors import CaseError, DomainError
from fracap.frac_space import WeightParams


def scalar_inputs(alpha=1.0, delta=2.0, p=2.0, d=1):
    return ex.ExponentInputs(d=d, p=p, alpha=alpha, delta=delta)


class TestScalarBound:
    def test_collapsed_exponents_classical(self):
        # alpha=1, delta=2, p=2, d=1, R=T^{1/2}: both capacity terms collapse
        # to exponent 1 - 2 + 1/2 = -1/2
        bound = cap.scalar_bound(scalar_inputs(), cap.DataNorms(u0_l1=1.0))
        by_label = {t.label: t for t in bound.terms}
        assert by_label["data-term"].t_exponent == pytest.approx(-1.0)
        assert by_label["time-capacity"].t_exponent == pytest.approx(-0.5)
        assert by_label["space-capacity"].t_exponent == pytest.approx(-0.5)

    def test_critical_power_zero_exponent(self):
        # at p = p* the collapsed exponent 1 - alpha p' + alpha d/delta is 0
        alpha, delta, d = 0.5, 2.0, 1
        ps = float(ex.p_star(F(1, 2), 2, 1))
        bound = cap.scalar_bound(scalar_inputs(alpha, delta, ps, d), cap.DataNorms())
        by_label = {t.label: t for t in bound.terms}
        assert by_label["time-capacity"].t_exponent == pytest.approx(0.0, abs=1e-12)
        assert by_label["space-capacity"].t_exponent == pytest.approx(0.0, abs=1e-12)

    def test_zero_data_vanishing_bound(self):
        bound = cap.scalar_bound(scalar_inputs(p=1.5), cap.DataNorms(u0_l1=0.0))
        assert bound.evaluate(1e9) < 1e-3
        values = [bound.evaluate(T) for T in (1e2, 1e4, 1e6)]
        assert values[0] > values[1] > values[2]

    def test_numeric_constants_slope_audit(self):
        # evaluated bound's log-slope matches the dominant symbolic exponent
        inputs = scalar_inputs(alpha=1.0, delta=2.0, p=2.0, d=1)
        bound = cap.scalar_bound(inputs, cap.DataNorms(u0_l1=1.0), numeric_constants=True)
        dominant = max(t.t_exponent for t in bound.terms if t.coefficient > 0)
        Ts = np.logspace(3, 6, 12)
        vals = [bound.evaluate(T) for T in Ts]
        slope = np.polyfit(np.log(Ts), np.log(vals), 1)[0]
        assert abs(slope - dominant) < 0.05


class TestDampedBound:
    def test_five_terms_and_beta_exponent(self):
        inputs = ex.ExponentInputs(d=1, p=3.0, alpha=1.0, beta=2.0, delta=2.0)
        bound = cap.scalar_bound_damped(inputs, cap.DataNorms(u0_l1=1.0, u1_l1=1.0))
        assert len(bound.terms) == 5
        beta_term = [t for t in bound.terms if t.label == "time-capacity"][0]
        # 1 - beta p/(p-1) + d alpha/delta = 1 - 3 + 1/2 = -3/2
        assert beta_term.t_exponent == pytest.approx(-1.5)

    def test_velocity_data_exponent(self):
        inputs = ex.ExponentInputs(d=1, p=2.0, alpha=1.0, beta=2.0, delta=2.0)
        bound = cap.scalar_bound_damped(inputs, cap.DataNorms(u0_l1=1.0, u1_l1=1.0))
        data_exps = sorted(t.t_exponent for t in bound.terms if t.label == "data-term")
        assert data_exps == [pytest.approx(-1.0), pytest.approx(-1.0)]  # -(beta-1) = -1 = -alpha

    def test_zero_velocity_data_reduces(self):
        inputs = ex.ExponentInputs(d=1, p=2.0, alpha=0.8, beta=1.5, delta=2.0)
        bound = cap.scalar_bound_damped(inputs, cap.DataNorms(u0_l1=1.0, u1_l1=0.0))
        u1_terms = [t for t in bound.terms if t.label == "data-term" and t.coefficient == 0.0]
        assert len(u1_terms) == 1
        analysis = cap.sign_analysis(bound)
        assert any(e["sign"] == "ignored" for e in analysis.term_signs)


class TestBoundaryBoundK:
    def test_case_guard(self):
        with pytest.raises(CaseError):
            cap.boundary_bound_K(scalar_inputs(p=2.0), cap.DataNorms(), 10.0, 4.0)
        with pytest.raises(CaseError):
            cap.boundary_bound_K(
                ex.ExponentInputs(d=1, p=F(5, 3), alpha=F(1, 2), delta=2),
                cap.DataNorms(), 10.0, 4.0,
            )

    def test_k_inverse_term(self):
        inputs = ex.ExponentInputs(d=1, p=3, alpha=1, delta=2)  # p* = 3
        bound = cap.boundary_bound_K(inputs, cap.DataNorms(u0_l1=1.0), 100.0, 8.0)
        kterm = [t for t in bound.terms if t.k_exponent == -1.0][0]
        assert kterm.t_exponent == 0.0
        assert kterm.value(1e9, 8.0) == pytest.approx(1.0 / 8.0)

    def test_k_one_reduces(self):
        inputs = ex.ExponentInputs(d=1, p=3, alpha=1, delta=2)
        bound = cap.boundary_bound_K(inputs, cap.DataNorms(u0_l1=1.0), 100.0, 1.0)
        assert bound.evaluate(100.0, tail=0.0) == pytest.approx(1.0 / 100.0 + 1.0)

    def test_vanishing_tail_sequence_limsup(self):
        # feed a window norm tending to zero: limsup of the bound is C/K
        inputs = ex.ExponentInputs(d=1, p=3, alpha=1, delta=2)
        K = 50.0
        bound = cap.boundary_bound_K(inputs, cap.DataNorms(u0_l1=1.0), 1.0, K)
        Ts = np.logspace(2, 14, 7)
        tails = 1.0 / Ts
        totals = np.array([bound.evaluate(T, tail=tl) for T, tl in zip(Ts, tails)])
        gaps = np.abs(totals - 1.0 / K)
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert totals[-1] == pytest.approx(1.0 / K, rel=1e-2)
        # growing K with vanishing tail drives the bound to zero
        for K2 in (10.0, 100.0, 1000.0):
            b2 = cap.boundary_bound_K(inputs, cap.DataNorms(u0_l1=1.0), 1.0, K2)
            assert b2.evaluate(1e12, tail=0.0) == pytest.approx(1.0 / K2, rel=1e-3)


class TestSystemExponents:
    def test_critical_configuration_all_zero(self):
        inputs = ex.ExponentInputs(d=2, p=2, q=2, gamma=1, theta=1, mu=2, sigma=2)
        se = cap.system_exponents(inputs, F(1, 2))
        assert all(s == 0 for s in se.sigma)
        assert all(r == 0 for r in se.rho)

    def test_subcritical_admits_feasible_d0(self):
        inputs = ex.ExponentInputs(d=1, p=2.0, q=2.0, gamma=1.0, theta=1.0, mu=2.0, sigma=2.0)
        grid = np.linspace(0.05, 3.0, 200)
        feasible = [d0 for d0 in grid if cap.system_exponents(inputs, d0).all_sigma_negative()]
        assert feasible  # d = 1 < Dbar = 2

    def test_d0_to_zero_limit(self):
        inputs = ex.ExponentInputs(d=2, p=2.0, q=2.0, gamma=1.0, theta=1.0, mu=2.0, sigma=2.0)
        se = cap.system_exponents(inputs, 1e-9)
        # sigma_2 -> 1 from the d0-free part
        assert se.sigma[1] == pytest.approx(1.0, abs=1e-6)

    def test_feasibility_matches_dbar(self):
        rng = random.Random(7)
        grid = np.concatenate([np.linspace(1e-3, 0.5, 300), np.linspace(0.5, 20.0, 400)])
        for _ in range(60):
            g = rng.uniform(0.05, 1.0)
            t = rng.uniform(0.05, 1.0)
            m = rng.uniform(0.1, 2.0)
            s = rng.uniform(0.1, 2.0)
            p = rng.uniform(1.05, 4.0)
            q = rng.uniform(1.05, 4.0)
            if t * p + g * p * q - p * q + 1 <= 1e-6:
                continue
            if g * q + t * p * q - p * q + 1 <= 1e-6:
                continue
            probe = ex.ExponentInputs(d=1, p=p, q=q, gamma=g, theta=t, mu=m, sigma=s)
            dbar = float(ex.d_exponents(probe)["Dbar"])
            if abs(dbar - 1.0) < 2e-2:
                continue  # grid feasibility is ill-conditioned exactly at the threshold
            inputs = ex.ExponentInputs(d=1.0, p=p, q=q, gamma=g, theta=t, mu=m, sigma=s)
            feasible = any(
                cap.system_exponents(inputs, d0).all_sigma_negative() for d0 in grid
            )
            assert feasible == (1.0 < dbar)

    def test_pq_guard(self):
        inputs = ex.ExponentInputs(d=1, p=1.0000001, q=1.0, gamma=1, theta=1, mu=2, sigma=2)
        with pytest.raises(DomainError):
            cap.system_exponents(inputs, 0.5)


class TestSignAnalysis:
    def test_subcritical_vanishes(self):
        bound = cap.scalar_bound(scalar_inputs(p=2.0), cap.DataNorms(u0_l1=1.0))
        assert cap.sign_analysis(bound).verdict == "VanishesAsTGrows"

    def test_supercritical_inconclusive(self):
        bound = cap.scalar_bound(scalar_inputs(p=4.0), cap.DataNorms(u0_l1=1.0))
        assert cap.sign_analysis(bound).verdict == "Inconclusive"

    def test_marginal_case_inconclusive(self):
        # p = p* with alpha < 1: zero exponent present, no refinement
        alpha = 0.5
        ps = float(ex.p_star(F(1, 2), 2, 1))
        bound = cap.scalar_bound(scalar_inputs(alpha=alpha, p=ps), cap.DataNorms())
        assert cap.sign_analysis(bound).verdict == "Inconclusive"

    def test_classifier_coherence_sweep(self):
        rng = random.Random(19)
        for _ in range(500):
            alpha = rng.uniform(0.05, 1.0)
            delta = rng.uniform(0.1, 2.0)
            p = rng.uniform(1.05, 5.0)
            d = rng.randint(1, 4)
            inputs = scalar_inputs(alpha, delta, p, d)
            bound = cap.scalar_bound(inputs, cap.DataNorms(u0_l1=1.0))
            vanishes = cap.sign_analysis(bound).vanishes
            strict = ex.theorem1_classify(inputs).fired_condition.endswith("(strict branch)")
            assert vanishes == strict


class TestBoundTrace:
    def test_rows_shape(self):
        bound = cap.scalar_bound(scalar_inputs(), cap.DataNorms(u0_l1=1.0))
        rows = cap.bound_trace(bound, [1.0, 10.0, 100.0])
        assert len(rows) == 3
        assert all("total" in r and "T" in r for r in rows)
        assert rows[0]["total"] > rows[-1]["total"]
