import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import convroots as cr
from convroots.dist_core import (
    beyond_grid_moment,
    tail_exp_integral,
    xi_step_factor,
)
from convroots.errors import ConstructionError

import oracles

PI = math.pi


class TestFamilyExamples:
    def test_exp_pareto_at_zero_and_below_support(self):
        ep = cr.make_exp_pareto(1.0, 2.0)
        assert ep.tail(0.0) == 1.0
        assert ep.tail(-3.0) == 1.0

    def test_exp_pareto_closed_form_value(self):
        ep = cr.make_exp_pareto(1.0, 2.0)
        assert ep.tail(5.0) == pytest.approx(math.exp(-5.0) / 36.0, rel=1e-14)

    def test_exp_pareto_rejects_bad_params(self):
        with pytest.raises(ConstructionError):
            cr.make_exp_pareto(-1.0, 2.0)
        with pytest.raises(ConstructionError):
            cr.make_exp_pareto(1.0, 1.0)

    def test_xi_tail_at_zero(self):
        assert cr.make_xi().tail(0.0) == pytest.approx(1.0, abs=1e-15)

    def test_xi_step_factor_second_period(self):
        # 7 lies in [2*pi, 4*pi)
        assert xi_step_factor(7.0) == pytest.approx(1.0 / PI ** 3, rel=1e-15)
        assert 1.0 / PI ** 3 == pytest.approx(0.0322515, rel=1e-5)

    def test_xi_step_factor_integrates_to_one(self):
        # first 64 periods summed exactly plus the polygamma tail
        from scipy.special import polygamma

        total = 2 * PI / (3 * PI) + (2 * PI / PI ** 3) * float(polygamma(1, 1))
        assert total == pytest.approx(1.0, rel=1e-14)
        # quadrature cross-check on the implementation
        xs = (np.arange(2_000_000) + 0.5) * (PI / 256)
        approx = float(xi_step_factor(xs).sum() * (PI / 256))
        assert approx == pytest.approx(1.0, rel=2e-3)

    def test_xi_matches_independent_reimplementation(self):
        xs = np.linspace(0.0, 80.0, 50_001)
        got = cr.make_xi().tail(xs)
        want = oracles.xi_tail(xs)
        assert np.allclose(got, want, rtol=1e-13, atol=0)

    def test_mixture_collapses(self):
        full_power = cr.make_m_mixture(cr.MMixtureSpec(gamma=1.0, a=1.0, alpha=2.0))
        ep = cr.make_exp_pareto(1.0, 2.0)
        xs = np.linspace(0, 50, 1001)
        assert np.allclose(full_power.tail(xs), ep.tail(xs), rtol=1e-14)

        pure_dec = cr.make_m_mixture(cr.MMixtureSpec(gamma=1.0, a=0.0, beta=1.0))
        assert np.allclose(pure_dec.tail(xs), np.exp(-2.0 * xs), rtol=1e-14)

    def test_mixture_half_weight_value(self):
        m = cr.make_m_mixture(cr.MMixtureSpec(gamma=1.0, a=0.5, alpha=2.0, beta=1.0))
        want = math.exp(-1.0) * 0.5 * (0.25 + math.exp(-1.0))
        assert m.tail(1.0) == pytest.approx(want, rel=1e-14)

    def test_mixture_rejects_invalid(self):
        with pytest.raises(ConstructionError):
            cr.MMixtureSpec(gamma=1.0, a=0.5, scale=1.5)
        with pytest.raises(ConstructionError):
            cr.MMixtureSpec(gamma=-1.0, a=0.5)

    def test_exponential_and_point_mass(self):
        e2 = cr.make_exponential(2.0)
        assert e2.tail(1.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
        assert e2.tail(0.0) == 1.0
        assert cr.make_point_mass().tail(0.0) == 0.0
        with pytest.raises(ConstructionError):
            cr.make_exponential(0.0)

    def test_scaled_family(self):
        base = cr.make_exp_pareto(1.0, 2.0)
        s = cr.make_scaled(base, 3.0)
        assert s.tail(0.0) == 1.0
        assert s.tail(50.0) == pytest.approx(3.0 * base.tail(50.0), rel=1e-14)


class TestIntervalMass:
    def test_exponential_closed_form(self):
        e2 = cr.make_exponential(2.0)
        got = cr.interval_mass(e2, 1.0, 1.0)
        assert got == pytest.approx(math.exp(-2) - math.exp(-4), rel=1e-14)
        assert got == pytest.approx(0.117020, rel=1e-5)

    def test_point_mass_no_mass_above_zero(self):
        assert cr.interval_mass(cr.make_point_mass(), 0.0, 1.0) == 0.0

    def test_total_mass(self):
        ep = cr.make_exp_pareto(1.0, 2.0)
        assert cr.interval_mass(ep, 0.0, 1e6) == pytest.approx(1.0, abs=1e-12)

    @given(
        x=st.floats(0.0, 30.0),
        c1=st.floats(0.01, 10.0),
        c2=st.floats(0.01, 10.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_additivity(self, x, c1, c2):
        ep = cr.make_exp_pareto(1.0, 2.0)
        lhs = cr.interval_mass(ep, x, c1) + cr.interval_mass(ep, x + c1, c2)
        rhs = cr.interval_mass(ep, x, c1 + c2)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


@st.composite
def any_spec(draw):
    kind = draw(st.sampled_from(["exp_pareto", "exponential", "xi", "m_mixture", "point_mass"]))
    if kind == "exp_pareto":
        return cr.make_exp_pareto(draw(st.floats(0.1, 3.0)), draw(st.floats(1.1, 4.0)))
    if kind == "exponential":
        return cr.make_exponential(draw(st.floats(0.1, 4.0)))
    if kind == "xi":
        return cr.make_xi()
    if kind == "m_mixture":
        return cr.make_m_mixture(
            cr.MMixtureSpec(
                gamma=draw(st.floats(0.2, 2.0)),
                a=draw(st.floats(0.0, 1.0)),
                alpha=draw(st.floats(1.1, 4.0)),
                beta=draw(st.floats(0.2, 3.0)),
                scale=draw(st.floats(0.1, 1.0)),
            )
        )
    return cr.make_point_mass()


class TestTailInvariants:
    @given(spec=any_spec(), x=st.floats(-5.0, 200.0), y=st.floats(0.0, 50.0))
    @settings(max_examples=150, deadline=None)
    def test_monotone_and_bounded(self, spec, x, y):
        tx = spec.tail(x)
        txy = spec.tail(x + y)
        assert 0.0 <= txy <= tx <= 1.0

    @given(spec=any_spec())
    @settings(max_examples=30, deadline=None)
    def test_unit_below_support(self, spec):
        assert spec.tail(spec.support_lo - 1.0) == 1.0

    def test_xi_scaled_decay_limits(self):
        # e^x tail(x) x^2 at x = 2 n pi + lam approaches the closed-form
        # constant, with the error shrinking monotonically in n
        xi = cr.make_xi()
        for lam in (0.5, 2.0, 5.0):
            target = (4 / PI) * (3 * PI + 1 + math.sqrt(2) * math.sin(lam - PI / 4))
            errs = []
            for n in (10, 20, 40):
                x = 2 * n * PI + lam
                val = float(xi.tail(x)) * math.exp(x) * x * x
                errs.append(abs(val - target))
            assert errs[0] > errs[1] > errs[2]
            assert errs[2] < 0.05 * target


class TestGrid:
    def test_point_mass_grid_is_zero(self):
        rep = cr.to_grid(cr.make_point_mass(), 1.0, PI / 256, 10.0)
        assert np.all(rep.W == 0.0)

    def test_exp_pareto_tilt_cancellation(self, ep_small):
        xs = ep_small.x
        assert np.allclose(ep_small.W, (1 + xs) ** -2.0, rtol=1e-14)

    def test_xi_tilt_cancellation(self, xi_small):
        xs = xi_small.x
        want = (3 * PI + 1 + math.sqrt(2) * np.sin(xs - PI / 4)) * xi_step_factor(xs)
        assert np.allclose(xi_small.W, want, rtol=1e-14)

    def test_untilt_roundtrip_one_ulp(self, xi_small, ep_small):
        for rep, spec in ((xi_small, cr.make_xi()), (ep_small, cr.make_exp_pareto(1, 2))):
            back = rep.tail_at_nodes()
            direct = spec.tail(rep.x)
            ok = direct > 0
            assert np.max(np.abs(back[ok] / direct[ok] - 1.0)) < 1e-13

    def test_underflow_guard(self):
        with pytest.raises(ConstructionError):
            cr.to_grid(cr.make_exponential(5.0), 0.0, PI / 256, 400.0)

    def test_divergent_reference_tilt_rejected(self):
        with pytest.raises(ConstructionError):
            cr.to_grid(cr.make_exponential(1.0), 1.0, PI / 256, 50.0)

    def test_trunc_bound_exactness_exp_pareto(self, ep_small):
        xtop = ep_small.x_max
        want = (1 + xtop) ** -2.0 + (1 + xtop) ** -1.0
        assert ep_small.trunc_mass_bound == pytest.approx(want, rel=1e-12)

    def test_trunc_bound_xi_quadrature_crosscheck(self, xi_small):
        # independent check of integral over (X, inf) of e^u d xi(u):
        # e^X tail(X) + integral_X^inf [tilted tail], the window [X, X+L]
        # missing ~X/(X+L) of the slowly decaying remainder
        X = xi_small.x_max
        h, L = 5e-3, 40_000.0
        xs = X + (np.arange(int(L / h)) + 0.5) * h
        integral = float(oracles.xi_tilted_tail(xs).sum() * h)
        head = float(oracles.xi_tilted_tail(np.array([X]))[0])
        got = xi_small.trunc_mass_bound
        assert got == pytest.approx(head + integral, rel=2e-2)
        assert got >= head + integral  # the quadrature window undershoots

    def test_validation_catches_nonmonotone(self):
        rep = cr.to_grid(cr.make_exp_pareto(1, 2), 1.0, PI / 256, 10.0)
        rep.W[5] = rep.W[4] * math.exp(2 * rep.step)  # un-tilted tail increases
        with pytest.raises(ConstructionError):
            rep.validate()

    def test_content_hash_changes_with_data(self, ep_small):
        h1 = ep_small.content_hash()
        other = cr.to_grid(cr.make_exp_pareto(1, 2.5), 1.0, ep_small.step, ep_small.x_max)
        assert h1 != other.content_hash()


class TestTailExpIntegral:
    def test_exp_pareto_resonant(self):
        ep = cr.make_exp_pareto(1.0, 2.0)
        assert tail_exp_integral(ep, 1.0, 0.0, math.inf) == pytest.approx(1.0, rel=1e-14)

    def test_exponential(self):
        e2 = cr.make_exponential(2.0)
        assert tail_exp_integral(e2, 1.0, 0.0, math.inf) == pytest.approx(1.0, rel=1e-14)
        with pytest.raises(cr.DivergenceError):
            tail_exp_integral(e2, 2.0, 0.0, math.inf)

    def test_xi_resonant_full_line(self):
        got = tail_exp_integral(cr.make_xi(), 1.0, 0.0, math.inf)
        assert got == pytest.approx(3 * PI + 1, rel=1e-13)

    def test_xi_partial_interval_against_quadrature(self):
        a, b = 3.0, 29.0
        xs = a + (np.arange(2_000_000) + 0.5) * (b - a) / 2_000_000
        want = float((np.exp(xs) * oracles.xi_tail(xs)).sum() * (b - a) / 2_000_000)
        got = tail_exp_integral(cr.make_xi(), 1.0, a, b)
        assert got == pytest.approx(want, rel=1e-6)

    def test_beyond_moment_matches_head_plus_tail(self):
        ep = cr.make_exp_pareto(1.0, 2.0)
        X = 20.0
        want = (1 + X) ** -2.0 + (1 + X) ** -1.0
        assert beyond_grid_moment(ep, 1.0, X) == pytest.approx(want, rel=1e-13)
