import numpy as np
import pytest

import copulabounds as cb
from copulabounds.pricing import InconsistentIntervalError
from copulabounds.quadrature import QuadratureError

from _oracles import margrabe_price, sample_gaussian_lognormals

ALL_TABLE_KINDS = [
    cb.basket(1.0, 1.0, 190.0),
    cb.basket(1.0, -1.0, 10.0),
    cb.call_on_min(100.0),
    cb.put_on_min(100.0),
    cb.call_on_max(100.0),
    cb.put_on_max(100.0),
    cb.worst_off_call(90.0, 110.0),
    cb.worst_off_put(110.0, 90.0),
    cb.best_off_call(90.0, 110.0),
    cb.best_off_put(110.0, 90.0),
]


class TestPayoffCatalog:
    def test_values(self):
        assert cb.payoff_value(cb.spread(5.0), 112.0, 100.0) == 7.0
        assert cb.payoff_value(cb.call_on_min(90.0), 100.0, 95.0) == 5.0
        assert cb.payoff_value(cb.put_on_max(120.0), 100.0, 95.0) == 20.0
        assert cb.payoff_value(cb.worst_off_call(90.0, 95.0), 100.0, 94.0) == 0.0
        assert cb.payoff_value(cb.best_off_put(90.0, 95.0), 100.0, 94.0) == 1.0
        assert cb.payoff_value(cb.product_xy(), 3.0, 4.0) == 12.0

    def test_signs(self):
        assert cb.payoff_sign(cb.basket(1.0, 2.0, 50.0)) == 1
        assert cb.payoff_sign(cb.spread(0.0)) == -1
        assert cb.payoff_sign(cb.call_on_min(10.0)) == 1
        assert cb.payoff_sign(cb.call_on_max(10.0)) == -1
        # puts carry the opposite curvature of the matching calls
        assert cb.payoff_sign(cb.put_on_min(10.0)) == -1
        assert cb.payoff_sign(cb.put_on_max(10.0)) == 1
        assert cb.payoff_sign(cb.worst_off_put(10.0, 20.0)) == 1
        assert cb.payoff_sign(cb.best_off_call(10.0, 20.0)) == -1
        assert cb.payoff_sign(cb.product_xy()) == 1

    def test_put_call_degeneracies(self):
        # worst-off-put(K, K) is the put on the maximum, best-off-put(K, K)
        # the put on the minimum; signs must agree with those identities
        assert cb.payoff_sign(cb.worst_off_put(50.0, 50.0)) == cb.payoff_sign(
            cb.put_on_max(50.0)
        )
        assert cb.payoff_sign(cb.best_off_put(50.0, 50.0)) == cb.payoff_sign(
            cb.put_on_min(50.0)
        )
        x = np.linspace(0.0, 120.0, 7)
        y = np.linspace(0.0, 120.0, 7)[::-1]
        assert np.allclose(
            cb.payoff_value(cb.worst_off_put(50.0, 50.0), x, y),
            cb.payoff_value(cb.put_on_max(50.0), x, y),
        )

    def test_rejections(self):
        with pytest.raises(ValueError):
            cb.basket(0.0, 1.0, 5.0)
        with pytest.raises(ValueError):
            cb.call_on_min(-1.0)
        with pytest.raises(ValueError):
            cb.worst_off_call(-5.0, 10.0)


class TestSurvivalWeight:
    def test_comonotone(self, lognormal_marginals):
        mx, my = lognormal_marginals
        x = float(mx.quantile(0.3))
        y = float(my.quantile(0.3))
        got = cb.survival_weight(cb.FRECHET_UPPER, mx, my, x, y)
        assert got == pytest.approx(0.7, abs=1e-12)

    def test_countermonotone_boundary(self, lognormal_marginals):
        mx, my = lognormal_marginals
        x = float(mx.quantile(0.4))
        y = float(my.quantile(0.6))
        got = cb.survival_weight(cb.FRECHET_LOWER, mx, my, x, y)
        assert got == pytest.approx(0.0, abs=1e-12)

    def test_independence(self, lognormal_marginals):
        mx, my = lognormal_marginals
        x = float(mx.quantile(0.3))
        y = float(my.quantile(0.4))
        got = cb.survival_weight(cb.PRODUCT, mx, my, x, y)
        assert got == pytest.approx(0.42, abs=1e-12)


class TestPrice:
    def test_basket_zero_strike_is_sum_of_means(self, lognormal_marginals):
        mx, my = lognormal_marginals
        p = cb.basket(1.0, 1.0, 0.0)
        for surf in (
            cb.FRECHET_LOWER,
            cb.PRODUCT,
            cb.FRECHET_UPPER,
            cb.gaussian_copula(0.5),
            cb.gaussian_copula(-0.5),
        ):
            assert cb.price(p, surf, mx, my) == pytest.approx(200.0, abs=1e-6)

    def test_comonotone_identical_spread_is_zero(self):
        m = cb.lognormal_martingale(0.2, 100.0, 1.0)
        got = cb.price(cb.spread(0.0), cb.FRECHET_UPPER, m, m)
        assert got == pytest.approx(0.0, abs=1e-8)

    def test_spread_matches_margrabe(self, lognormal_marginals):
        mx, my = lognormal_marginals
        for rho in (0.0, -0.7, 0.5):
            got = cb.price(cb.spread(0.0), cb.gaussian_copula(rho), mx, my)
            assert got == pytest.approx(
                margrabe_price(100.0, 100.0, 0.2, 0.3, rho, 1.0), abs=1e-6
            )

    def test_monte_carlo_representation_equivalence(self, lognormal_marginals):
        mx, my = lognormal_marginals
        rho = 0.3
        x, y = sample_gaussian_lognormals(rho, 0.2, 0.3, 100.0, 1.0, 1_000_000, seed=5)
        surf = cb.gaussian_copula(rho)
        for p in (
            cb.basket(1.0, 1.0, 190.0),
            cb.spread(0.0),
            cb.call_on_min(100.0),
            cb.worst_off_call(90.0, 110.0),
        ):
            samples = cb.payoff_value(p, x, y)
            mc = float(samples.mean())
            se = float(samples.std(ddof=1) / np.sqrt(samples.size))
            got = cb.price(p, surf, mx, my)
            assert abs(got - mc) <= 3.0 * se

    def test_negative_strike_spread_decomposition(self, lognormal_marginals):
        # (x - y - K)^+ = x - y - K + (y - x + K)^+ in expectation
        mx, my = lognormal_marginals
        surf = cb.gaussian_copula(0.4)
        K = -20.0
        direct = cb.price(cb.spread(K), surf, mx, my)
        flipped = cb.price(cb.basket(-1.0, 1.0, -K), surf, mx, my)
        assert direct == pytest.approx(100.0 - 100.0 - K + flipped, abs=1e-6)

    def test_log_product_reports_integrability(self, lognormal_marginals):
        mx, my = lognormal_marginals
        with pytest.raises(QuadratureError):
            cb.price(cb.log_product(), cb.PRODUCT, mx, my)

    def test_accepts_quasi_copula_surfaces(self, lognormal_marginals):
        mx, my = lognormal_marginals
        A = cb.upper_bound([(1 / 3, 1 / 3, 0.0), (2 / 3, 2 / 3, 1 / 3)])
        assert not A.is_copula
        val = cb.price(cb.call_on_min(100.0), A, mx, my)
        assert np.isfinite(val)


class TestDiagonalPrices:
    @pytest.mark.parametrize("payoff", ALL_TABLE_KINDS, ids=lambda p: p.kind + str(p.strike))
    def test_eq9_matches_diagonal_under_m_and_w(self, payoff, lognormal_marginals):
        mx, my = lognormal_marginals
        assert cb.price(payoff, cb.FRECHET_UPPER, mx, my) == pytest.approx(
            cb.price_under_M(payoff, mx, my), abs=1e-6
        )
        assert cb.price(payoff, cb.FRECHET_LOWER, mx, my) == pytest.approx(
            cb.price_under_W(payoff, mx, my), abs=1e-6
        )

    def test_put_on_max_zero_strike_worthless(self, lognormal_marginals):
        mx, my = lognormal_marginals
        p = cb.put_on_max(0.0)
        assert cb.price_under_M(p, mx, my) == 0.0
        assert cb.price_under_W(p, mx, my) == 0.0

    def test_spread_maximal_under_w(self, lognormal_marginals):
        mx, my = lognormal_marginals
        p = cb.spread(0.0)
        w_price = cb.price_under_W(p, mx, my)
        assert w_price > cb.price(p, cb.gaussian_copula(-0.7), mx, my)

    def test_log_product_comonotone_closed_form(self):
        # identical marginals: E[(log X)^2] = Var(log X) + (E log X)^2
        m = cb.lognormal_martingale(0.2, 100.0, 1.0)
        got = cb.price_under_M(cb.log_product(), m, m)
        assert got == pytest.approx(m.log_var + m.log_mean**2, abs=1e-8)


class TestConcordanceMonotonicity:
    @pytest.mark.parametrize("payoff", ALL_TABLE_KINDS, ids=lambda p: p.kind + str(p.strike))
    def test_price_monotone_in_dependence(self, payoff, lognormal_marginals):
        mx, my = lognormal_marginals
        lo = cb.price(payoff, cb.gaussian_copula(-0.5), mx, my, panels=801)
        hi = cb.price(payoff, cb.gaussian_copula(0.5), mx, my, panels=801)
        if cb.payoff_sign(payoff) > 0:
            assert lo <= hi + 1e-6
        else:
            assert hi <= lo + 1e-6

    def test_product_payoff_monotone(self, lognormal_marginals):
        mx, my = lognormal_marginals
        p = cb.product_xy()
        lo = cb.price(p, cb.gaussian_copula(-0.5), mx, my)
        hi = cb.price(p, cb.gaussian_copula(0.5), mx, my)
        assert lo <= hi


class TestProductPayoff:
    def test_independence_factorizes(self, lognormal_marginals):
        mx, my = lognormal_marginals
        got = cb.price(cb.product_xy(), cb.PRODUCT, mx, my)
        assert got == pytest.approx(100.0 * 100.0, rel=1e-6)

    def test_diagonal_consistency_coarse(self, lognormal_marginals):
        mx, my = lognormal_marginals
        got = cb.price(cb.product_xy(), cb.FRECHET_UPPER, mx, my, panels_2d=160)
        ref = cb.price_under_M(cb.product_xy(), mx, my)
        assert got == pytest.approx(ref, rel=1e-3)


class TestPriceInterval:
    def test_unconstrained_equals_diagonal_prices(self, lognormal_marginals):
        mx, my = lognormal_marginals
        for payoff in (cb.call_on_min(100.0), cb.spread(0.0)):
            iv = cb.price_interval(payoff, cb.FRECHET_LOWER, cb.FRECHET_UPPER, mx, my)
            lo = cb.price_under_W(payoff, mx, my)
            hi = cb.price_under_M(payoff, mx, my)
            if cb.payoff_sign(payoff) < 0:
                lo, hi = hi, lo
            assert iv.lower == pytest.approx(lo, abs=1e-6)
            assert iv.upper == pytest.approx(hi, abs=1e-6)

    def test_sign_swaps_surfaces(self, lognormal_marginals):
        mx, my = lognormal_marginals
        iv = cb.price_interval(cb.spread(0.0), cb.FRECHET_LOWER, cb.FRECHET_UPPER, mx, my)
        assert iv.lower_surface is cb.FRECHET_UPPER
        assert iv.upper_surface is cb.FRECHET_LOWER
        assert iv.sharp_lower and iv.sharp_upper

    def test_degenerate_interval(self, lognormal_marginals):
        mx, my = lognormal_marginals
        C = cb.gaussian_copula(0.2)
        iv = cb.price_interval(cb.call_on_min(100.0), C, C, mx, my)
        assert iv.width == pytest.approx(0.0, abs=1e-12)

    def test_constrained_interval_contains_reference(self, exp_marginals):
        mx, my = exp_marginals
        ref = cb.gaussian_copula(0.0)
        quotes = [(T, float(ref(float(mx.cdf(T)), float(my.cdf(T))))) for T in (2.0, 3.0)]
        low, up = cb.bounds_from_second_to_default(quotes, mx, my)
        payoff = cb.call_on_min(3.0)
        improved = cb.price_interval(payoff, low, up, mx, my, panels=801)
        frechet = cb.price_interval(
            payoff, cb.FRECHET_LOWER, cb.FRECHET_UPPER, mx, my, panels=801
        )
        p_ref = cb.price(payoff, ref, mx, my, panels=801)
        assert improved.lower - 1e-9 <= p_ref <= improved.upper + 1e-9
        assert improved.lower >= frechet.lower - 1e-9
        assert improved.upper <= frechet.upper + 1e-9
        assert improved.sharp_lower  # increasing constraints make the lower bound a copula

    def test_crossed_interval_reported(self, lognormal_marginals):
        mx, my = lognormal_marginals
        # deliberately swapped surfaces cross once the band is wide enough
        with pytest.raises(InconsistentIntervalError):
            cb.price_interval(
                cb.call_on_min(100.0), cb.FRECHET_UPPER, cb.FRECHET_LOWER, mx, my
            )


class TestDigitalDefaults:
    def test_product_closed_form(self, exp_marginals):
        mx, my = exp_marginals
        first, second = cb.digital_default_prices(cb.PRODUCT, mx, my, 2.0)
        expected = (1 - np.exp(-0.4)) * (1 - np.exp(-0.6))
        assert second == pytest.approx(expected, abs=1e-15)

    def test_no_mass_at_time_zero(self, exp_marginals):
        mx, my = exp_marginals
        assert cb.digital_default_prices(cb.PRODUCT, mx, my, 0.0) == (0.0, 0.0)

    def test_comonotone_defaults_coincide(self, exp_marginals):
        mx, _ = exp_marginals
        first, second = cb.digital_default_prices(cb.FRECHET_UPPER, mx, mx, 2.0)
        q = float(mx.cdf(2.0))
        assert first == pytest.approx(q, abs=1e-15)
        assert second == pytest.approx(q, abs=1e-15)

    def test_parity_is_exact(self, exp_marginals, rng):
        mx, my = exp_marginals
        C = cb.gaussian_copula(0.4)
        for T in rng.uniform(0.0, 10.0, 5):
            first, second = cb.digital_default_prices(C, mx, my, float(T))
            assert first == float(mx.cdf(T)) + float(my.cdf(T)) - second

    def test_negative_horizon_rejected(self, exp_marginals):
        mx, my = exp_marginals
        with pytest.raises(ValueError):
            cb.digital_default_prices(cb.PRODUCT, mx, my, -1.0)
