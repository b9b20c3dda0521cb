import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from beamdenoise.numerics import RngStream, sample_complex_gaussian
from beamdenoise.theory import (
    corollary2_slope_check,
    predict,
    prob_detection,
    prob_false_alarm,
    roc_curve,
    theoretical_mse,
)

nonneg = st.floats(0, 1e3)
prob = st.floats(0, 1)


class TestFalseAlarm:
    def test_half(self):
        assert prob_false_alarm(2.5 * math.log(2), 2.5) == pytest.approx(0.5)

    def test_zero_and_negative(self):
        assert prob_false_alarm(0.0, 1.0) == 1.0
        assert prob_false_alarm(-3.0, 1.0) == 1.0

    def test_rejects_bad_noise(self):
        with pytest.raises(ValueError):
            prob_false_alarm(1.0, 0.0)

    def test_monte_carlo(self):
        n = 10**6
        p2 = np.abs(sample_complex_gaussian(n, 1.0, RngStream(60))) ** 2
        for tau in (0.3, 1.7):
            p = prob_false_alarm(tau, 1.0)
            assert abs(np.mean(p2 > tau) - p) <= 3 * math.sqrt(p * (1 - p) / n)


class TestDetection:
    def test_reduces_to_false_alarm(self):
        assert prob_detection(1.3, 0.7, 0.0) == prob_false_alarm(1.3, 0.7)

    def test_zero_threshold(self):
        assert prob_detection(0.0, 1.0, 5.0) == 1.0

    def test_rejects_negative_signal(self):
        with pytest.raises(ValueError):
            prob_detection(1.0, 1.0, -1.0)

    def test_monte_carlo(self):
        n = 10**6
        p2 = np.abs(sample_complex_gaussian(n, 1.0 + 4.0, RngStream(61))) ** 2
        p = prob_detection(7.0, 1.0, 4.0)
        assert abs(np.mean(p2 > 7.0) - p) <= 3 * math.sqrt(p * (1 - p) / n)

    @given(nonneg, st.floats(1e-3, 1e3), nonneg)
    def test_detection_dominates(self, tau, e0, s2):
        assert prob_detection(tau, e0, s2) >= prob_false_alarm(tau, e0)

    @given(nonneg, nonneg, st.floats(1e-3, 1e3), nonneg)
    def test_nonincreasing_in_tau(self, t1, t2, e0, s2):
        lo, hi = sorted((t1, t2))
        assert prob_false_alarm(hi, e0) <= prob_false_alarm(lo, e0)
        assert prob_detection(hi, e0, s2) <= prob_detection(lo, e0, s2)


class TestMse:
    def test_perfect_detector(self):
        assert theoretical_mse(0.2, 1.0, 0.0, 3.0, 50.0) == pytest.approx(0.6)

    def test_no_activity(self):
        assert theoretical_mse(0.0, 0.3, 0.0, 1.0, 10.0) == 0.0

    def test_domain(self):
        with pytest.raises(ValueError):
            theoretical_mse(1.2, 0.5, 0.5, 1.0, 1.0)
        with pytest.raises(ValueError):
            theoretical_mse(0.5, 0.5, 0.5, -1.0, 1.0)

    @given(prob, prob, prob, prob, st.floats(0, 100), st.floats(0, 100))
    def test_nondecreasing_in_false_alarm(self, q, pd, f1, f2, e0, s2):
        lo, hi = sorted((f1, f2))
        assert theoretical_mse(q, pd, lo, e0, s2) <= theoretical_mse(q, pd, hi, e0, s2) + 1e-12

    @given(prob, prob, prob, prob, st.floats(0, 100), st.floats(0, 100))
    def test_nonincreasing_in_detection(self, q, d1, d2, pfa, e0, extra):
        s2 = e0 + extra
        lo, hi = sorted((d1, d2))
        assert theoretical_mse(q, hi, pfa, e0, s2) <= theoretical_mse(q, lo, pfa, e0, s2) + 1e-12

    def test_predict_consistent(self):
        p = predict(1.0, 10.0, 0.125, 5.0)
        s2 = 80.0
        assert p.p_fa == pytest.approx(math.exp(-p.tau))
        assert p.p_d == pytest.approx(math.exp(-p.tau / 81.0))
        assert p.mse == pytest.approx(theoretical_mse(0.125, p.p_d, p.p_fa, 1.0, s2))


class TestRoc:
    def test_identity(self):
        for s2 in (0.5, 1.0, 30.0):
            for pfa, pd in roc_curve(1.0, s2, 200):
                assert abs(pd - pfa ** (1.0 / (1.0 + s2))) <= 1e-12

    def test_equal_variance_is_square_root(self):
        for pfa, pd in roc_curve(2.0, 2.0, 50):
            assert pd == pytest.approx(math.sqrt(pfa), abs=1e-12)

    def test_monotone_and_above_diagonal(self):
        pts = roc_curve(1.0, 3.0, 100)
        pfa = np.array([a for a, _ in pts])
        pd = np.array([b for _, b in pts])
        assert np.all(np.diff(pfa) <= 0) and np.all(np.diff(pd) <= 0)
        assert np.all(pd >= pfa)
        assert pfa[0] > 0.999 and pfa[-1] == pytest.approx(1e-6)

    def test_large_signal_corner(self):
        # p_d at p_fa = 0.01 is 0.01 ** (1/(1+r)); it first reaches 0.99 at r ~ 457.2.
        r = 458.0
        assert 0.01 ** (1.0 / (1.0 + r)) >= 0.99
        pts = roc_curve(1.0, r, 400)
        pd_at = np.interp(0.01, [a for a, _ in pts][::-1], [b for _, b in pts][::-1])
        assert pd_at >= 0.99

    def test_domain(self):
        with pytest.raises(ValueError):
            roc_curve(1.0, 0.0, 10)
        with pytest.raises(ValueError):
            roc_curve(1.0, 1.0, 1)


class TestMseProportionalToQ:
    def test_high_snr_spread(self):
        ratios = [r for _, r in corollary2_slope_check(1.0, 100.0, [1 / 64, 1 / 32, 1 / 16], 5.0)]
        assert max(ratios) / min(ratios) <= 1.5

    def test_perfect_detector_limit(self):
        for q in (0.01, 0.1, 0.5):
            assert theoretical_mse(q, 1.0, 0.0, 2.0, 9.0) / q == pytest.approx(2.0)

    def test_low_snr_returns_values(self):
        out = corollary2_slope_check(1.0, 0.1, [1 / 64, 1 / 32, 1 / 16], 5.0)
        assert len(out) == 3 and all(r > 0 for _, r in out)
