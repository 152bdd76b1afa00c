import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from tclsim.model import (
    NOMINAL_MODEL, ApplianceModel, ConfigurationError, drift_bound, overshoot_margins,
    propagate_temperature, sample_steady_state_temperature, steady_state, zeta,
)
from tclsim.population import FleetSpec, generate_fleet

from . import golden


def test_nominal_steady_state():
    ss = steady_state(NOMINAL_MODEL)
    assert ss.k == pytest.approx(golden.K, rel=1e-12)
    assert ss.t_bar_0 == pytest.approx(golden.T_BAR_0, rel=1e-12)
    assert ss.duty == pytest.approx(golden.DUTY, rel=1e-12)
    assert ss.p_0 == pytest.approx(golden.P_0, rel=1e-12)
    assert ss.zeta_max == pytest.approx(golden.ZETA_MAX, rel=1e-12)
    assert ss.zeta_min == pytest.approx(golden.ZETA_MIN, rel=1e-12)


def test_duty_matches_simulated_limit_cycle():
    # brute-force hysteresis cycling with the exact update at a 1 s step
    m, t, c, on_time, total = NOMINAL_MODEL, 7.0, True, 0.0, 0.0
    for _ in range(200_000):
        t = propagate_temperature(m, t, c, 1.0)
        on_time += c
        total += 1
        if c and t <= m.t_min:
            c = False
        elif not c and t >= m.t_max:
            c = True
    assert on_time / total == pytest.approx(steady_state(m).duty, abs=2e-3)


def test_zeta_vanishes_at_mean():
    toy = ApplianceModel(alpha=1e-3, t_off=10.0, t_on=-10.0, t_min=-1.0, t_max=1.0)
    ss = steady_state(toy)
    assert ss.t_bar_0 == pytest.approx(0.0, abs=1e-12)
    assert zeta(ss, toy, ss.t_bar_0) == 0.0


@pytest.mark.parametrize("kw", [
    dict(t_min=8.0),  # above t_max
    dict(t_on=3.0),  # above t_min
    dict(t_off=6.0),  # below t_max
    dict(alpha=0.0),
    dict(p_on=-1.0),
])
def test_invalid_model(kw):
    params = dict(alpha=1 / 7200, t_off=20.0, t_on=-44.0, t_min=2.0, t_max=7.0, p_on=70.0) | kw
    with pytest.raises(ConfigurationError):
        ApplianceModel(**params)


def test_generated_models_satisfy_steady_state_invariants():
    fleet = generate_fleet(FleetSpec(20_000, seed=3))
    assert np.all((fleet.t_min < fleet.t_bar_0) & (fleet.t_bar_0 < fleet.t_max))
    assert np.all((fleet.zeta_max < 0) & (fleet.zeta_min > 0))
    assert np.all((fleet.duty > 0) & (fleet.duty < 1))
    np.testing.assert_allclose(fleet.p_0, fleet.duty * fleet.p_on)


class TestPropagation:
    def test_fixed_point(self):
        m = NOMINAL_MODEL
        assert propagate_temperature(m, m.t_off, False, 1234.5) == m.t_off
        assert propagate_temperature(m, m.t_on, True, 99.0) == m.t_on

    def test_zero_step_is_identity(self):
        assert propagate_temperature(NOMINAL_MODEL, 3.3, True, 0.0) == 3.3
        assert propagate_temperature(NOMINAL_MODEL, 3.3, False, 0.0) == 3.3

    def test_on_cycle_lands_on_t_min(self):
        t = propagate_temperature(NOMINAL_MODEL, 7.0, True, golden.ON_TIME)
        assert t == pytest.approx(2.0, abs=1e-9)
        duty = steady_state(NOMINAL_MODEL).duty
        t_on = duty * (golden.ON_TIME + golden.OFF_TIME)
        assert propagate_temperature(NOMINAL_MODEL, 7.0, True, t_on) == pytest.approx(2.0, abs=1e-9)

    def test_negative_step_rejected(self):
        with pytest.raises(ValueError):
            propagate_temperature(NOMINAL_MODEL, 3.0, True, -1.0)

    @given(st.floats(-10, 25), st.booleans(), st.floats(0, 5000), st.floats(0, 5000))
    def test_semigroup(self, t0, c, a, b):
        m = NOMINAL_MODEL
        two = propagate_temperature(m, propagate_temperature(m, t0, c, a), c, b)
        one = propagate_temperature(m, t0, c, a + b)
        assert one == pytest.approx(two, rel=1e-12, abs=1e-12)

    @given(st.floats(-40, 19), st.booleans(), st.floats(0.1, 1e4))
    def test_monotone_toward_asymptote(self, t0, c, dt):
        m = NOMINAL_MODEL
        asym = m.t_on if c else m.t_off
        t1 = propagate_temperature(m, t0, c, dt)
        assert abs(t1 - asym) <= abs(t0 - asym)
        assert (t1 - asym) * (t0 - asym) >= 0

    def test_vectorised(self):
        t = propagate_temperature(NOMINAL_MODEL, np.array([2.0, 7.0]), np.array([False, True]), 10.0)
        assert t.shape == (2,)
        assert t[0] > 2.0 and t[1] < 7.0


class TestSampling:
    def test_boundaries(self):
        m = NOMINAL_MODEL
        assert sample_steady_state_temperature(m, True, 0.0) == m.t_min
        assert sample_steady_state_temperature(m, False, 0.0) == m.t_min
        assert sample_steady_state_temperature(m, True, 1.0) == m.t_max
        assert sample_steady_state_temperature(m, False, 1.0) == m.t_max

    def test_on_median(self):
        assert sample_steady_state_temperature(NOMINAL_MODEL, True, 0.5) == pytest.approx(golden.ON_MEDIAN, rel=1e-12)

    def test_median_against_rejection_sampling(self):
        m = NOMINAL_MODEL
        gen = np.random.default_rng(7)
        t = gen.uniform(m.t_min, m.t_max, 3_000_000)
        keep = gen.uniform(0, 1, t.size) < (m.t_min - m.t_on) / (t - m.t_on)
        samples = t[keep][:1_000_000]
        assert samples.size == 1_000_000
        assert np.median(samples) == pytest.approx(golden.ON_MEDIAN, abs=0.01)

    @pytest.mark.parametrize("compressor", [True, False])
    def test_ks_distance(self, compressor):
        m = NOMINAL_MODEL
        u = np.random.default_rng(11).uniform(size=100_000)
        x = sample_steady_state_temperature(m, compressor, u)
        assert x.min() >= m.t_min and x.max() <= m.t_max

        def cdf(t):
            if compressor:
                return np.log((t - m.t_on) / (m.t_min - m.t_on)) / np.log((m.t_max - m.t_on) / (m.t_min - m.t_on))
            return np.log((m.t_off - m.t_min) / (m.t_off - t)) / np.log((m.t_off - m.t_min) / (m.t_off - m.t_max))

        assert stats.kstest(x, cdf).statistic < 0.01

    def test_mixture_matches_f0_variance(self):
        m = NOMINAL_MODEL
        gen = np.random.default_rng(5)
        c = gen.uniform(size=400_000) < steady_state(m).duty
        x = sample_steady_state_temperature(m, c, gen.uniform(size=c.size))
        assert x.mean() == pytest.approx(golden.T_BAR_0, abs=4 * math.sqrt(golden.F0_VARIANCE / x.size))
        assert x.var() == pytest.approx(golden.F0_VARIANCE, rel=0.01)

    @pytest.mark.parametrize("u", [-0.1, 1.01, float("nan")])
    def test_rejects_out_of_range(self, u):
        with pytest.raises(ValueError):
            sample_steady_state_temperature(NOMINAL_MODEL, True, u)


class TestDriftBounds:
    def test_nominal_value(self):
        assert drift_bound(NOMINAL_MODEL, 10.0) == pytest.approx(18 * (1 - math.exp(-10 / 7200)), rel=1e-12)

    @given(st.floats(2.0, 7.0), st.floats(0, 600))
    def test_drift_bound_covers_warming(self, t0, dt):
        m = NOMINAL_MODEL
        assert abs(propagate_temperature(m, t0, False, dt) - t0) <= drift_bound(m, dt) + 1e-12

    def test_drift_bound_does_not_cover_cooling(self):
        # cooling from t_min outpaces the warming-based bound, hence the directional margins
        m = NOMINAL_MODEL
        assert m.t_min - propagate_temperature(m, m.t_min, True, 10.0) > drift_bound(m, 10.0)

    @given(st.floats(2.0, 7.0), st.booleans(), st.floats(0, 600))
    def test_overshoot_margins(self, t0, c, dt):
        m = NOMINAL_MODEL
        below, above = overshoot_margins(m, dt)
        t1 = propagate_temperature(m, t0, c, dt)
        assert m.t_min - below - 1e-12 <= t1 <= m.t_max + above + 1e-12
