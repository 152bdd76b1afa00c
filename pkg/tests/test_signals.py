import pytest
from hypothesis import given
from hypothesis import strategies as st

from tclsim.controller import power_bounds
from tclsim.model import NOMINAL_MODEL, ConfigurationError
from tclsim.signals import (
    ReferenceSignal, SignalParseError, StepAlignmentError, demo_signal, parse_signal, serialize_signal,
)

STEP = ReferenceSignal(((0, 1.0), (3600, 0.6)))


@st.composite
def signals(draw):
    gaps = draw(st.lists(st.floats(0.5, 5000, allow_nan=False), max_size=12))
    values = draw(st.lists(st.floats(0, 5, allow_nan=False), min_size=len(gaps) + 1, max_size=len(gaps) + 1))
    times = [0.0]
    for g in gaps:
        times.append(times[-1] + g)
    return ReferenceSignal(tuple(zip(times, values)))


class TestValueForInterval:
    @given(st.floats(0, 1e5), st.floats(1e-3, 1e4))
    def test_constant(self, t, dt):
        assert ReferenceSignal.constant().value_for_interval(t, t + dt) == 1.0

    def test_new_value_applies_after_its_start(self):
        assert STEP.value_for_interval(3600, 3610) == 0.6

    def test_left_open_right_closed(self):
        assert STEP.value_for_interval(3590, 3600) == 1.0

    def test_straddling_breakpoint(self):
        with pytest.raises(StepAlignmentError):
            STEP.value_for_interval(3595, 3605)

    def test_empty_interval(self):
        with pytest.raises(ValueError):
            STEP.value_for_interval(10, 10)

    @given(signals(), st.floats(0, 1), st.floats(0.01, 0.99))
    def test_refinement_invariance(self, sig, pos, cut):
        times = sig.times + [sig.times[-1] + 100.0]
        i = min(int(pos * (len(times) - 1)), len(times) - 2)
        a, b = times[i], times[i + 1]
        mid = a + cut * (b - a)
        if not a < mid < b:
            return
        whole = sig.value_for_interval(a, b)
        assert sig.value_for_interval(a, mid) == whole == sig.value_for_interval(mid, b)


class TestConstruction:
    def test_must_start_at_zero(self):
        with pytest.raises(ConfigurationError):
            ReferenceSignal(((5.0, 1.0),))

    def test_increasing_times(self):
        with pytest.raises(ConfigurationError):
            ReferenceSignal(((0, 1.0), (10, 1.0), (10, 2.0)))

    def test_non_negative(self):
        with pytest.raises(ConfigurationError):
            ReferenceSignal(((0, -0.1),))


class TestCsv:
    def test_parse_minimal(self):
        assert parse_signal("t_s,pi\n0,1.0\n").breakpoints == ((0.0, 1.0),)

    @given(signals())
    def test_round_trip(self, sig):
        assert parse_signal(serialize_signal(sig)) == sig

    @pytest.mark.parametrize("text, line", [
        ("t_s,pi\n100,1.0\n", 2),
        ("time,pi\n0,1\n", 1),
        ("t_s,pi\n0,1\n10,-0.5\n", 3),
        ("t_s,pi\n0,1\n10,1\n5,1\n", 4),
        ("t_s,pi\n0,1\n10,abc\n", 3),
        ("t_s,pi\n0,1,2\n", 2),
        ("t_s,pi\n", 2),
    ])
    def test_parse_errors_carry_line_numbers(self, text, line):
        with pytest.raises(SignalParseError) as err:
            parse_signal(text)
        assert err.value.line == line
        assert f"line {line}" in str(err.value)

    def test_blank_lines_ignored(self):
        assert parse_signal("t_s,pi\n0,1\n\n60,0.5\n").breakpoints == ((0.0, 1.0), (60.0, 0.5))


class TestDemo:
    def test_starts_at_steady_state(self):
        assert demo_signal().value_for_interval(0, 1e-3) == 1.0

    def test_has_reduction_and_increase(self):
        values = [v for _, v in demo_signal().breakpoints]
        assert min(values) < 1 < max(values)

    def test_payback_tail(self):
        sig = demo_signal()
        assert sig.times[-1] <= 5 * 3600 - 1800
        assert sig.breakpoints[-1][1] == 1.0

    def test_within_nominal_power_limits(self):
        prov, absorb = power_bounds(0.0, NOMINAL_MODEL), power_bounds(0.01, NOMINAL_MODEL)
        lo, hi = max(prov[0], absorb[0]), min(prov[1], absorb[1])
        assert all(lo <= v <= hi for _, v in demo_signal().breakpoints)

    def test_breakpoints_on_ten_second_grid(self):
        assert all(t % 10 == 0 for t in demo_signal().times)
