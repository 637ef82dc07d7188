from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetcap.errors import InsufficientDataError, ParseError, ValidationError
from fleetcap.forecasting import (
    ForecastModel,
    QuarterSeries,
    Trend,
    WaveForm,
    choose_wave_form,
    compose_and_forecast,
    fit_forecast_model,
    fit_trend,
    format_forecast,
    moving_average_5,
    parse_series,
    seasonal_amplitude,
)

from oracles import normal_equations

T16 = np.arange(1, 17)


def generator(t):
    return 2 + 0.5 * t + 3 * math.sin(math.pi * t / 2)


def test_moving_average_constant_and_line():
    assert moving_average_5(QuarterSeries.from_values([4.0] * 7)).y == (4.0,) * 3
    line = QuarterSeries.from_values([float(t) for t in range(1, 10)])
    smoothed = moving_average_5(line)
    assert smoothed.t == tuple(range(3, 8))
    assert smoothed.y == pytest.approx([float(t) for t in range(3, 8)])


def test_moving_average_hand_value():
    assert moving_average_5(QuarterSeries.from_values([1, 2, 3, 4, 10])).y == (4.0,)


def test_moving_average_needs_five():
    with pytest.raises(InsufficientDataError):
        moving_average_5(QuarterSeries.from_values([1, 2, 3, 4]))


@given(st.lists(st.floats(-1e3, 1e3), min_size=5, max_size=30), st.floats(-100, 100), st.floats(-10, 10))
def test_moving_average_affine(values, shift, scale):
    s = QuarterSeries.from_values(values)
    moved = moving_average_5(QuarterSeries.from_values([scale * v + shift for v in values]))
    assert moved.y == pytest.approx([scale * v + shift for v in moving_average_5(s).y], abs=1e-9)


def test_series_must_be_gapless():
    with pytest.raises(ValidationError):
        QuarterSeries((1, 2, 4), (1.0, 2.0, 3.0))


def test_trend_exact_line_and_quadratic():
    line = QuarterSeries.from_values([5 - 0.3 * t for t in range(1, 11)])
    assert fit_trend(line, 1).coefficients == pytest.approx((5, -0.3))
    quad = QuarterSeries.from_values([1 + 0.2 * t - 0.05 * t * t for t in range(1, 13)])
    assert fit_trend(quad, 2).coefficients == pytest.approx((1, 0.2, -0.05), abs=1e-8)
    with pytest.raises(ValidationError):
        fit_trend(line, 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2]))
def test_trend_matches_oracle(seed, degree):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 30))
    y = rng.normal(10, 3, size=n)
    s = QuarterSeries.from_values(y)
    want = normal_equations([[t ** p for p in range(degree + 1)] for t in range(1, n + 1)], y)
    assert fit_trend(s, degree).coefficients == pytest.approx(want, rel=1e-8, abs=1e-9)


def test_amplitude_of_pure_wave():
    s = QuarterSeries.from_values([10 + 3 * math.sin(math.pi * t / 2) for t in T16])
    amp = seasonal_amplitude(s, Trend((10.0, 0.0)))
    assert amp.value == pytest.approx(3.0, abs=0.05)
    assert amp.warning is None


def test_amplitude_alternating_residual():
    s = QuarterSeries.from_values([2, -2, 2, -2, 2, -2, 2, -2])
    assert seasonal_amplitude(s, Trend((0.0, 0.0))).value == 2.0


def test_amplitude_zero_residual_warns():
    s = QuarterSeries.from_values([1.0 + t for t in range(10)])
    amp = seasonal_amplitude(s, fit_trend(s, 1))
    assert amp.value == 0.0
    assert amp.warning


def test_plateau_collapses_to_midpoint():
    s = QuarterSeries.from_values([0, 1, 5, 5, 5, 5, 1, 0, -3, 0])
    amp = seasonal_amplitude(s, Trend((0.0, 0.0)))
    # the flat run at positions 2..5 counts once, at position 3
    assert amp.extrema == (3, 8)
    assert amp.value == 4.0


@settings(max_examples=40, deadline=None)
@given(st.floats(-1e3, 1e3))
def test_amplitude_shift_invariant(c):
    values = [generator(t) + 0.1 * math.cos(t) for t in T16]
    base = fit_forecast_model(QuarterSeries.from_values(values))
    moved = fit_forecast_model(QuarterSeries.from_values([v + c for v in values]))
    assert moved.amplitude == pytest.approx(base.amplitude, abs=1e-9)


@pytest.mark.parametrize("form", list(WaveForm))
def test_wave_form_selection(form):
    values = [10 + 3 * float(form(math.pi * t / 2)) for t in T16]
    s = QuarterSeries.from_values(values)
    assert choose_wave_form(s, Trend((10.0, 0.0))) is form


def test_wave_form_accepts_typographic_minus():
    assert WaveForm.parse("−cos") is WaveForm.MINUS_COS


def test_synthetic_recovery():
    s = QuarterSeries.from_values([generator(t) for t in T16])
    m = fit_forecast_model(s)
    assert m.trend.coefficients[1] == pytest.approx(0.5, abs=0.05)
    assert m.amplitude == pytest.approx(3.0, abs=0.05)
    assert m.wave_form is WaveForm.PLUS_SIN
    for row in compose_and_forecast(m, 4):
        assert abs(row.forecast - generator(row.t)) / generator(row.t) < 0.05


def test_raw_trend_flag():
    s = QuarterSeries.from_values([generator(t) for t in T16])
    assert fit_forecast_model(s, smooth=False).trend != fit_forecast_model(s).trend


def test_decomposition_residual_centred():
    s = QuarterSeries.from_values([generator(t) for t in T16])
    m = fit_forecast_model(s)
    resid = np.array(s.y) - m(np.array(s.t))
    assert abs(resid.mean()) <= 0.05 * m.amplitude


def test_zero_amplitude_forecast_is_trend():
    m = ForecastModel(Trend((10.0, -0.5)), 0.0, WaveForm.PLUS_SIN, t_last=8)
    rows = compose_and_forecast(m, 5)
    assert [r.forecast for r in rows] == [r.trend for r in rows]
    assert all(a.forecast > b.forecast for a, b in zip(rows, rows[1:]))


def test_forecast_continues_in_sample_function():
    m = ForecastModel(Trend((1.0, 0.3)), 2.0, WaveForm.MINUS_COS, t_last=12)
    (first,) = compose_and_forecast(m, 1)
    assert first.t == 13
    assert first.forecast == pytest.approx(float(m(13)))
    # the in-sample function is the same object, so the boundary is continuous
    assert float(m(12)) == pytest.approx(1.0 + 0.3 * 12 - 2.0 * math.cos(6 * math.pi))


def test_horizon_and_amplitude_validated():
    with pytest.raises(ValidationError):
        compose_and_forecast(ForecastModel(Trend((1.0, 0.0)), 1.0, WaveForm.PLUS_SIN), 0)
    with pytest.raises(ValidationError):
        ForecastModel(Trend((1.0, 0.0)), -1.0, WaveForm.PLUS_SIN)


def test_seasonal_fit_needs_eight_quarters():
    with pytest.raises(InsufficientDataError):
        fit_forecast_model(QuarterSeries.from_values([1.0] * 7))


def test_series_io():
    s = parse_series("t,y\n1,2.5\n2,3.0\n")
    assert s.y == (2.5, 3.0)
    with pytest.raises(ParseError):
        parse_series("t,value\n1,2\n")
    m = ForecastModel(Trend((1.0, 1.0)), 0.0, WaveForm.PLUS_COS, t_last=2)
    assert format_forecast(compose_and_forecast(m, 1)).splitlines() == ["t,trend,seasonal,forecast", "3,4.0,0.0,4.0"]
