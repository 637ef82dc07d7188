"""Quarterly demand: smoothing, trend, seasonal wave and forecast."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .econometrics import fit_polynomial
from .errors import InsufficientDataError, ParseError, ValidationError

QUARTER = math.pi / 2  # one quarter of phase, so a yearly cycle has period 4
MIN_SEASONAL_LENGTH = 8


class WaveForm(str, enum.Enum):
    PLUS_SIN = "+sin"
    MINUS_SIN = "-sin"
    PLUS_COS = "+cos"
    MINUS_COS = "-cos"

    @classmethod
    def parse(cls, text: str) -> "WaveForm":
        # accept a typographic minus as well
        return cls(text.strip().replace("−", "-"))

    def __call__(self, phase):
        sign = -1.0 if self.value[0] == "-" else 1.0
        fn = np.sin if self.value.endswith("sin") else np.cos
        return sign * fn(phase)


# quarter (t mod 4) at which each form peaks with one quarter = pi/2
PEAK_CLASS = {
    WaveForm.PLUS_COS: 0,
    WaveForm.PLUS_SIN: 1,
    WaveForm.MINUS_COS: 2,
    WaveForm.MINUS_SIN: 3,
}


@dataclass(frozen=True)
class QuarterSeries:
    t: tuple[int, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        if len(self.t) != len(self.y):
            raise ValidationError("t and y differ in length")
        if any(b - a != 1 for a, b in zip(self.t, self.t[1:])):
            raise ValidationError("periods must increase by exactly one with no gaps")
        if not all(math.isfinite(v) for v in self.y):
            raise ValidationError("series contains non-finite values")

    @classmethod
    def from_values(cls, values: Sequence[float], start: int = 1) -> "QuarterSeries":
        return cls(tuple(range(start, start + len(values))), tuple(float(v) for v in values))

    def __len__(self) -> int:
        return len(self.y)

    @property
    def t_array(self) -> np.ndarray:
        return np.asarray(self.t, dtype=float)

    @property
    def y_array(self) -> np.ndarray:
        return np.asarray(self.y, dtype=float)


def moving_average_5(series: QuarterSeries) -> QuarterSeries:
    """Centred five-term average; the two points at each edge are dropped."""
    if len(series) < 5:
        raise InsufficientDataError("five-term average needs at least 5 points")
    y = series.y_array
    smoothed = np.convolve(y, np.full(5, 0.2), mode="valid")
    return QuarterSeries(series.t[2:-2], tuple(float(v) for v in smoothed))


@dataclass(frozen=True)
class Trend:
    coefficients: tuple[float, ...]  # a, b[, c] in powers of t

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return sum(c * t ** p for p, c in enumerate(self.coefficients))


def fit_trend(series: QuarterSeries, degree: int = 1) -> Trend:
    """Least-squares polynomial in t; degree 2 lets the trend bend through a crisis."""
    if degree not in (1, 2):
        raise ValidationError("trend degree must be 1 or 2")
    coef = fit_polynomial(series.t_array, series.y_array, degree)
    return Trend(tuple(float(c) for c in coef))


@dataclass(frozen=True)
class Amplitude:
    value: float
    extrema: tuple[int, ...]  # positions into the series
    warning: str | None = None


def _extrema(e: np.ndarray) -> list[int]:
    """Indices of strict local extrema; a flat run counts once, at its midpoint."""
    # collapse runs of equal values
    runs: list[tuple[int, int, float]] = []
    for i, v in enumerate(e):
        if runs and v == runs[-1][2]:
            runs[-1] = (runs[-1][0], i, v)
        else:
            runs.append((i, i, v))
    found = []
    for j in range(1, len(runs) - 1):
        prev, cur, nxt = runs[j - 1][2], runs[j][2], runs[j + 1][2]
        if (cur > prev and cur > nxt) or (cur < prev and cur < nxt):
            lo, hi = runs[j][0], runs[j][1]
            found.append((lo + hi) // 2)
    return found


def seasonal_amplitude(series: QuarterSeries, trend: Trend) -> Amplitude:
    """Mean absolute detrended residual over the residual's local extrema."""
    e = series.y_array - trend(series.t_array)
    scale = max(1.0, float(np.max(np.abs(series.y_array))))
    e = np.where(np.abs(e) <= 1e-12 * scale, 0.0, e)
    idx = _extrema(e)
    if not idx:
        return Amplitude(0.0, (), "residual has no local extrema; amplitude set to zero")
    value = float(np.mean(np.abs(e[idx])))
    warning = "only one residual extremum found" if len(idx) < 2 else None
    return Amplitude(value, tuple(idx), warning)


def choose_wave_form(series: QuarterSeries, trend: Trend) -> WaveForm:
    """Pick the form whose peak falls in the quarter where residuals run highest."""
    e = series.y_array - trend(series.t_array)
    classes = np.asarray(series.t) % 4
    means = {}
    for c in range(4):
        sel = e[classes == c]
        if sel.size:
            means[c] = float(np.mean(sel))
    peak = max(means, key=lambda c: (means[c], -c))
    return next(form for form, cls in PEAK_CLASS.items() if cls == peak)


@dataclass(frozen=True)
class ForecastModel:
    trend: Trend
    amplitude: float
    wave_form: WaveForm
    wave_period: float = 1.0  # frequency multiplier n
    t_last: int = 0
    warning: str | None = None

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValidationError("amplitude must be non-negative")
        if self.trend.degree not in (1, 2):
            raise ValidationError("trend degree must be 1 or 2")

    def seasonal(self, t):
        # adding 0.0 turns a signed zero into a plain one for clean reports
        return self.amplitude * self.wave_form(self.wave_period * QUARTER * np.asarray(t, dtype=float)) + 0.0

    def __call__(self, t):
        return self.trend(t) + self.seasonal(t)


def fit_forecast_model(
    series: QuarterSeries,
    degree: int = 1,
    *,
    smooth: bool = True,
    wave: WaveForm | str | None = None,
    wave_period: float = 1.0,
) -> ForecastModel:
    """Fit trend (on the five-term average by default) and the seasonal wave.

    ``wave=None`` or ``"auto"`` selects the form from the residual pattern.
    """
    if len(series) < MIN_SEASONAL_LENGTH:
        raise InsufficientDataError(f"seasonal fitting needs at least {MIN_SEASONAL_LENGTH} quarters")
    base = moving_average_5(series) if smooth else series
    trend = fit_trend(base, degree)
    amp = seasonal_amplitude(series, trend)
    if wave is None or wave == "auto":
        form = choose_wave_form(series, trend)
    else:
        form = wave if isinstance(wave, WaveForm) else WaveForm.parse(wave)
    return ForecastModel(trend, amp.value, form, wave_period, series.t[-1], amp.warning)


@dataclass(frozen=True)
class ForecastRow:
    t: int
    trend: float
    seasonal: float
    forecast: float


def compose_and_forecast(model: ForecastModel, horizon: int) -> list[ForecastRow]:
    """Trend plus seasonal wave for the ``horizon`` quarters after the sample."""
    if horizon < 1:
        raise ValidationError("horizon must be at least 1")
    rows = []
    for t in range(model.t_last + 1, model.t_last + horizon + 1):
        tr = float(model.trend(t))
        s = float(model.seasonal(t))
        rows.append(ForecastRow(t, tr, s, tr + s))
    return rows


def parse_series(text: str) -> QuarterSeries:
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in reader.fieldnames or ()]
    if "t" not in header or "y" not in header:
        raise ParseError("series header must contain 't' and 'y'", line=1)
    reader.fieldnames = header
    ts, ys = [], []
    for row in reader:
        try:
            ts.append(int(row["t"]))
            ys.append(float(row["y"]))
        except (TypeError, ValueError):
            raise ParseError("malformed series row", line=reader.line_num) from None
    try:
        return QuarterSeries(tuple(ts), tuple(ys))
    except ValidationError as exc:
        raise ValidationError(f"series: {exc}") from None


def format_forecast(rows: Sequence[ForecastRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", "trend", "seasonal", "forecast"])
    for r in rows:
        writer.writerow([r.t, repr(r.trend), repr(r.seasonal), repr(r.forecast)])
    return out.getvalue()
