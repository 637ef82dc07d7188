"""Least-squares fits of capital productivity on utilization factors, plus the
diagnostics and reserve estimates built on top of them."""

from __future__ import annotations

import bisect
import csv
import enum
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateInputError,
    InsufficientDataError,
    NoExtremumError,
    ParseError,
    SingularFitError,
    ValidationError,
)

DEFAULT_T = 2.0


class Form(str, enum.Enum):
    LINEAR = "linear"
    PARABOLA = "parabola"
    MULTILINEAR = "multilinear"


@dataclass(frozen=True)
class Sample:
    """``n`` observations of up to a few factors ``x`` and a response ``y``.

    ``weights`` lets a caller fit banded group means weighted by group size.
    """

    x: np.ndarray
    y: np.ndarray
    ids: tuple[str, ...] = ()
    names: tuple[str, ...] = ()
    weights: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).ravel()
        if x.ndim != 2 or x.shape[0] != y.shape[0]:
            raise ValidationError("x and y must have the same number of rows")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("sample contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{j + 1}" for j in range(x.shape[1])))
        elif len(self.names) != x.shape[1]:
            raise ValidationError("one name per factor column is required")
        if not self.ids:
            object.__setattr__(self, "ids", tuple(str(i + 1) for i in range(len(y))))
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape != y.shape or np.any(w <= 0) or not np.all(np.isfinite(w)):
                raise ValidationError("weights must be positive, finite and one per row")
            object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def k(self) -> int:
        return self.x.shape[1]

    def column(self, j: int) -> "Sample":
        return Sample(self.x[:, [j]], self.y, self.ids, (self.names[j],), self.weights)


@dataclass(frozen=True)
class RegressionModel:
    form: Form
    coefficients: tuple[float, ...]  # intercept first
    names: tuple[str, ...]  # factor names; a parabola has one
    std_errors: tuple[float, ...] = ()  # per slope
    marginal_errors: tuple[float, ...] = ()
    confidence_low: tuple[float, ...] = ()
    confidence_high: tuple[float, ...] = ()
    pearson_r: float | None = None
    correlation_ratio: float | None = None
    determination: float | None = None
    f_statistic: float | None = None
    elasticity: tuple[float, ...] = ()
    n: int = 0
    t_value: float = DEFAULT_T
    x_means: tuple[float, ...] = ()
    y_mean: float | None = None

    @classmethod
    def from_coefficients(cls, form: Form | str, coefficients: Sequence[float], names=None):
        """Wrap published coefficients that were not fitted here."""
        form = Form(form)
        coefficients = tuple(float(c) for c in coefficients)
        expected = {Form.LINEAR: 2, Form.PARABOLA: 3}.get(form)
        if expected is not None and len(coefficients) != expected:
            raise ValidationError(f"{form.value} model needs {expected} coefficients")
        if form is Form.MULTILINEAR and len(coefficients) < 2:
            raise ValidationError("multilinear model needs an intercept and a slope")
        if names is None:
            k = 1 if form is not Form.MULTILINEAR else len(coefficients) - 1
            names = tuple(f"x{j + 1}" for j in range(k))
        return cls(form, coefficients, tuple(names))

    @property
    def intercept(self) -> float:
        return self.coefficients[0]

    @property
    def slopes(self) -> tuple[float, ...]:
        return self.coefficients[1:]

    def predict(self, x) -> np.ndarray | float:
        """Evaluate the model.

        Single-factor models take a scalar or a vector of observations.  A
        multi-factor model takes one factor vector or a matrix of rows.
        """
        x = np.asarray(x, dtype=float)
        k = len(self.slopes) if self.form is not Form.PARABOLA else 1
        single = x.ndim == 0 or (k > 1 and x.ndim == 1)
        if k == 1:
            xs = x.reshape(-1)
        else:
            xs = x.reshape(-1, k)
        if self.form is Form.PARABOLA:
            a, b, c = self.coefficients
            out = a + b * xs + c * xs * xs
        elif k == 1:
            out = self.coefficients[0] + self.coefficients[1] * xs
        else:
            out = self.coefficients[0] + xs @ np.asarray(self.slopes)
        return float(out[0]) if single else out

    def to_dict(self) -> dict:
        return {
            "form": self.form.value,
            "names": list(self.names),
            "coefficients": list(self.coefficients),
            "std_errors": list(self.std_errors),
            "marginal_errors": list(self.marginal_errors),
            "confidence_low": list(self.confidence_low),
            "confidence_high": list(self.confidence_high),
            "pearson_r": self.pearson_r,
            "correlation_ratio": self.correlation_ratio,
            "determination": self.determination,
            "f_statistic": self.f_statistic,
            "elasticity": list(self.elasticity),
            "n": self.n,
            "t_value": self.t_value,
            "x_means": list(self.x_means),
            "y_mean": self.y_mean,
        }


# ---------------------------------------------------------------------------
# least-squares core

@dataclass(frozen=True)
class LeastSquares:
    coef: np.ndarray
    cov: np.ndarray
    fitted: np.ndarray
    sse: float
    sst: float


def _dependent_columns(design: np.ndarray) -> list[int]:
    """Indices of columns that add nothing to the span of the ones before them."""
    scale = np.linalg.norm(design, axis=0)
    scale[scale == 0] = 1.0
    normed = design / scale
    tol = max(design.shape) * np.finfo(float).eps * 1e3
    bad, kept = [], []
    for j in range(design.shape[1]):
        trial = normed[:, kept + [j]]
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] <= tol * s[0] or s[0] == 0:
            bad.append(j)
        else:
            kept.append(j)
    return bad


def least_squares(
    design: np.ndarray,
    y: np.ndarray,
    columns: Sequence[str],
    weights: np.ndarray | None = None,
) -> LeastSquares:
    """Solve ``min ||W^(1/2) (y - design @ coef)||`` by orthogonal decomposition.

    A rank-deficient design raises :class:`SingularFitError` naming the
    columns that are linear combinations of earlier ones.
    """
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = design.shape
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    sw = np.sqrt(w)
    dw, yw = design * sw[:, None], y * sw

    bad = _dependent_columns(dw)
    if bad:
        raise SingularFitError("design matrix is rank-deficient", columns=[columns[j] for j in bad])

    q, r = np.linalg.qr(dw)
    coef = np.linalg.solve(r, q.T @ yw)
    fitted = design @ coef
    resid = y - fitted
    sse = float(np.sum(w * resid * resid))
    ybar = float(np.sum(w * y) / np.sum(w))
    sst = float(np.sum(w * (y - ybar) ** 2))
    dof = n - p
    sigma2 = sse / dof if dof > 0 else math.nan
    rinv = np.linalg.inv(r)
    cov = sigma2 * (rinv @ rinv.T)
    return LeastSquares(coef, cov, fitted, sse, sst)


def _check_n(n: int, need: int, what: str) -> None:
    if n < need:
        raise InsufficientDataError(f"{what} needs at least {need} observations, got {n}")


def _determination(sse: float, sst: float) -> float | None:
    if sst == 0:
        return None
    return min(1.0, max(0.0, 1.0 - sse / sst))


def _finish(
    form: Form,
    coef: np.ndarray,
    cov: np.ndarray,
    ls: LeastSquares,
    sample: Sample,
    t_value: float,
) -> RegressionModel:
    if t_value < 0:
        raise ValidationError("t value must be non-negative")
    slopes = coef[1:]
    se = np.sqrt(np.clip(np.diag(cov)[1:], 0.0, None))
    margin = t_value * se
    r2 = _determination(ls.sse, ls.sst)
    k = len(slopes)
    w = sample.weights if sample.weights is not None else np.ones(sample.n)
    x_means = tuple(float(v) for v in np.average(sample.x, axis=0, weights=w))
    y_mean = float(np.average(sample.y, weights=w))

    model = RegressionModel(
        form=form,
        coefficients=tuple(float(c) for c in coef),
        names=sample.names,
        std_errors=tuple(float(s) for s in se),
        marginal_errors=tuple(float(m) for m in margin),
        confidence_low=tuple(float(b - m) for b, m in zip(slopes, margin)),
        confidence_high=tuple(float(b + m) for b, m in zip(slopes, margin)),
        correlation_ratio=None if r2 is None else math.sqrt(r2),
        determination=r2,
        f_statistic=None if r2 is None or sample.n <= k + 1 else f_statistic(r2, sample.n, k),
        n=sample.n,
        t_value=t_value,
        x_means=x_means,
        y_mean=y_mean,
    )
    elastic = elasticity(model, x_means, y_mean) if y_mean != 0 else ()
    r = None
    if form is Form.LINEAR and r2 is not None and sample.weights is None:
        r = pearson_r(sample.x[:, 0], sample.y)
    return _replace(model, elasticity=elastic, pearson_r=r)


def _replace(model: RegressionModel, **changes) -> RegressionModel:
    from dataclasses import replace

    return replace(model, **changes)


def fit_linear(sample: Sample, t_value: float = DEFAULT_T) -> RegressionModel:
    """Straight line ``y = a + b x`` on the first factor column."""
    if sample.k != 1:
        sample = sample.column(0)
    _check_n(sample.n, 3, "linear fit")
    x = sample.x[:, 0]
    design = np.column_stack([np.ones_like(x), x])
    ls = least_squares(design, sample.y, ["intercept", sample.names[0]], sample.weights)
    return _finish(Form.LINEAR, ls.coef, ls.cov, ls, sample, t_value)


def fit_parabola(sample: Sample, t_value: float = DEFAULT_T) -> RegressionModel:
    """Second-order polynomial ``y = a + b x + c x^2``.

    The fit runs on ``x`` centred at its mean for conditioning; coefficients
    and their covariance are mapped back to the raw basis.
    """
    if sample.k != 1:
        sample = sample.column(0)
    _check_n(sample.n, 4, "parabolic fit")
    x = sample.x[:, 0]
    shift = float(np.mean(x))
    u = x - shift
    name = sample.names[0]
    design = np.column_stack([np.ones_like(u), u, u * u])
    ls = least_squares(design, sample.y, ["intercept", name, f"{name}^2"], sample.weights)
    # a + b x + c x^2 with x = u + shift
    t = np.array([
        [1.0, -shift, shift * shift],
        [0.0, 1.0, -2.0 * shift],
        [0.0, 0.0, 1.0],
    ])
    coef = t @ ls.coef
    cov = t @ ls.cov @ t.T
    return _finish(Form.PARABOLA, coef, cov, ls, sample, t_value)


def fit_multilinear(sample: Sample, t_value: float = DEFAULT_T) -> RegressionModel:
    """Intercept plus one slope per factor column."""
    _check_n(sample.n, sample.k + 2, "multilinear fit")
    design = np.column_stack([np.ones(sample.n), sample.x])
    ls = least_squares(design, sample.y, ["intercept", *sample.names], sample.weights)
    return _finish(Form.MULTILINEAR, ls.coef, ls.cov, ls, sample, t_value)


def fit_polynomial(t, y, degree: int) -> np.ndarray:
    """Raw-basis coefficients ``a, b[, c, ...]`` of a least-squares polynomial in ``t``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if degree < 0:
        raise ValidationError("degree must be non-negative")
    _check_n(len(t), degree + 1, f"degree-{degree} polynomial")
    shift = float(np.mean(t))
    u = t - shift
    design = np.column_stack([u ** p for p in range(degree + 1)])
    ls = least_squares(design, y, [f"t^{p}" for p in range(degree + 1)])
    # expand sum c_p (t - shift)^p back into powers of t
    raw = np.zeros(degree + 1)
    for p, cp in enumerate(ls.coef):
        for q in range(p + 1):
            raw[q] += cp * math.comb(p, q) * (-shift) ** (p - q)
    return raw


# ---------------------------------------------------------------------------
# diagnostics

def pearson_r(xs, ys) -> float:
    """Linear correlation from population moments.

    The divisor (n or n-1) cancels between covariance and the standard
    deviations, so no sample-variance variant is offered.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise InsufficientDataError("correlation needs two equal-length series of at least 2 points")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = math.sqrt(np.mean(dx * dx)), math.sqrt(np.mean(dy * dy))
    if sx == 0 or sy == 0:
        raise DegenerateInputError("zero variance: correlation undefined")
    r = float(np.mean(dx * dy)) / (sx * sy)
    return min(1.0, max(-1.0, r))


def correlation_ratio(sample: Sample, model: RegressionModel) -> float:
    """``sqrt(1 - SSE/SST)`` of ``model`` evaluated on ``sample``, clipped at zero."""
    y = sample.y
    fitted = model.predict(sample.x if model.form is Form.MULTILINEAR else sample.x[:, 0])
    sst = float(np.sum((y - y.mean()) ** 2))
    if sst == 0:
        raise DegenerateInputError("response has zero variance: correlation ratio undefined")
    sse = float(np.sum((y - fitted) ** 2))
    return math.sqrt(max(0.0, 1.0 - sse / sst))


def f_statistic(determination: float, n: int, k: int) -> float:
    if not 0 <= determination <= 1:
        raise ValidationError("determination must lie in [0, 1]")
    if k < 1 or n <= k + 1:
        raise InsufficientDataError("F statistic needs n > k + 1 and k >= 1")
    if determination == 1:
        return math.inf
    return (determination / k) / ((1 - determination) / (n - k - 1))


@lru_cache(maxsize=1)
def _f_table() -> tuple[list[float], dict[int, list[float]]]:
    text = resources.files("fleetcap.data").joinpath("f_critical_05.csv").read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    df1s = [int(h.split("_")[1]) for h in header[1:]]
    df2s, cols = [], {d: [] for d in df1s}
    for row in reader:
        df2s.append(float(row[0]))
        for d, cell in zip(df1s, row[1:]):
            cols[d].append(float(cell))
    return df2s, cols


def f_critical(df1: int, df2: int) -> float:
    """Upper 5% point of F(df1, df2) from the shipped table.

    Between tabulated ``df2`` rows the next smaller row is used, which errs
    on the conservative (larger) side.
    """
    df2s, cols = _f_table()
    if df1 not in cols:
        raise ValidationError(f"no critical values tabulated for df1={df1}")
    if df2 < 1:
        raise ValidationError("df2 must be at least 1")
    i = bisect.bisect_right(df2s, df2) - 1
    return cols[df1][i]


@dataclass(frozen=True)
class FTest:
    statistic: float
    critical: float
    significant: bool


def f_test(determination: float, n: int, k: int, critical: float | None = None) -> FTest:
    stat = f_statistic(determination, n, k)
    crit = f_critical(k, n - k - 1) if critical is None else float(critical)
    return FTest(stat, crit, stat > crit)


def slope_confidence(coefficient: float, marginal_error: float) -> tuple[float, float]:
    if marginal_error < 0:
        raise ValidationError("marginal error must be non-negative")
    return coefficient - marginal_error, coefficient + marginal_error


def elasticity(model: RegressionModel, x_mean, y_mean: float) -> tuple[float, ...]:
    """Percent change in y per percent change in each factor, at the means."""
    if y_mean == 0:
        raise DegenerateInputError("mean response is zero: elasticity undefined")
    x_mean = np.atleast_1d(np.asarray(x_mean, dtype=float))
    if model.form is Form.PARABOLA:
        _, b, c = model.coefficients
        xm = float(x_mean[0])
        return ((b + 2 * c * xm) * xm / y_mean,)
    slopes = model.slopes
    if len(x_mean) != len(slopes):
        raise ValidationError("one factor mean per slope is required")
    return tuple(float(b * xm / y_mean) for b, xm in zip(slopes, x_mean))


def marginal_effect(
    model: RegressionModel, dx, at: float = 0.0, first_order: bool = False
) -> tuple[float, ...]:
    """Change in y for a step ``dx`` in each factor.

    For a parabola the exact change from ``at`` to ``at + dx`` is returned,
    or the tangent-line approximation when ``first_order`` is set.
    """
    if model.form is Form.PARABOLA:
        _, b, c = model.coefficients
        dx = float(dx)
        if first_order:
            return ((b + 2 * c * at) * dx,)
        return (b * dx + c * (2 * at * dx + dx * dx),)
    steps = np.broadcast_to(np.asarray(dx, dtype=float), (len(model.slopes),))
    return tuple(float(b * d) for b, d in zip(model.slopes, steps))


def parabola_extremum(model: RegressionModel) -> float:
    if model.form is not Form.PARABOLA:
        raise ValidationError("extremum is defined for parabolic models only")
    _, b, c = model.coefficients
    if c == 0:
        raise NoExtremumError("quadratic coefficient is zero: no extremum")
    return -b / (2 * c)


def correlation_matrix(sample: Sample, include_y: bool = True) -> tuple[tuple[str, ...], np.ndarray]:
    """Pairwise linear correlations; undefined cells (zero variance) are NaN."""
    cols = [sample.x[:, j] for j in range(sample.k)]
    names = list(sample.names)
    if include_y:
        cols.append(sample.y)
        names.append("y")
    m = len(cols)
    out = np.eye(m)
    for i in range(m):
        for j in range(i + 1, m):
            try:
                out[i, j] = out[j, i] = pearson_r(cols[i], cols[j])
            except DegenerateInputError:
                out[i, j] = out[j, i] = math.nan
    return tuple(names), out


# ---------------------------------------------------------------------------
# reserves and scoring

class ReserveMode(str, enum.Enum):
    MINIMAL = "minimal"
    OPTIMAL = "optimal"
    MAXIMAL = "maximal"


@dataclass(frozen=True)
class ReserveReport:
    mode: ReserveMode
    names: tuple[str, ...]
    delta_x: tuple[float, ...]
    delta_y: tuple[float, ...]
    total: float
    percent: float | None
    y_mean: float

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["factor", "delta_x", "delta_y"])
        for name, dx, dy in zip(self.names, self.delta_x, self.delta_y):
            writer.writerow([name, repr(dx), repr(dy)])
        writer.writerow(["total", "", repr(self.total)])
        writer.writerow(["percent_of_mean", "", "" if self.percent is None else repr(self.percent)])
        return out.getvalue()


def _factor_step(x: np.ndarray, mode: ReserveMode) -> float:
    mean = float(np.mean(x))
    below, above = x[x < mean], x[x > mean]
    if mode is ReserveMode.MINIMAL:
        if below.size == 0:
            return 0.0
        return below.size / x.size * (mean - float(np.mean(below)))
    if mode is ReserveMode.OPTIMAL:
        return 0.0 if above.size == 0 else float(np.mean(above)) - mean
    return float(np.max(x)) - mean


def reserve_estimate(sample: Sample, model: RegressionModel, mode: ReserveMode | str) -> ReserveReport:
    """Predicted gain in y from lifting each factor toward a better level.

    ``minimal`` lifts below-mean units to the mean, ``optimal`` moves the
    whole set to the mean of the above-mean units, ``maximal`` to the best
    observed value.  A factor with a negative slope improves downward, so
    its step is taken in that direction and every reserve is non-negative.
    """
    mode = ReserveMode(mode)
    if model.form is Form.PARABOLA:
        raise ValidationError("reserves are estimated from linear or multilinear models")
    slopes = model.slopes
    if len(slopes) != sample.k:
        raise ValidationError("model and sample have different factor counts")
    dxs, dys = [], []
    for j, b in enumerate(slopes):
        x = sample.x[:, j]
        direction = -1.0 if b < 0 else 1.0
        dx = direction * _factor_step(direction * x, mode)
        dxs.append(dx)
        dys.append(b * dx)
    total = math.fsum(dys)
    y_mean = float(np.mean(sample.y))
    percent = None if y_mean == 0 else 100.0 * total / y_mean
    return ReserveReport(mode, tuple(sample.names), tuple(dxs), tuple(dys), total, percent, y_mean)


def enterprise_efficiency(model: RegressionModel, x, y_actual: float) -> float | None:
    """Actual over model-predicted y; ``None`` when the prediction is not positive."""
    predicted = float(model.predict(x))
    if predicted <= 0:
        return None
    return float(y_actual) / predicted


def parse_sample(text: str) -> Sample:
    """Read ``enterprise_id,x1[,x2,...],y`` rows; every column named ``x*`` is a factor.

    An optional ``weight`` column (group sizes when fitting banded means)
    becomes the sample weights.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("sample file is empty", line=1) from None
    if "y" not in header:
        raise ParseError("sample header lacks 'y'", line=1)
    xcols = [i for i, h in enumerate(header) if h.startswith("x")]
    if not xcols:
        raise ParseError("sample header has no x columns", line=1)
    id_col = header.index("enterprise_id") if "enterprise_id" in header else None
    w_col = header.index("weight") if "weight" in header else None
    y_col = header.index("y")
    ids, xs, ys, ws = [], [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError("wrong number of columns", line=lineno)
        try:
            xs.append([float(row[i]) for i in xcols])
            ys.append(float(row[y_col]))
            if w_col is not None:
                ws.append(float(row[w_col]))
        except ValueError as exc:
            raise ParseError(f"non-numeric value ({exc})", line=lineno) from None
        if not (all(math.isfinite(v) for v in xs[-1]) and math.isfinite(ys[-1])):
            raise ValidationError(f"line {lineno}: non-finite value")
        ids.append(row[id_col].strip() if id_col is not None else str(len(ids) + 1))
    if not ys:
        raise InsufficientDataError("sample has no rows")
    weights = np.array(ws) if w_col is not None else None
    return Sample(np.array(xs), np.array(ys), tuple(ids), tuple(header[i] for i in xcols), weights)
