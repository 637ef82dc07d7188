"""Self-check against embedded reference tables.

Inputs and expected values live in ``data/golden.json``; each check reports
expected, actual, tolerance and a verdict.  Failures are data, not errors.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Any, Callable

import numpy as np

from . import depreciation as dep
from . import econometrics as eco
from . import forecasting as fc
from . import productivity as prod
from . import reproduction as rep
from .errors import FleetcapError
from .ledger import BalanceRecord
from .rounding import RoundingMode, round_half_up


def load_golden() -> dict:
    text = resources.files("fleetcap.data").joinpath("golden.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class CheckResult:
    name: str
    criterion: int
    source: str
    expected: Any
    actual: Any
    tolerance: float | None
    delta: float | None
    passed: bool

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        delta = "" if self.delta is None else f" delta={self.delta:.3g}"
        return f"[{verdict}] #{self.criterion} {self.name}: expected {self.expected}, actual {_show(self.actual)}{delta}"


def _show(value):
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(str(_show(v)) for v in value) + "]"
    return value


# ---------------------------------------------------------------------------
# computations, one per dataset; each returns ``check name -> actual``

def _lviv(d: dict) -> dict:
    record = BalanceRecord(**d["record"])
    record.validate()
    legacy = rep.legacy_coefficients(record)
    mean = rep.mean_base_coefficients(record)
    return {
        "renewal_legacy": legacy.renewal,
        "retirement_legacy": legacy.retirement,
        "renewal_mean_base": mean.renewal,
        "retirement_mean_base": mean.retirement,
        "liquidation_mean_base": mean.liquidation,
    }


def _reproduction(d: dict) -> dict:
    return {"reproduction_coefficients": [rep.reproduction_coefficient(a, b) for a, b in d["pairs"]]}


def _indexation(d: dict) -> dict:
    transport = rep.chain_indices(d["transport_means_steps_percent"], percent=True)
    assets = rep.chain_indices(d["asset_steps_percent"], percent=True)
    # the asset chain has a period without indexation; prices are quoted at indexation dates
    dated = [v for step, v in zip(d["asset_steps_percent"], assets.as_percent()) if step is not None]
    prices = d["price_at_indexation"]
    gaps = [rep.indexation_gap(prices[i], dated[j]) for i, j in d["gap_pairs"]]
    return {
        "transport_means_chain": list(transport.as_percent()),
        "asset_chain": list(assets.as_percent()),
        "indexation_gaps": gaps,
    }


def _vehicle(d: dict) -> dict:
    scenario = dep.scenario_from_mapping(d["scenario"])
    paper = RoundingMode.PAPER
    uni = dep.schedule(scenario, "uniform", paper)
    deg = dep.schedule(scenario, "degressive", paper)
    uni_x = dep.schedule(scenario, "uniform", RoundingMode.EXACT)
    deg_x = dep.schedule(scenario, "degressive", RoundingMode.EXACT)
    gap = max(
        abs(uni_x.discounted_sum - uni.discounted_sum) / uni.discounted_sum,
        abs(deg_x.discounted_sum - deg.discounted_sum) / deg.discounted_sum,
    )
    column = d["material_column"]
    uni_cost = dep.cost_per_km_table(scenario, "uniform", column, rounding=paper)
    deg_cost = dep.cost_per_km_table(scenario, "degressive", column, rounding=paper)
    v0 = scenario.initial_value
    return {
        "uniform_charges": list(uni.charges),
        "uniform_total": uni.nominal_sum,
        "degressive_charges": list(deg.charges),
        "discounted_sums": [uni.discounted_sum, deg.discounted_sum],
        "exact_mode_relative_gap": gap,
        "ndv_uniform": dep.net_discounted_value(scenario, uni, rounding=paper),
        "discounted_share": 100.0 * uni.discounted_sum / v0,
        "nominal_share": 100.0 * uni.nominal_sum / v0,
        "uniform_cost_totals": [r.total for r in uni_cost],
        "degressive_cost_totals": [r.total for r in deg_cost],
        "uniform_loads": [r.amortization_load for r in uni_cost],
        "degressive_loads": [r.amortization_load for r in deg_cost],
    }


def _transport_work(d: dict) -> dict:
    return {
        "adjusted_transport_work": [
            prod.adjusted_transport_work(*s, rounding=RoundingMode.PAPER) for s in d["shipments"]
        ]
    }


def _path_from_ratios(full: list[float], marginal: list[float | None]) -> list[tuple[float, float]]:
    """Rebuild an (output, fund) path, fund normalized to 1 in the first year,
    that has exactly the given full and marginal productivities."""
    fund = [1.0]
    for f0, f1, df in zip(full, full[1:], marginal[1:]):
        fund.append(fund[-1] * (f0 - df) / (f1 - df))
    return [(f * phi, phi) for f, phi in zip(full, fund)]


def _fondovidacha(d: dict) -> dict:
    full, marginal = d["full"], d["marginal"]
    ks = [df / f1 for df, f1 in zip(marginal[1:], full[1:])]
    path = _path_from_ratios(full, marginal)
    verdicts = []
    for (p0, phi0), (p1, phi1) in zip(path, path[1:]):
        a = prod.efficiency_assessment(p0, p1, phi0, phi1)
        verdicts.append(f"{a.quadrant.value} {a.verdict.value}")
    return {"efficiency_coefficients": ks, "quadrant_verdicts": verdicts}


def _regression(d: dict) -> dict:
    region = eco.RegressionModel.from_coefficients("parabola", d["region_parabola"])
    lviv = eco.RegressionModel.from_coefficients("parabola", d["lviv_parabola"])
    linear = eco.RegressionModel.from_coefficients("linear", d["ivano_frankivsk_linear"])
    b, err = d["region_slope_error"]
    return {
        "region_extremum": eco.parabola_extremum(region),
        "lviv_extremum": eco.parabola_extremum(lviv),
        "slope_interval": list(eco.slope_confidence(b, err)),
        "marginal_effect": eco.marginal_effect(linear, d["step"])[0],
    }


def solve_normal_equations(design: list[list[float]], y: list[float]) -> list[float]:
    """Brute-force least squares: form X'X and X'y and run Gaussian elimination."""
    p = len(design[0])
    a = [[math.fsum(row[i] * row[j] for row in design) for j in range(p)] for i in range(p)]
    b = [math.fsum(row[i] * v for row, v in zip(design, y)) for i in range(p)]
    for col in range(p):
        pivot = max(range(col, p), key=lambda r: abs(a[r][col]))
        a[col], a[pivot] = a[pivot], a[col]
        b[col], b[pivot] = b[pivot], b[col]
        for r in range(col + 1, p):
            factor = a[r][col] / a[col][col]
            for c in range(col, p):
                a[r][c] -= factor * a[col][c]
            b[r] -= factor * b[col]
    coef = [0.0] * p
    for r in reversed(range(p)):
        coef[r] = (b[r] - math.fsum(a[r][c] * coef[c] for c in range(r + 1, p))) / a[r][r]
    return coef


def _rel_err(got, want) -> float:
    got, want = np.asarray(got), np.asarray(want)
    return float(np.linalg.norm(got - want) / max(np.linalg.norm(want), 1e-300))


def _oracle(d: dict) -> dict:
    rng = np.random.default_rng(d["seed"])
    worst = 0.0
    eta_gap = 0.0
    for _ in range(d["samples"]):
        n = int(rng.integers(8, 40))
        x = rng.uniform(0.0, 1.0, size=(n, 3))
        beta = rng.normal(size=4)
        y = beta[0] + x @ beta[1:] + rng.normal(scale=0.3, size=n)
        s1 = eco.Sample(x[:, 0], y)
        lin = eco.fit_linear(s1)
        par = eco.fit_parabola(s1)
        mul = eco.fit_multilinear(eco.Sample(x, y))
        rows1 = [[1.0, v] for v in x[:, 0]]
        rows2 = [[1.0, v, v * v] for v in x[:, 0]]
        rows3 = [[1.0, *r] for r in x]
        yl = list(y)
        worst = max(
            worst,
            _rel_err(lin.coefficients, solve_normal_equations(rows1, yl)),
            _rel_err(par.coefficients, solve_normal_equations(rows2, yl)),
            _rel_err(mul.coefficients, solve_normal_equations(rows3, yl)),
        )
        eta_gap = max(eta_gap, abs(lin.correlation_ratio - abs(lin.pearson_r)))

    grid = np.linspace(0.0, 0.99, 100)
    monotone = all(
        eco.f_statistic(r0, n, k) < eco.f_statistic(r1, n, k)
        for n, k in ((10, 1), (30, 2), (97, 3))
        for r0, r1 in zip(grid, grid[1:])
    )

    flat = eco.Sample(np.full((6, 1), 0.4), np.linspace(0.5, 1.0, 6))
    model = eco.RegressionModel.from_coefficients("linear", [0.1, 0.7])
    degenerate = [eco.reserve_estimate(flat, model, m).total for m in eco.ReserveMode]

    ordered = True
    for _ in range(d["reserve_samples"]):
        n = int(rng.integers(5, 30))
        x = rng.uniform(0.0, 1.0, size=(n, 3))
        y = rng.uniform(0.2, 1.0, size=n)
        m = eco.RegressionModel.from_coefficients("multilinear", rng.normal(size=4))
        s = eco.Sample(x, y)
        lo = eco.reserve_estimate(s, m, "minimal").total
        mid = eco.reserve_estimate(s, m, "optimal").total
        ordered &= mid >= lo - 1e-12

    hand = eco.Sample(np.array([0.0, 2.0]), np.array([1.0, 3.0]))
    unit = eco.RegressionModel.from_coefficients("linear", [0.0, 1.0])
    hand_totals = [eco.reserve_estimate(hand, unit, m).total for m in eco.ReserveMode]
    return {
        "oracle_max_relative_error": worst,
        "eta_minus_abs_r": eta_gap,
        "f_monotone": monotone,
        "reserve_degenerate_zero": degenerate,
        "reserve_optimal_ge_minimal": bool(ordered),
        "reserve_hand_example": hand_totals,
    }


def _forecast(d: dict) -> dict:
    a, b, amp = d["intercept"], d["slope"], d["amplitude"]

    def generator(t):
        return a + b * t + amp * math.sin(math.pi * t / 2)

    series = fc.QuarterSeries.from_values([generator(t) for t in range(1, d["quarters"] + 1)])
    model = fc.fit_forecast_model(series, degree=1)
    rows = fc.compose_and_forecast(model, d["horizon"])
    err = max(abs(r.forecast - generator(r.t)) / abs(generator(r.t)) for r in rows)
    return {
        "forecast_slope": model.trend.coefficients[1],
        "forecast_amplitude": model.amplitude,
        "forecast_relative_error": err,
    }


COMPUTATIONS: dict[str, Callable[[dict], dict]] = {
    "lviv_balance": _lviv,
    "reproduction_pairs": _reproduction,
    "indexation": _indexation,
    "vehicle": _vehicle,
    "transport_work": _transport_work,
    "fondovidacha_series": _fondovidacha,
    "regression_coefficients": _regression,
    "oracle": _oracle,
    "forecast_generator": _forecast,
}


def _compare(expected, actual, tolerance, decimals) -> tuple[float | None, bool]:
    if isinstance(expected, (bool, str)) or (
        isinstance(expected, list) and expected and isinstance(expected[0], str)
    ):
        return None, expected == actual
    exp = np.atleast_1d(np.asarray(expected, dtype=float))
    act = [float(v) for v in np.atleast_1d(np.asarray(actual, dtype=float))]
    if len(act) != len(exp):
        return None, False
    if decimals is not None:
        act = [round_half_up(v, decimals) for v in act]
    delta = float(np.max(np.abs(np.asarray(act) - exp)))
    # allow for binary representation of the decimal expectations
    slack = 1e-9 * max(1.0, float(np.max(np.abs(exp))))
    return delta, bool(delta <= tolerance + slack)


def golden_suite(data: dict | None = None, *, criteria: set[int] | None = None) -> list[CheckResult]:
    data = copy.deepcopy(data) if data is not None else load_golden()
    datasets = data["datasets"]
    wanted = [c for c in data["checks"] if criteria is None or c["criterion"] in criteria]
    actuals: dict[str, dict] = {}
    results = []
    for check in wanted:
        name = check["dataset"]
        if name not in actuals:
            try:
                actuals[name] = COMPUTATIONS[name](datasets[name])
            except FleetcapError as exc:
                actuals[name] = exc
        tolerance = check.get("tolerance")
        if isinstance(actuals[name], FleetcapError):
            actual, delta, passed = f"error: {actuals[name]}", None, False
        else:
            actual = actuals[name][check["name"]]
            delta, passed = _compare(check["expected"], actual, tolerance or 0.0, check.get("decimals"))
        results.append(
            CheckResult(
                name=check["name"],
                criterion=check["criterion"],
                source=datasets[name].get("source", name),
                expected=check["expected"],
                actual=actual,
                tolerance=tolerance,
                delta=delta,
                passed=passed,
            )
        )
    return results
