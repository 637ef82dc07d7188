"""Mileage-based depreciation schedules, discounting and per-km cost.

Charges are proportional to distance run: a base rate is quoted in percent of
the initial value per 1000 km.  The uniform method applies it to the initial
value every period; the degressive method multiplies it by an acceleration
factor and applies it to the residual value.

Two rounding modes exist.  ``paper`` rounds charges and per-period present
values to cents and discount factors to three decimals (half-up), which is how
published schedules are computed by hand.  ``exact`` keeps full precision.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DegenerateInputError, ParseError, ValidationError
from .rounding import RoundingMode, as_mode, round_half_up

LOSS_ZONE_THRESHOLD_KM = 300_000.0


class Method(str, enum.Enum):
    UNIFORM = "uniform"
    DEGRESSIVE = "degressive"


class MileageAnchor(str, enum.Enum):
    START = "start"
    MID = "mid"
    END = "end"


class ProfitZone(str, enum.Enum):
    NORMAL = "normal"
    LOSS_ZONE = "loss_zone"


@dataclass(frozen=True)
class VehicleScenario:
    initial_value: float
    base_rate: float  # percent of initial value per 1000 km
    mileages: tuple[float, ...]  # km per period
    acceleration: float = 1.0
    discount_rate: float = 0.0
    liquidation_value: float = 0.0
    side_gains: tuple[float, ...] = ()
    material_base: float = 0.0  # cost per km of a new vehicle
    cost_slope: float = 0.1
    fixed_cost: float = 0.0  # per km
    material_column: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "mileages", tuple(float(m) for m in self.mileages))
        object.__setattr__(self, "side_gains", tuple(float(e) for e in self.side_gains))
        if self.material_column is not None:
            object.__setattr__(self, "material_column", tuple(float(v) for v in self.material_column))
        if not self.initial_value > 0:
            raise ValidationError("initial_value must be positive")
        if not self.base_rate > 0:
            raise ValidationError("base_rate must be positive")
        if not self.acceleration >= 1:
            raise ValidationError("acceleration must be >= 1")
        if any(m < 0 for m in self.mileages):
            raise ValidationError("mileages must be non-negative")
        if not self.discount_rate >= 0:
            raise ValidationError("discount_rate must be >= 0")
        if not self.cost_slope > 0:
            raise ValidationError("cost_slope must be positive")
        if self.liquidation_value < 0:
            raise ValidationError("liquidation_value must be non-negative")
        if self.side_gains and len(self.side_gains) != len(self.mileages):
            raise ValidationError("side_gains must have one entry per period")
        if self.material_column is not None and len(self.material_column) != len(self.mileages):
            raise ValidationError("material_column must have one entry per period")

    @property
    def periods(self) -> int:
        return len(self.mileages)

    def gains(self) -> tuple[float, ...]:
        return self.side_gains or (0.0,) * self.periods


@dataclass(frozen=True)
class DepreciationSchedule:
    method: Method
    mileages: tuple[float, ...]
    charges: tuple[float, ...]
    residuals: tuple[float, ...]
    discount_factors: tuple[float, ...]
    present_values: tuple[float, ...]
    rounding: RoundingMode
    # first period whose charge was cut to keep the residual at zero
    capped_at: int | None = None
    initial_value: float = field(default=0.0)

    @property
    def nominal_sum(self) -> float:
        total = math.fsum(self.charges)
        return round_half_up(total, 2) if self.rounding is RoundingMode.PAPER else total

    @property
    def discounted_sum(self) -> float:
        total = math.fsum(self.present_values)
        return round_half_up(total, 2) if self.rounding is RoundingMode.PAPER else total

    def amortized_fraction(self, upto_km: float) -> float:
        """Share of the initial value charged before cumulative mileage passes ``upto_km``."""
        run = 0.0
        charged = 0.0
        for km, charge in zip(self.mileages, self.charges):
            if run + km > upto_km:
                break
            run += km
            charged += charge
        return charged / self.initial_value


def uniform_charge(initial_value: float, base_rate: float, mileage: float) -> float:
    return initial_value * base_rate / 100.0 * mileage / 1000.0


def discount_factor(rate: float, period: int, rounding: RoundingMode | str = RoundingMode.EXACT) -> float:
    if rate < 0:
        raise ValidationError("discount rate must be >= 0")
    if period < 1 or int(period) != period:
        raise ValidationError("period must be a positive integer")
    factor = 1.0 / (1.0 + rate) ** period
    return round_half_up(factor, 3) if as_mode(rounding) is RoundingMode.PAPER else factor


def _discounting(charges: Sequence[float], rate: float, mode: RoundingMode):
    factors = [discount_factor(rate, t, mode) for t in range(1, len(charges) + 1)]
    pvs = [a * v for a, v in zip(charges, factors)]
    if mode is RoundingMode.PAPER:
        pvs = [round_half_up(pv, 2) for pv in pvs]
    return tuple(factors), tuple(pvs)


def _schedule(scenario: VehicleScenario, method: Method, mode: RoundingMode) -> DepreciationSchedule:
    residual = scenario.initial_value
    charges, residuals = [], []
    capped_at = None
    for t, km in enumerate(scenario.mileages, start=1):
        if method is Method.UNIFORM:
            charge = uniform_charge(scenario.initial_value, scenario.base_rate, km)
        else:
            charge = residual * scenario.acceleration * scenario.base_rate / 100.0 * km / 1000.0
        if mode is RoundingMode.PAPER:
            charge = round_half_up(charge, 2)
        if charge > residual:
            charge = residual
            if capped_at is None:
                capped_at = t
        residual = residual - charge
        if mode is RoundingMode.PAPER:
            residual = round_half_up(residual, 2)
        charges.append(charge)
        residuals.append(residual)
    factors, pvs = _discounting(charges, scenario.discount_rate, mode)
    return DepreciationSchedule(
        method=method,
        mileages=scenario.mileages,
        charges=tuple(charges),
        residuals=tuple(residuals),
        discount_factors=factors,
        present_values=pvs,
        rounding=mode,
        capped_at=capped_at,
        initial_value=scenario.initial_value,
    )


def uniform_schedule(
    scenario: VehicleScenario, rounding: RoundingMode | str = RoundingMode.EXACT
) -> DepreciationSchedule:
    return _schedule(scenario, Method.UNIFORM, as_mode(rounding))


def degressive_schedule(
    scenario: VehicleScenario, rounding: RoundingMode | str = RoundingMode.EXACT
) -> DepreciationSchedule:
    """Accelerated charges on the declining residual.

    A charge that would push the residual below zero is cut to the remaining
    residual; ``capped_at`` records the first such period.
    """
    return _schedule(scenario, Method.DEGRESSIVE, as_mode(rounding))


def schedule(
    scenario: VehicleScenario,
    method: Method | str,
    rounding: RoundingMode | str = RoundingMode.EXACT,
) -> DepreciationSchedule:
    return _schedule(scenario, Method(method), as_mode(rounding))


def present_value(
    sched: DepreciationSchedule, rate: float, rounding: RoundingMode | str = RoundingMode.EXACT
) -> float:
    mode = as_mode(rounding)
    _, pvs = _discounting(sched.charges, rate, mode)
    total = math.fsum(pvs)
    return round_half_up(total, 2) if mode is RoundingMode.PAPER else total


def net_discounted_value(
    scenario: VehicleScenario,
    sched: DepreciationSchedule,
    *,
    salvage_as_inflow: bool = False,
    rounding: RoundingMode | str = RoundingMode.EXACT,
) -> float:
    """Discounted charges plus side gains, less the initial value and discounted salvage.

    By default the liquidation value sits inside the subtracted bracket as
    written in the source formula; ``salvage_as_inflow`` adds it instead, which
    is the conventional treatment of salvage.  Zero is the break-even point for
    simple reproduction of the vehicle.
    """
    mode = as_mode(rounding)
    gains = scenario.gains()
    if len(gains) != len(sched.charges):
        raise ValidationError("side gains are not aligned with the schedule")
    rate = scenario.discount_rate
    periods = len(sched.charges)
    factors = [discount_factor(rate, t, mode) for t in range(1, periods + 1)]
    flows = [(a + e) * v for a, e, v in zip(sched.charges, gains, factors)]
    if mode is RoundingMode.PAPER:
        flows = [round_half_up(f, 2) for f in flows]
    salvage = scenario.liquidation_value * (factors[-1] if periods else 1.0)
    inflow = math.fsum(flows)
    if salvage_as_inflow:
        value = inflow + salvage - scenario.initial_value
    else:
        value = inflow - (scenario.initial_value + salvage)
    return round_half_up(value, 2) if mode is RoundingMode.PAPER else value


def material_cost(material_base: float, cost_slope: float, cumulative_km: float) -> float:
    """Material cost per km after ``cumulative_km`` of service (exponential wear model)."""
    if cumulative_km < 0:
        raise ValidationError("cumulative mileage must be non-negative")
    return material_base * math.exp(cost_slope * cumulative_km / 100_000.0)


@dataclass(frozen=True)
class CostRow:
    period: int
    mileage: float
    material: float
    amortization_load: float
    total: float


def cost_per_km_table(
    scenario: VehicleScenario,
    method: Method | str = Method.UNIFORM,
    material_column: Sequence[float] | None = None,
    *,
    anchor: MileageAnchor | str = MileageAnchor.START,
    subunits: float = 100.0,
    rounding: RoundingMode | str = RoundingMode.EXACT,
) -> list[CostRow]:
    """Per-km cost split into material, amortization load and fixed part.

    Material and fixed costs are in currency subunits per km (kopecks, cents);
    the amortization load is converted with ``subunits`` per currency unit.
    Explicit ``material_column`` values (or the scenario's own column) win
    over the exponential model, which is evaluated at the cumulative mileage
    at the start, middle or end of each period.
    """
    mode = as_mode(rounding)
    sched = schedule(scenario, method, mode)
    column = material_column if material_column is not None else scenario.material_column
    if column is not None and len(column) != scenario.periods:
        raise ValidationError("material column must have one value per period")
    anchor = MileageAnchor(anchor)

    rows = []
    run = 0.0
    for t, (km, charge) in enumerate(zip(scenario.mileages, sched.charges), start=1):
        if km <= 0:
            raise DegenerateInputError(f"period {t} has zero mileage; per-km cost undefined")
        if column is not None:
            material = float(column[t - 1])
        else:
            at = {MileageAnchor.START: run, MileageAnchor.MID: run + km / 2, MileageAnchor.END: run + km}[anchor]
            material = material_cost(scenario.material_base, scenario.cost_slope, at)
        load = subunits * charge / km
        if mode is RoundingMode.PAPER:
            material = round_half_up(material, 2)
            load = round_half_up(load, 2)
        total = material + load + scenario.fixed_cost
        if mode is RoundingMode.PAPER:
            total = round_half_up(total, 2)
        rows.append(CostRow(t, km, material, load, total))
        run += km
    return rows


def profitability_zone(cumulative_km: float, threshold_km: float = LOSS_ZONE_THRESHOLD_KM) -> ProfitZone:
    if not threshold_km > 0:
        raise ValidationError("threshold must be positive")
    return ProfitZone.LOSS_ZONE if cumulative_km > threshold_km else ProfitZone.NORMAL


def sum_of_years_digits(initial_value: float, years: int, liquidation_value: float = 0.0) -> list[float]:
    """Annual charges of the cumulative (sum-of-years-digits) method; not mileage based."""
    if years < 1:
        raise ValidationError("years must be >= 1")
    base = initial_value - liquidation_value
    if base < 0:
        raise ValidationError("liquidation value exceeds initial value")
    digits = years * (years + 1) / 2
    return [base * (years - i) / digits for i in range(years)]


def annual_rate_schedule(initial_value: float, annual_rate: float, years: int) -> list[float]:
    """Straight annual-percentage charges, capped at the initial value."""
    residual = initial_value
    charges = []
    for _ in range(years):
        charge = min(residual, initial_value * annual_rate / 100.0)
        residual -= charge
        charges.append(charge)
    return charges


# ---------------------------------------------------------------------------
# I/O

_LIST_FIELDS = ("mileages", "side_gains", "material_column")


def scenario_from_mapping(data: dict) -> VehicleScenario:
    known = set(VehicleScenario.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown scenario fields {sorted(unknown)}")
    for required in ("initial_value", "base_rate", "mileages"):
        if required not in data:
            raise ValidationError(f"scenario lacks {required!r}")
    kwargs = dict(data)
    for name in _LIST_FIELDS:
        if name in kwargs and kwargs[name] is not None:
            kwargs[name] = tuple(float(v) for v in kwargs[name])
    return VehicleScenario(**kwargs)


def parse_scenario(text: str, fmt: str = "json") -> VehicleScenario:
    """Read a scenario from JSON or from ``field,value`` CSV (list values separated by ``;``)."""
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
        if not isinstance(data, dict):
            raise ParseError("scenario JSON must be an object", line=1)
        return scenario_from_mapping(data)

    reader = csv.reader(io.StringIO(text))
    data: dict = {}
    for lineno, row in enumerate(reader, start=1):
        if not row or row[0].strip().startswith("#"):
            continue
        if lineno == 1 and [c.strip() for c in row] == ["field", "value"]:
            continue
        if len(row) != 2:
            raise ParseError("expected field,value", line=lineno)
        key, raw = row[0].strip(), row[1].strip()
        try:
            if key in _LIST_FIELDS:
                data[key] = [float(v) for v in raw.split(";") if v.strip()]
            else:
                data[key] = float(raw)
        except ValueError:
            raise ParseError(f"non-numeric value for {key!r}", line=lineno) from None
    return scenario_from_mapping(data)


def _num(value: float, mode: RoundingMode) -> str:
    if mode is RoundingMode.PAPER:
        return f"{value:.2f}"
    return repr(float(value))


def format_schedule(sched: DepreciationSchedule) -> str:
    mode = sched.rounding
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["period", "mileage", "charge", "residual", "factor", "present_value"])
    for t, (km, a, res, v, pv) in enumerate(
        zip(sched.mileages, sched.charges, sched.residuals, sched.discount_factors, sched.present_values),
        start=1,
    ):
        factor = f"{v:.3f}" if mode is RoundingMode.PAPER else repr(v)
        writer.writerow([t, repr(km), _num(a, mode), _num(res, mode), factor, _num(pv, mode)])
    writer.writerow(
        ["total", repr(math.fsum(sched.mileages)), _num(sched.nominal_sum, mode), "", "",
         _num(sched.discounted_sum, mode)]
    )
    return out.getvalue()


def format_cost_table(rows: Sequence[CostRow], mode: RoundingMode | str = RoundingMode.EXACT) -> str:
    mode = as_mode(mode)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["period", "mileage", "material", "amortization_load", "total"])
    for r in rows:
        writer.writerow([r.period, repr(r.mileage), _num(r.material, mode), _num(r.amortization_load, mode),
                         _num(r.total, mode)])
    return out.getvalue()
