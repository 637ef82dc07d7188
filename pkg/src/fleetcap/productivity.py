"""Transport work, fondovidacha (capital productivity) and utilization metrics."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Sequence

from .errors import DegenerateInputError, ParseError, UndefinedRatioError, ValidationError
from .rounding import RoundingMode, as_mode, round_sig


def adjusted_transport_work(
    tons: float,
    distance: float,
    t_norm: float,
    t_fact: float,
    rounding: RoundingMode | str = RoundingMode.EXACT,
) -> float:
    """Tonne-km scaled by how well the normed delivery time was met.

    Finishing faster than the norm (``t_fact < t_norm``) inflates the credited
    work; running late deflates it.  In paper mode the time coefficient is
    rounded to four significant figures before multiplying, as hand tables do.
    """
    if t_fact == 0:
        raise DegenerateInputError("actual time is zero")
    if min(tons, distance, t_norm, t_fact) <= 0:
        raise ValidationError("tons, distance and times must be positive")
    coefficient = t_norm / t_fact
    if as_mode(rounding) is RoundingMode.PAPER:
        coefficient = round_sig(coefficient, 4)
    return tons * distance * coefficient


def total_adjusted_transport_work(
    shipments: Iterable[tuple[float, float, float, float]],
    rounding: RoundingMode | str = RoundingMode.EXACT,
) -> float:
    return math.fsum(adjusted_transport_work(*s, rounding=rounding) for s in shipments)


def fondovidacha(transport_work: float, fund_value: float) -> float:
    """Full capital productivity: output per unit of mean annual fund value."""
    if fund_value == 0:
        raise DegenerateInputError("fund value is zero")
    return transport_work / fund_value


def marginal_fondovidacha(p0: float, p1: float, fund0: float, fund1: float) -> float:
    if fund1 == fund0:
        raise UndefinedRatioError("fund value unchanged: marginal productivity undefined")
    return (p1 - p0) / (fund1 - fund0)


class Quadrant(str, enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    BOUNDARY = "boundary"


class Verdict(str, enum.Enum):
    IMPROVED = "improved"
    WORSENED = "worsened"
    UNCHANGED = "unchanged"


@dataclass(frozen=True)
class EfficiencyAssessment:
    full: float
    marginal: float
    K: float
    quadrant: Quadrant
    verdict: Verdict
    index_form: float  # (I_p - 1) / (I_fund - 1), kept as a diagnostic only

    @property
    def k_infinite(self) -> bool:
        return math.isinf(self.K)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["quadrant"] = self.quadrant.value
        d["verdict"] = self.verdict.value
        return d


def _sign(x: float) -> int:
    return (x > 0) - (x < 0)


def _verdict(dp: float, dfund: float, k: float) -> tuple[Quadrant, Verdict]:
    sp, sf = _sign(dp), _sign(dfund)
    if sp > 0 and sf > 0:
        if k == 1:
            return Quadrant.I, Verdict.UNCHANGED
        return Quadrant.I, Verdict.IMPROVED if k > 1 else Verdict.WORSENED
    if sp > 0 and sf < 0:
        return Quadrant.II, Verdict.IMPROVED
    if sp < 0 and sf < 0:
        if k == 1:
            return Quadrant.III, Verdict.UNCHANGED
        return Quadrant.III, Verdict.IMPROVED if k < 1 else Verdict.WORSENED
    if sp < 0 and sf > 0:
        return Quadrant.IV, Verdict.WORSENED
    # at least one delta is zero
    if sp == 0 and sf == 0:
        return Quadrant.BOUNDARY, Verdict.UNCHANGED
    if sp > 0 or sf < 0:
        return Quadrant.BOUNDARY, Verdict.IMPROVED
    return Quadrant.BOUNDARY, Verdict.WORSENED


def efficiency_assessment(p0: float, p1: float, fund0: float, fund1: float) -> EfficiencyAssessment:
    """Marginal over full productivity, placed on the (dP, dFund) sign plane.

    K is taken against the current period, K = dP*Fund1 / (dFund*P1).
    Output falling faster than assets (quadrant III with K > 1) is a
    worsening even though both move the same way.
    """
    if min(fund0, fund1, p1) <= 0:
        raise ValidationError("fund values and current transport work must be positive")
    dp, dfund = p1 - p0, fund1 - fund0
    full = p1 / fund1
    if dfund != 0:
        marginal = dp / dfund
        k = (dp * fund1) / (dfund * p1)
    elif dp != 0:
        marginal = math.copysign(math.inf, dp)
        k = math.copysign(math.inf, dp)
    else:
        marginal = k = math.nan
    if fund1 != fund0:
        index_form = (dp / p0) / (dfund / fund0) if p0 != 0 else math.nan
    else:
        index_form = math.nan
    quadrant, verdict = _verdict(dp, dfund, k)
    return EfficiencyAssessment(full, marginal, k, quadrant, verdict, index_form)


def efficiency_coefficient(marginal: float, full: float) -> float:
    if full == 0:
        raise DegenerateInputError("full productivity is zero")
    return marginal / full


def tonne_day_utilization(tonne_days_in_work: float, tonne_days_total: float) -> float:
    if tonne_days_total == 0:
        raise DegenerateInputError("total vehicle-tonne-days is zero")
    if not 0 <= tonne_days_in_work <= tonne_days_total:
        raise ValidationError("tonne-days in work must lie between 0 and the total")
    return tonne_days_in_work / tonne_days_total


def mileage_utilization(loaded_km: float, total_km: float) -> float:
    if total_km == 0:
        raise DegenerateInputError("total mileage is zero")
    if not 0 <= loaded_km <= total_km:
        raise ValidationError("loaded mileage must lie between 0 and the total")
    return loaded_km / total_km


# ---------------------------------------------------------------------------
# observations and band reports

@dataclass(frozen=True)
class FleetObservation:
    enterprise_id: str
    year: int
    transport_work: float
    tons_carried: float
    revenue: float
    profit: float
    fund_value: float
    transport_means_value: float
    tonne_days_in_work: float
    tonne_days_total: float
    loaded_km: float
    total_km: float
    listed_tonnage: float
    ownership: str = ""

    def __post_init__(self):
        label = f"observation {self.enterprise_id}/{self.year}"
        for f in fields(self):
            value = getattr(self, f.name)
            # profit may legitimately be negative
            if f.type == "float" and f.name != "profit" and value < 0:
                raise ValidationError(f"{label}: {f.name} is negative")
        if self.tonne_days_in_work > self.tonne_days_total:
            raise ValidationError(f"{label}: tonne-days in work exceed total")
        if self.loaded_km > self.total_km:
            raise ValidationError(f"{label}: loaded km exceed total km")


RATIO_FIELDS = (
    "tkm_per_currency",
    "tons_per_currency",
    "revenue_per_currency",
    "profit_per_currency",
    "tons_per_tonne",
    "tkm_per_tonne",
)


def _ratio(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


def derived_ratios(obs: FleetObservation) -> dict[str, float | None]:
    """Per-fund-value and per-listed-tonne ratios; ``None`` where a denominator is zero."""
    return {
        "tkm_per_currency": _ratio(obs.transport_work, obs.fund_value),
        "tons_per_currency": _ratio(obs.tons_carried, obs.fund_value),
        "revenue_per_currency": _ratio(obs.revenue, obs.fund_value),
        "profit_per_currency": _ratio(obs.profit, obs.fund_value),
        "tons_per_tonne": _ratio(obs.tons_carried, obs.listed_tonnage),
        "tkm_per_tonne": _ratio(obs.transport_work, obs.listed_tonnage),
    }


FACTORS: dict[str, Callable[[FleetObservation], float | None]] = {
    "tonne_day_utilization": lambda o: _ratio(o.tonne_days_in_work, o.tonne_days_total),
    "mileage_utilization": lambda o: _ratio(o.loaded_km, o.total_km),
    "tkm_per_tonne": lambda o: _ratio(o.transport_work, o.listed_tonnage),
}


@dataclass(frozen=True)
class BandRow:
    label: str
    count: int
    ratios: dict[str, float | None]


def _band_labels(edges: Sequence[float]) -> list[str]:
    labels = [f"<= {edges[0]:g}"]
    labels += [f"{lo:g} - {hi:g}" for lo, hi in zip(edges, edges[1:])]
    labels.append(f"> {edges[-1]:g}")
    return labels


def band_report(
    observations: Sequence[FleetObservation],
    factor: str | Callable[[FleetObservation], float | None],
    edges: Sequence[float],
    *,
    labels: Sequence[str] | None = None,
    where: Callable[[FleetObservation], bool] | None = None,
) -> list[BandRow]:
    """Group enterprises into factor bands and aggregate each band as a ratio of sums.

    Band ``i`` holds values in ``(edges[i-1], edges[i]]``; the first band is
    open below and the last open above.  A final ``all`` row aggregates every
    selected observation.  Observations whose factor is undefined are skipped.
    """
    edges = list(edges)
    if not edges or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValidationError("band edges must be a non-empty increasing sequence")
    labels = list(labels) if labels is not None else _band_labels(edges)
    if len(labels) != len(edges) + 1:
        raise ValidationError("need one label per band")
    key = FACTORS[factor] if isinstance(factor, str) else factor

    selected = [o for o in observations if where is None or where(o)]
    bands: list[list[FleetObservation]] = [[] for _ in labels]
    for obs in selected:
        value = key(obs)
        if value is None:
            continue
        i = sum(value > e for e in edges)
        bands[i].append(obs)

    def aggregate(group: list[FleetObservation]) -> dict[str, float | None]:
        def s(name: str) -> float:
            return math.fsum(getattr(o, name) for o in group)

        fund, tonnage = s("fund_value"), s("listed_tonnage")
        return {
            "tkm_per_currency": _ratio(s("transport_work"), fund),
            "tons_per_currency": _ratio(s("tons_carried"), fund),
            "revenue_per_currency": _ratio(s("revenue"), fund),
            "profit_per_currency": _ratio(s("profit"), fund),
            "tons_per_tonne": _ratio(s("tons_carried"), tonnage),
            "tkm_per_tonne": _ratio(s("transport_work"), tonnage),
        }

    rows = [BandRow(label, len(group), aggregate(group)) for label, group in zip(labels, bands)]
    rows.append(BandRow("all", sum(len(b) for b in bands), aggregate([o for b in bands for o in b])))
    return rows


OBSERVATION_FIELDS = tuple(f.name for f in fields(FleetObservation))


def parse_observations(text: str) -> list[FleetObservation]:
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in reader.fieldnames or ()]
    missing = [n for n in OBSERVATION_FIELDS if n != "ownership" and n not in header]
    if missing:
        raise ParseError(f"observation header lacks {missing}", line=1)
    reader.fieldnames = header
    out = []
    for row in reader:
        line = reader.line_num
        try:
            kwargs = {}
            for f in fields(FleetObservation):
                raw = row.get(f.name)
                if f.name == "ownership":
                    kwargs[f.name] = (raw or "").strip()
                elif raw is None:
                    raise ParseError("wrong number of columns", line=line)
                elif f.name == "enterprise_id":
                    kwargs[f.name] = raw.strip()
                elif f.name == "year":
                    kwargs[f.name] = int(raw)
                else:
                    kwargs[f.name] = float(raw)
        except ValueError as exc:
            raise ParseError(f"non-numeric value ({exc})", line=line) from None
        try:
            out.append(FleetObservation(**kwargs))
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
    return out


def _cell(v: float | None) -> str:
    return "" if v is None else repr(float(v))


def format_band_report(rows: Sequence[BandRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["band", "count", *RATIO_FIELDS])
    for r in rows:
        writer.writerow([r.label, r.count, *(_cell(r.ratios[k]) for k in RATIO_FIELDS)])
    return out.getvalue()


def format_observation_report(observations: Sequence[FleetObservation]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["enterprise_id", "year", "tonne_day_utilization", "mileage_utilization", *RATIO_FIELDS])
    for o in observations:
        ratios = derived_ratios(o)
        writer.writerow([
            o.enterprise_id,
            o.year,
            _cell(FACTORS["tonne_day_utilization"](o)),
            _cell(FACTORS["mileage_utilization"](o)),
            *(_cell(ratios[k]) for k in RATIO_FIELDS),
        ])
    return out.getvalue()


def parse_productivity_series(text: str) -> list[tuple[str, float, float]]:
    """Read ``period,transport_work,fund_value`` rows for year-over-year assessment."""
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in reader.fieldnames or ()]
    for name in ("period", "transport_work", "fund_value"):
        if name not in header:
            raise ParseError(f"series header lacks {name!r}", line=1)
    reader.fieldnames = header
    rows = []
    for row in reader:
        try:
            rows.append((row["period"].strip(), float(row["transport_work"]), float(row["fund_value"])))
        except (TypeError, ValueError, AttributeError):
            raise ParseError("malformed series row", line=reader.line_num) from None
    return rows
