"""Renewal, retirement and reproduction coefficients; indexation chains."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from decimal import Decimal
from typing import NamedTuple, Sequence

from .errors import DegenerateInputError, ParseError, UndefinedRatioError, ValidationError
from .ledger import BalanceRecord

MEAN_BASE_NOTE = (
    "renewal, retirement and liquidation share one base: "
    "the mean annual value (value_begin + value_end) / 2"
)


class LegacyCoefficients(NamedTuple):
    renewal: float
    retirement: float


class MeanBaseCoefficients(NamedTuple):
    mean: float
    renewal: float
    retirement: float
    liquidation: float


def legacy_coefficients(record: BalanceRecord) -> LegacyCoefficients:
    """Renewal against the end-of-year value, retirement against the start-of-year value.

    The numerator of renewal is the newly commissioned part of the inflow;
    transfers of used assets are not renewal.
    """
    if record.value_end <= 0 or record.value_begin <= 0:
        raise DegenerateInputError(
            f"record {record.enterprise_id}/{record.period}: begin and end values must be positive"
        )
    return LegacyCoefficients(
        renewal=100.0 * record.inflow_new / record.value_end,
        retirement=100.0 * record.outflow_total / record.value_begin,
    )


def mean_base_coefficients(record: BalanceRecord) -> MeanBaseCoefficients:
    mean = (record.value_begin + record.value_end) / 2.0
    if mean <= 0:
        raise DegenerateInputError(
            f"record {record.enterprise_id}/{record.period}: mean annual value is zero"
        )
    return MeanBaseCoefficients(
        mean=mean,
        renewal=100.0 * record.inflow_new / mean,
        retirement=100.0 * record.outflow_total / mean,
        liquidation=100.0 * record.outflow_liquidated / mean,
    )


def reproduction_coefficient(inflow_new: float, outflow_liquidated: float) -> float:
    """New assets commissioned per 100 units of assets liquidated from wear.

    Below 100 the asset base is being eaten away.
    """
    if outflow_liquidated == 0:
        raise UndefinedRatioError("no liquidation in the period: reproduction coefficient undefined")
    if outflow_liquidated < 0 or inflow_new < 0:
        raise ValidationError("flows must be non-negative")
    return 100.0 * inflow_new / outflow_liquidated


@dataclass(frozen=True)
class ReproductionReport:
    enterprise_id: str
    period: int
    renewal_legacy: float
    retirement_legacy: float
    mean_annual_value: float
    renewal: float
    retirement: float
    liquidation: float
    reproduction: float | None
    note: str = MEAN_BASE_NOTE

    def to_dict(self) -> dict:
        return asdict(self)


def reproduction_report(record: BalanceRecord) -> ReproductionReport:
    legacy = legacy_coefficients(record)
    mean = mean_base_coefficients(record)
    note = MEAN_BASE_NOTE
    try:
        reproduction = reproduction_coefficient(record.inflow_new, record.outflow_liquidated)
    except UndefinedRatioError:
        reproduction = None
        note += "; no liquidation, reproduction undefined"
    return ReproductionReport(
        enterprise_id=record.enterprise_id,
        period=record.period,
        renewal_legacy=legacy.renewal,
        retirement_legacy=legacy.retirement,
        mean_annual_value=mean.mean,
        renewal=mean.renewal,
        retirement=mean.retirement,
        liquidation=mean.liquidation,
        reproduction=reproduction,
        note=note,
    )


# ---------------------------------------------------------------------------
# indexation

@dataclass(frozen=True)
class IndexChain:
    """Running product of growth multipliers.

    ``step_indices`` and ``cumulative`` are plain multipliers (18.0 means an
    eighteen-fold revaluation); :meth:`as_percent` gives the percent-of-base
    form used in published index tables (1800).
    """

    labels: tuple[str, ...]
    step_indices: tuple[float, ...]
    cumulative: tuple[float, ...]

    def as_percent(self) -> tuple[float, ...]:
        return tuple(float(Decimal(repr(c)) * 100) for c in self.cumulative)

    @property
    def last(self) -> float:
        return self.cumulative[-1]


def chain_indices(
    steps: Sequence[float | None],
    labels: Sequence[str] | None = None,
    *,
    percent: bool = False,
    start: float = 1.0,
) -> IndexChain:
    """Chain period growth indices into a cumulative index.

    ``None`` marks a period without indexation and carries the running value
    forward unchanged.  With ``percent=True`` the steps are read as 1800 for an
    eighteen-fold increase.  Products are formed in decimal arithmetic so that
    chains of short decimal steps come out exact.
    """
    if labels is None:
        labels = [str(i + 1) for i in range(len(steps))]
    if len(labels) != len(steps):
        raise ValidationError("labels and steps differ in length")
    scale = Decimal(100) if percent else Decimal(1)

    multipliers: list[Decimal] = []
    for label, step in zip(labels, steps):
        if step is None:
            multipliers.append(Decimal(1))
            continue
        if not step > 0:
            raise ValidationError(f"period {label}: index step must be positive, got {step}")
        multipliers.append(Decimal(repr(float(step))) / scale)

    running = Decimal(repr(float(start)))
    cumulative = []
    for m in multipliers:
        running *= m
        cumulative.append(float(running))
    return IndexChain(
        labels=tuple(str(l) for l in labels),
        step_indices=tuple(float(m) for m in multipliers),
        cumulative=tuple(cumulative),
    )


def indexation_gap(price_cumulative: float, asset_cumulative: float) -> float:
    """How many times cumulative price growth outran cumulative book-value growth."""
    if asset_cumulative == 0:
        raise DegenerateInputError("asset index is zero")
    if price_cumulative <= 0 or asset_cumulative < 0:
        raise ValidationError("indices must be positive")
    return price_cumulative / asset_cumulative


@dataclass(frozen=True)
class IndexTable:
    group: str
    periods: tuple[str, ...]
    price_steps: tuple[float | None, ...]
    asset_steps: tuple[float | None, ...]


def parse_index_table(text: str) -> list[IndexTable]:
    """Read ``period,price_step,asset_step[,group]`` rows; blank cells mean no indexation."""
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in reader.fieldnames or ()]
    for required in ("period", "price_step", "asset_step"):
        if required not in header:
            raise ParseError(f"index header lacks {required!r}", line=1)
    reader.fieldnames = header

    def cell(raw: str | None, line: int) -> float | None:
        if raw is None:
            raise ParseError("wrong number of columns", line=line)
        raw = raw.strip()
        if raw in ("", "-"):
            return None
        try:
            return float(raw)
        except ValueError:
            raise ParseError(f"non-numeric index {raw!r}", line=line) from None

    grouped: dict[str, list[tuple[str, float | None, float | None]]] = {}
    for row in reader:
        line = reader.line_num
        group = (row.get("group") or "all").strip() or "all"
        grouped.setdefault(group, []).append(
            (row["period"].strip(), cell(row["price_step"], line), cell(row["asset_step"], line))
        )
    return [
        IndexTable(
            group=g,
            periods=tuple(r[0] for r in rows),
            price_steps=tuple(r[1] for r in rows),
            asset_steps=tuple(r[2] for r in rows),
        )
        for g, rows in grouped.items()
    ]
