"""Asset balances, group registries and structure shares."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, fields
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DegenerateInputError, ParseError, ValidationError

BALANCE_TOLERANCE = 0.5
SHARE_TOLERANCE = 0.1


class Activity(str, enum.Enum):
    ACTIVE = "active"
    PASSIVE = "passive"


@dataclass(frozen=True)
class AssetGroup:
    code: str
    name: str
    activity: Activity


class GroupRegistry(Mapping[str, AssetGroup]):
    """Read-only mapping ``code -> AssetGroup`` loaded from a CSV registry."""

    def __init__(self, groups: Iterable[AssetGroup]):
        self._groups: dict[str, AssetGroup] = {}
        for group in groups:
            if group.code in self._groups:
                raise ValidationError(f"duplicate group code {group.code!r} in registry")
            self._groups[group.code] = group

    def __getitem__(self, code: str) -> AssetGroup:
        try:
            return self._groups[code]
        except KeyError:
            raise ValidationError(f"unknown asset group code {code!r}") from None

    def __iter__(self):
        return iter(self._groups)

    def __len__(self) -> int:
        return len(self._groups)

    def activity(self, code: str) -> Activity:
        return self[code].activity

    @classmethod
    def from_csv(cls, text: str) -> "GroupRegistry":
        reader = csv.DictReader(io.StringIO(text))
        missing = {"code", "name", "activity"} - set(reader.fieldnames or ())
        if missing:
            raise ParseError(f"registry header lacks {sorted(missing)}", line=1)
        groups = []
        for row in reader:
            try:
                activity = Activity(row["activity"].strip().lower())
            except ValueError:
                raise ParseError(
                    f"activity must be 'active' or 'passive', got {row['activity']!r}",
                    line=reader.line_num,
                ) from None
            groups.append(AssetGroup(row["code"].strip(), row["name"].strip(), activity))
        return cls(groups)


def load_registry(source: str | Path | None = None) -> GroupRegistry:
    """Load a group registry.

    ``None`` or ``"official"`` gives the standard statistical classification
    (groups I-IX); ``"refined"`` gives the extended eleven-group variant with
    nested subgroups.  Anything else is treated as a path to a CSV file with
    columns ``code,name,activity``.
    """
    if source is None or source in ("official", "refined"):
        name = f"groups_{source or 'official'}.csv"
        text = resources.files("fleetcap.data").joinpath(name).read_text(encoding="utf-8")
    else:
        text = Path(source).read_text(encoding="utf-8")
    return GroupRegistry.from_csv(text)


# ---------------------------------------------------------------------------
# balance records

@dataclass(frozen=True)
class BalanceRecord:
    enterprise_id: str
    period: int
    value_begin: float
    inflow_total: float
    inflow_new: float
    outflow_total: float
    outflow_liquidated: float
    value_end: float

    def validate(self, tolerance: float = BALANCE_TOLERANCE) -> None:
        label = f"record {self.enterprise_id}/{self.period}"
        for name in CURRENCY_FIELDS:
            if getattr(self, name) < 0:
                raise ValidationError(f"{label}: {name} is negative")
        if self.inflow_new > self.inflow_total:
            raise ValidationError(f"{label}: inflow_new exceeds inflow_total")
        if self.outflow_liquidated > self.outflow_total:
            raise ValidationError(f"{label}: outflow_liquidated exceeds outflow_total")
        implied = self.value_begin + self.inflow_total - self.outflow_total
        if abs(implied - self.value_end) > tolerance:
            raise ValidationError(
                f"{label}: balance identity violated, "
                f"begin + inflow - outflow = {implied:g} but value_end = {self.value_end:g}"
            )


BALANCE_FIELDS = tuple(f.name for f in fields(BalanceRecord))
CURRENCY_FIELDS = BALANCE_FIELDS[2:]


def parse_balance_table(
    stream: str | io.TextIOBase, tolerance: float = BALANCE_TOLERANCE
) -> list[BalanceRecord]:
    """Parse comma-separated balance rows; the header must name all eight fields."""
    text = stream if isinstance(stream, str) else stream.read()
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in reader.fieldnames or ()]
    missing = [name for name in BALANCE_FIELDS if name not in header]
    if missing:
        raise ParseError(f"header is missing fields {missing}", line=1)
    reader.fieldnames = header

    records = []
    for row in reader:
        line = reader.line_num
        if None in row or any(row[name] is None for name in BALANCE_FIELDS):
            raise ParseError("wrong number of columns", line=line)
        try:
            record = BalanceRecord(
                enterprise_id=row["enterprise_id"].strip(),
                period=int(row["period"]),
                **{name: float(row[name]) for name in CURRENCY_FIELDS},
            )
        except ValueError as exc:
            raise ParseError(f"non-numeric value ({exc})", line=line) from None
        try:
            record.validate(tolerance)
        except ValidationError as exc:
            raise ValidationError(f"line {line}: {exc}") from None
        records.append(record)
    return records


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def format_balance_table(records: Iterable[BalanceRecord]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(BALANCE_FIELDS)
    for rec in records:
        writer.writerow(
            [rec.enterprise_id, str(rec.period)] + [_fmt(getattr(rec, n)) for n in CURRENCY_FIELDS]
        )
    return out.getvalue()


# ---------------------------------------------------------------------------
# structure

@dataclass(frozen=True)
class StructureRow:
    group: str
    value: float
    share: float


def structure_shares(
    rows: Sequence[tuple[str, float]], registry: GroupRegistry | None = None
) -> list[StructureRow]:
    """Percentage share of each group in the ledger total.

    Group codes are checked against ``registry`` (the official one by
    default); unknown codes raise rather than being silently bucketed.
    """
    registry = registry if registry is not None else load_registry()
    if not rows:
        raise ValidationError("structure ledger is empty")
    for code, value in rows:
        registry[code]
        if value < 0:
            raise ValidationError(f"group {code!r} has negative value {value}")
    total = sum(value for _, value in rows)
    if total <= 0:
        raise DegenerateInputError("structure ledger total is zero")
    return [StructureRow(code, float(value), 100.0 * value / total) for code, value in rows]


def active_share(
    rows: Sequence[tuple[str, float]], registry: GroupRegistry | None = None
) -> float:
    registry = registry if registry is not None else load_registry()
    shares = structure_shares(rows, registry)
    return sum(r.share for r in shares if registry.activity(r.group) is Activity.ACTIVE)


def passive_share(
    rows: Sequence[tuple[str, float]], registry: GroupRegistry | None = None
) -> float:
    registry = registry if registry is not None else load_registry()
    shares = structure_shares(rows, registry)
    return sum(r.share for r in shares if registry.activity(r.group) is Activity.PASSIVE)


def parse_structure_table(text: str) -> list[tuple[str, float]]:
    """Read ``group,value`` rows."""
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in reader.fieldnames or ()]
    if "group" not in header or "value" not in header:
        raise ParseError("structure header must contain 'group' and 'value'", line=1)
    reader.fieldnames = header
    rows = []
    for row in reader:
        try:
            rows.append((row["group"].strip(), float(row["value"])))
        except (TypeError, ValueError, AttributeError):
            raise ParseError("malformed structure row", line=reader.line_num) from None
    return rows
