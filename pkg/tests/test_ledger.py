from __future__ import annotations

import io

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fleetcap.errors import DegenerateInputError, ParseError, ValidationError
from fleetcap.ledger import (
    Activity,
    BalanceRecord,
    active_share,
    format_balance_table,
    load_registry,
    parse_balance_table,
    parse_structure_table,
    passive_share,
    structure_shares,
)

HEADER = "enterprise_id,period,value_begin,inflow_total,inflow_new,outflow_total,outflow_liquidated,value_end\n"
LVIV = "lviv,1996,16919,509,274,271,87,17157\n"


def test_parse_valid_row():
    (rec,) = parse_balance_table(HEADER + LVIV)
    assert rec.enterprise_id == "lviv"
    assert rec.period == 1996
    assert rec.value_end == 17157


def test_balance_identity_violation_names_line():
    bad = "lviv,1996,16919,509,274,271,87,17200\n"
    with pytest.raises(ValidationError, match="line 3"):
        parse_balance_table(HEADER + LVIV + bad)


def test_tolerance_is_inclusive_of_half_unit():
    row = "a,2000,100,10,5,5,0,105.5\n"
    assert parse_balance_table(HEADER + row)
    with pytest.raises(ValidationError):
        parse_balance_table(HEADER + "a,2000,100,10,5,5,0,105.6\n")


@pytest.mark.parametrize(
    "row,match",
    [
        ("a,2000,-1,0,0,0,0,-1\n", "negative"),
        ("a,2000,100,10,11,0,0,110\n", "inflow_new"),
        ("a,2000,100,0,0,10,11,90\n", "outflow_liquidated"),
    ],
)
def test_field_constraints(row, match):
    with pytest.raises(ValidationError, match=match):
        parse_balance_table(HEADER + row)


def test_non_numeric_cell_reports_line():
    with pytest.raises(ParseError, match="line 2"):
        parse_balance_table(HEADER + "a,2000,abc,0,0,0,0,0\n")


def test_missing_header_field():
    with pytest.raises(ParseError, match="value_end"):
        parse_balance_table("enterprise_id,period,value_begin\n")


def test_stream_input():
    assert len(parse_balance_table(io.StringIO(HEADER + LVIV))) == 1


finite = st.integers(min_value=0, max_value=10**7)


@st.composite
def records(draw):
    begin = draw(finite)
    inflow = draw(finite)
    new = draw(st.integers(0, inflow))
    outflow = draw(st.integers(0, begin + inflow))
    liquidated = draw(st.integers(0, outflow))
    return BalanceRecord("e", draw(st.integers(1900, 2100)), begin, inflow, new, outflow, liquidated,
                         begin + inflow - outflow)


@given(st.lists(records(), min_size=1, max_size=5))
def test_round_trip(recs):
    assert parse_balance_table(format_balance_table(recs)) == recs


def test_round_trip_fractional_values():
    rec = BalanceRecord("x", 1, 0.1, 0.2, 0.2, 0.0, 0.0, 0.30000000000000004)
    assert parse_balance_table(format_balance_table([rec])) == [rec]


def test_official_registry_groups():
    reg = load_registry()
    assert reg.activity("IV") is Activity.ACTIVE
    assert reg.activity("V") is Activity.ACTIVE
    assert reg.activity("I") is Activity.PASSIVE


def test_refined_registry_has_nested_codes():
    reg = load_registry("refined")
    assert "XI" in reg
    assert any("." in code for code in reg)
    assert reg.activity("II.4") is Activity.ACTIVE


def test_unknown_group_rejected():
    with pytest.raises(ValidationError, match="unknown"):
        structure_shares([("I", 10.0), ("ZZ", 5.0)])


def test_structure_single_group_is_full_share():
    (row,) = structure_shares([("V", 42.0)])
    assert row.share == 100.0


def test_empty_and_zero_ledgers():
    with pytest.raises(ValidationError):
        structure_shares([])
    with pytest.raises(DegenerateInputError):
        structure_shares([("I", 0.0), ("V", 0.0)])


@given(st.lists(st.tuples(st.sampled_from(["I", "II", "III", "IV", "V", "VI", "VII", "VIII", "IX"]),
                          st.floats(0, 1e9)), min_size=1, max_size=12)
       .filter(lambda rows: sum(v for _, v in rows) > 1e-6))
def test_shares_sum_to_hundred(rows):
    shares = structure_shares(rows)
    assert abs(sum(r.share for r in shares) - 100.0) <= 0.1
    assert abs(active_share(rows) + passive_share(rows) - 100.0) <= 0.1


def test_parse_structure_table():
    rows = parse_structure_table("group,value\nI,10\nV,30\n")
    assert active_share(rows) == pytest.approx(75.0)
