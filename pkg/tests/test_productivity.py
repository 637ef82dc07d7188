from __future__ import annotations

import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fleetcap.errors import DegenerateInputError, UndefinedRatioError, ValidationError
from fleetcap.productivity import (
    FleetObservation,
    Quadrant,
    Verdict,
    adjusted_transport_work,
    band_report,
    derived_ratios,
    efficiency_assessment,
    fondovidacha,
    format_band_report,
    marginal_fondovidacha,
    mileage_utilization,
    parse_observations,
    tonne_day_utilization,
    total_adjusted_transport_work,
)


@pytest.mark.parametrize("t_fact,paper,exact", [(14, 535.5, 535.714), (15, 500.0, 500.0), (16, 468.75, 468.75)])
def test_adjusted_transport_work(t_fact, paper, exact):
    assert adjusted_transport_work(10, 50, 15, t_fact, "paper") == pytest.approx(paper, abs=1e-9)
    assert adjusted_transport_work(10, 50, 15, t_fact) == pytest.approx(exact, abs=5e-4)


def test_adjusted_transport_work_errors():
    with pytest.raises(DegenerateInputError):
        adjusted_transport_work(10, 50, 15, 0)
    with pytest.raises(ValidationError):
        adjusted_transport_work(-1, 50, 15, 14)


def test_total_over_shipments():
    total = total_adjusted_transport_work([(10, 50, 15, 15), (2, 10, 1, 1)])
    assert total == 520.0


pos = st.floats(0.1, 1e4)


@given(pos, pos, pos, pos, pos)
def test_transport_work_monotone_and_linear(m, L, tn, t1, t2):
    assume(abs(t1 - t2) > 1e-6)
    lo, hi = sorted((t1, t2))
    assert adjusted_transport_work(m, L, tn, lo) > adjusted_transport_work(m, L, tn, hi)
    assert adjusted_transport_work(2 * m, L, tn, lo) == pytest.approx(2 * adjusted_transport_work(m, L, tn, lo))
    assert adjusted_transport_work(m, 3 * L, tn, lo) == pytest.approx(3 * adjusted_transport_work(m, L, tn, lo))


def test_fondovidacha():
    assert fondovidacha(5, 5) == 1.0
    assert fondovidacha(0, 5) == 0.0
    assert fondovidacha(4113, 1000) == pytest.approx(4.113)
    with pytest.raises(DegenerateInputError):
        fondovidacha(1, 0)


def test_marginal_fondovidacha():
    assert marginal_fondovidacha(4, 8, 2, 4) == 2.0  # ray through the origin
    assert marginal_fondovidacha(4, 4, 2, 1) == 0.0
    with pytest.raises(UndefinedRatioError):
        marginal_fondovidacha(4, 5, 2, 2)


def test_region_1996_worsened():
    # rebuild a (P, fund) pair with f1 = 0.632 and marginal 6.275 from f0 = 1.510
    f0, f1, df = 1.510, 0.632, 6.275
    phi0 = 1.0
    phi1 = phi0 * (f0 - df) / (f1 - df)
    a = efficiency_assessment(f0 * phi0, f1 * phi1, phi0, phi1)
    assert a.marginal == pytest.approx(df)
    assert a.K == pytest.approx(9.929, abs=0.002)
    assert a.quadrant is Quadrant.III
    assert a.verdict is Verdict.WORSENED


def test_quadrant_two_always_improves():
    a = efficiency_assessment(100, 120, 50, 40)
    assert (a.quadrant, a.verdict) == (Quadrant.II, Verdict.IMPROVED)


def test_quadrant_four_always_worsens():
    a = efficiency_assessment(120, 100, 40, 50)
    assert (a.quadrant, a.verdict) == (Quadrant.IV, Verdict.WORSENED)


def test_proportional_growth_unchanged():
    a = efficiency_assessment(100, 150, 50, 75)
    assert a.K == pytest.approx(1.0)
    assert a.verdict is Verdict.UNCHANGED


def test_quadrant_one_and_three():
    assert efficiency_assessment(100, 200, 50, 60).verdict is Verdict.IMPROVED
    assert efficiency_assessment(100, 110, 50, 100).verdict is Verdict.WORSENED
    assert efficiency_assessment(100, 95, 50, 30).verdict is Verdict.IMPROVED


@pytest.mark.parametrize(
    "p0,p1,f0,f1,verdict",
    [
        (100, 100, 50, 50, Verdict.UNCHANGED),
        (100, 120, 50, 50, Verdict.IMPROVED),
        (100, 100, 50, 40, Verdict.IMPROVED),
        (100, 80, 50, 50, Verdict.WORSENED),
        (100, 100, 50, 60, Verdict.WORSENED),
    ],
)
def test_boundary_cases(p0, p1, f0, f1, verdict):
    a = efficiency_assessment(p0, p1, f0, f1)
    assert a.quadrant is Quadrant.BOUNDARY
    assert a.verdict is verdict


def test_infinite_k_flag():
    a = efficiency_assessment(100, 120, 50, 50)
    assert a.k_infinite
    assert math.isnan(efficiency_assessment(100, 100, 50, 50).K)


def test_index_form_is_only_a_diagnostic():
    a = efficiency_assessment(100, 90, 50, 48)
    assert a.index_form == pytest.approx((0.9 - 1) / (0.96 - 1))
    assert a.K != pytest.approx(a.index_form)


values = st.floats(0.5, 1e4)


@given(values, values, values, values)
def test_k_identity(p0, p1, f0, f1):
    assume(abs(f1 - f0) > 1e-6 * f0)
    a = efficiency_assessment(p0, p1, f0, f1)
    assert a.K == pytest.approx(marginal_fondovidacha(p0, p1, f0, f1) / fondovidacha(p1, f1), rel=1e-9)


@given(values, values, values, values)
def test_verdict_matches_productivity_change(p0, p1, f0, f1):
    # away from the axes the verdict reduces to whether P/fund rose or fell
    assume(abs(p1 - p0) > 1e-6 * p0 and abs(f1 - f0) > 1e-6 * f0)
    a = efficiency_assessment(p0, p1, f0, f1)
    cross = p1 * f0 - p0 * f1
    assume(abs(cross) > 1e-9 * p1 * f0)
    assert a.verdict is (Verdict.IMPROVED if cross > 0 else Verdict.WORSENED)


@given(st.sampled_from([-1, 0, 1]), st.sampled_from([-1, 0, 1]))
def test_verdicts_exhaustive(sp, sf):
    a = efficiency_assessment(100 + 10 * sp if sp else 100, 100, 50 + 5 * sf if sf else 50, 50)
    assert a.verdict in set(Verdict)
    assert a.quadrant in set(Quadrant)


def test_utilization():
    assert tonne_day_utilization(100, 100) == 1.0
    assert tonne_day_utilization(0, 100) == 0.0
    assert tonne_day_utilization(30, 100) == 0.3
    assert mileage_utilization(36, 100) == 0.36
    assert mileage_utilization(0, 100) == 0.0
    with pytest.raises(DegenerateInputError):
        tonne_day_utilization(0, 0)
    with pytest.raises(DegenerateInputError):
        mileage_utilization(0, 0)
    with pytest.raises(ValidationError):
        mileage_utilization(120, 100)


@given(st.floats(0, 1e6), st.floats(1e-3, 1e6), st.floats(0.01, 100))
def test_utilization_scale_invariant(a, b, k):
    a = min(a, b)
    assert tonne_day_utilization(a * k, b * k) == pytest.approx(tonne_day_utilization(a, b))
    assert mileage_utilization(a * k, b * k) == pytest.approx(mileage_utilization(a, b))


def obs(**kw):
    base = dict(enterprise_id="e1", year=1996, transport_work=5807, tons_carried=300, revenue=2000,
                profit=100, fund_value=5807 / 1.084, transport_means_value=3000, tonne_days_in_work=30,
                tonne_days_total=100, loaded_km=36, total_km=100, listed_tonnage=1000)
    base.update(kw)
    return FleetObservation(**base)


def test_derived_ratios():
    r = derived_ratios(obs())
    assert r["tkm_per_currency"] == pytest.approx(1.084)
    assert r["tkm_per_tonne"] == pytest.approx(5.807)
    assert derived_ratios(obs(profit=0))["profit_per_currency"] == 0.0


def test_zero_denominator_marks_field_only():
    r = derived_ratios(obs(listed_tonnage=0))
    assert r["tons_per_tonne"] is None
    assert r["tkm_per_currency"] is not None


def test_derived_ratios_homogeneous():
    o = obs()
    doubled = obs(transport_work=2 * o.transport_work, tons_carried=2 * o.tons_carried, revenue=2 * o.revenue,
                  profit=2 * o.profit, fund_value=2 * o.fund_value, listed_tonnage=2 * o.listed_tonnage)
    for k, v in derived_ratios(o).items():
        assert derived_ratios(doubled)[k] == pytest.approx(v)


def test_observation_invariants():
    with pytest.raises(ValidationError):
        obs(tonne_days_in_work=200)
    with pytest.raises(ValidationError):
        obs(loaded_km=200)
    with pytest.raises(ValidationError):
        obs(revenue=-1)
    assert obs(profit=-10).profit == -10


def test_band_report_ratio_of_sums():
    a = obs(enterprise_id="a", tonne_days_in_work=20, transport_work=100, fund_value=100)
    b = obs(enterprise_id="b", tonne_days_in_work=25, transport_work=300, fund_value=100)
    c = obs(enterprise_id="c", tonne_days_in_work=50, transport_work=100, fund_value=50)
    rows = band_report([a, b, c], "tonne_day_utilization", [0.3])
    assert [r.count for r in rows] == [2, 1, 3]
    assert rows[0].ratios["tkm_per_currency"] == pytest.approx(2.0)  # (100+300)/(100+100)
    assert rows[-1].ratios["tkm_per_currency"] == pytest.approx(500 / 250)
    assert "band,count" in format_band_report(rows)


def test_band_report_ownership_filter():
    a = obs(enterprise_id="a", ownership="state")
    b = obs(enterprise_id="b", ownership="private")
    rows = band_report([a, b], "mileage_utilization", [0.5], where=lambda o: o.ownership == "state")
    assert rows[-1].count == 1


def test_band_edges_validated():
    with pytest.raises(ValidationError):
        band_report([obs()], "mileage_utilization", [0.5, 0.2])


def test_parse_observations():
    header = ("enterprise_id,year,transport_work,tons_carried,revenue,profit,fund_value,transport_means_value,"
              "tonne_days_in_work,tonne_days_total,loaded_km,total_km,listed_tonnage\n")
    (o,) = parse_observations(header + "x,1996,10,1,1,0,5,2,3,10,4,10,2\n")
    assert o.fund_value == 5.0
    assert o.ownership == ""
    with pytest.raises(ValidationError, match="line 2"):
        parse_observations(header + "x,1996,10,1,1,0,5,2,30,10,4,10,2\n")
