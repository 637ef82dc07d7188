from __future__ import annotations

import copy

from fleetcap.golden import golden_suite, load_golden, solve_normal_equations


def test_fresh_build_passes():
    results = golden_suite()
    assert results
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_every_check_reports_fields():
    for r in golden_suite(criteria={1, 3, 8}):
        assert r.expected is not None
        assert r.actual is not None
        assert r.source


def perturbed(units: int) -> dict:
    data = copy.deepcopy(load_golden())
    record = data["datasets"]["lviv_balance"]["record"]
    # move the renewal numerator while keeping the balance identity intact
    for key in ("inflow_new", "inflow_total", "value_end"):
        record[key] += units
    return data


def renewal(data) -> dict:
    return {r.name: r for r in golden_suite(data, criteria={1})}


def test_one_unit_perturbation_shows_in_delta():
    base = renewal(None)["renewal_legacy"]
    moved = renewal(perturbed(1))["renewal_legacy"]
    # 1/17158 of the base is about 0.006 points, inside the 0.01 tolerance
    assert abs(moved.delta - base.delta) > 0.005


def test_larger_perturbation_fails_renewal():
    failed = renewal(perturbed(10))["renewal_mean_base"]
    assert not failed.passed
    assert "FAIL" in failed.line() and "delta" in failed.line()


def test_broken_identity_fails_as_data():
    data = copy.deepcopy(load_golden())
    data["datasets"]["lviv_balance"]["record"]["value_begin"] += 1
    results = golden_suite(data, criteria={1})
    assert results and not any(r.passed for r in results)
    assert "balance identity" in results[0].actual


def test_suite_does_not_mutate_input():
    data = load_golden()
    before = copy.deepcopy(data)
    golden_suite(data, criteria={1})
    assert data == before


def test_idempotent():
    first = [(r.name, r.actual) for r in golden_suite(criteria={3, 4, 9})]
    second = [(r.name, r.actual) for r in golden_suite(criteria={3, 4, 9})]
    assert first == second


def test_embedded_oracle_solves_small_system():
    design = [[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]
    assert solve_normal_equations(design, [1.0, 3.0, 5.0]) == [1.0, 2.0]
