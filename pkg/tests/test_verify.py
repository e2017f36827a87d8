import sys
import pathlib

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from finalg import get_field
from finmod import is_flat, quotient_module, regular_module, submodule, zero_module
from functors import restrict_system
from systems import free_system
from tower import HypothesisFlags, build
from verify import (
    CHECKS,
    VerificationReport,
    check_descent,
    check_descent_criterion,
    check_ff_discrete,
    check_ff_separated,
    check_discrete_quotients_tensor,
    descend_structure,
    enumerate_descent_structures,
    predicate_summary,
    random_module,
    random_projective,
    run_checks,
    same_structure,
)

F2 = get_field(2)
DECLARED = HypothesisFlags(forgetful_fully_faithful=True)


def declared(family, depth=3):
    return build(family, F2, depth).with_source_flags(DECLARED)


def test_report_exit_codes():
    report = VerificationReport(scenario="unit")
    report.record("holds", "==", 1, 1, True)
    report.record("side note", "==", 1, 2, False, kind="informational")
    assert report.passed and report.exit_code() == 0
    report.refuse("some_check", "hypothesis missing", level=2)
    assert not report.passed and report.exit_code() == 3
    report.record("broken", "==", 1, 2, False)
    assert report.exit_code() == 2
    assert [r.name for r in report.contradictions] == ["broken"]


def test_report_serialization():
    report = VerificationReport(scenario="unit", seed=7, samples=2, depth=3)
    report.record("dims", "==", [1, 2], [1, 2], True, witness=F2.array([1, 0]))
    report.merge(VerificationReport(predicates={"proepimorphism": {"holds": True}}))
    data = report.to_dict()
    assert data["summary"] == {"checks": 1, "contradictions": 0, "refusals": 0, "exit_code": 0}
    assert data["checks"][0]["witness"] == ["1", "0"]
    assert data["predicates"]["proepimorphism"]["holds"] is True
    frame = report.to_frame()
    assert list(frame.columns) == ["name", "relation", "left", "right", "pass", "kind", "note"]
    assert len(frame) == 1


def test_predicate_summary():
    summary = predicate_summary(build("half_speed", F2, 3))
    assert summary["strongly_right_taut"]["holds"] is False
    assert summary["strongly_right_taut"]["level"] == 2
    assert summary["proepimorphism"]["holds"] is True
    assert summary["left_proflat"]["certified_depth"] == 3


def test_random_samplers_are_valid_and_seeded():
    algebra = build("identity", F2, 3).target.level(3)
    first = random_module(algebra, "left", np.random.default_rng(5))
    again = random_module(algebra, "left", np.random.default_rng(5))
    assert np.array_equal(first.action, again.action)
    assert is_flat(random_projective(algebra, "left", np.random.default_rng(3)))


def test_identity_passes_every_check():
    report = run_checks(declared("identity"), list(CHECKS), samples=3, seed=1, scenario="identity")
    assert report.exit_code() == 0, [r.name for r in report.contradictions]
    assert report.predicates["proepimorphism"]["holds"] is True


def test_product_projection_core_checks():
    names = ["ff_discrete", "ff_separated", "adjunction_suite", "contratensor_identity", "reduction_structure"]
    report = run_checks(build("product_projection", F2, 3), names, samples=4, seed=2)
    assert report.exit_code() == 0, [r.name for r in report.contradictions]


def test_unit_inclusion_negative_controls_pass():
    report = run_checks(build("unit_inclusion", F2, 3), ["ff_discrete", "adjunction_suite", "contratensor_identity"],
                        samples=4, seed=1)
    assert report.exit_code() == 0, [r.name for r in report.contradictions]
    controls = [r for r in report.records if r.kind == "negative_control"]
    assert len(controls) == 4 and all(r.passed for r in controls)


def pair_records(report):
    return [r for r in report.records if " canonical " in r.name or " sample " in r.name]


def test_ff_pairs_assert_equality_only_for_proepimorphisms():
    epi = check_ff_discrete(build("product_projection", F2, 3), samples=3, seed=2)
    assert {r.relation for r in pair_records(epi)} == {"dim Hom_S == dim Hom_R"}
    assert all(r.kind == "theorem" and r.passed for r in pair_records(epi))
    not_epi = check_ff_discrete(build("diagonal", F2, 2), samples=3, seed=2)
    assert all(r.kind == "informational" for r in pair_records(not_epi))
    assert not all(r.passed for r in pair_records(not_epi))
    assert not_epi.exit_code() == 0
    separated = check_ff_separated(build("diagonal", F2, 2), samples=2, seed=2)
    assert not any(r.contradiction for r in separated.records)
    assert not all(r.passed for r in pair_records(separated))


def test_hypothesis_bound_checks_refuse():
    report = run_checks(build("unit_inclusion", F2, 3), ["flat_preservation", "ff_separated"], samples=2)
    assert report.exit_code() == 3
    assert {r["check"] for r in report.refusals} == {"flat_preservation", "ff_separated"}


def test_run_checks_rejects_unknown_name():
    with pytest.raises(ValueError):
        run_checks(build("identity", F2, 2), ["no_such_check"])


@pytest.mark.parametrize("family", ["product_projection", "levelwise_quotient", "upper_triangular_corner_top"])
def test_discrete_quotients_tensor_for_taut_morphisms(family):
    report = check_discrete_quotients_tensor(build(family, F2, 3))
    assert report.exit_code() == 0
    assert len(report.records) == 6


def test_descent_refused_without_declared_hypothesis():
    report = check_descent(build("product_projection", F2, 3), samples=2)
    assert report.exit_code() == 3
    assert report.refusals[0]["check"] == "descent"
    assert all(r.passed for r in report.records)


@pytest.mark.parametrize("family", ["product_projection", "triangular_to_full"])
def test_descent_round_trips(family):
    report = check_descent(declared(family), samples=3, seed=4)
    assert report.exit_code() == 0, [r.name for r in report.contradictions]


def test_descended_structure_is_the_original():
    f = declared("product_projection")
    q_s = free_system(f.target, 1)
    result = descend_structure(f, restrict_system(f, q_s))
    assert result.descended
    assert same_structure(result.system, q_s)
    refused = descend_structure(f, free_system(f.source, 1))
    assert not refused.descended
    assert (refused.level, refused.kernel_dim, refused.cokernel_dim) == (1, 1, 0)


def triangular_modules(ut):
    regular = regular_module(ut, "left")
    p1, _ = submodule(regular, F2.array([[1, 0, 0]]))
    p2, _ = submodule(regular, F2.array([[0, 1, 0], [0, 0, 1]]))
    s2, _ = quotient_module(regular, F2.array([[1, 0, 0], [0, 1, 0]]))
    return {"zero": zero_module(ut), "P1": p1, "S2": s2, "P2": p2, "regular": regular}


def test_descent_criterion_matches_exhaustive_enumeration():
    f_n = build("triangular_to_full", F2, 1).level_map(1)
    modules = triangular_modules(f_n.source)
    counts = {name: len(enumerate_descent_structures(f_n, m)) for name, m in modules.items()}
    # only the column module P2 = k^2 carries an M_2-structure
    assert counts == {"zero": 1, "P1": 0, "S2": 0, "P2": 1, "regular": 0}
    report = check_descent_criterion(f_n, list(modules.values()))
    assert report.exit_code() == 0
    criteria = [r.left for r in report.records if r.name.startswith("descent criterion")]
    assert criteria == [True, False, False, True, False]


def test_enumeration_limits():
    f_n = build("triangular_to_full", F2, 1).level_map(1)
    regular = regular_module(f_n.source, "left")
    with pytest.raises(ValueError):
        enumerate_descent_structures(f_n, regular, limit=100)
    g = build("triangular_to_full", get_field(0), 1).level_map(1)
    with pytest.raises(ValueError):
        enumerate_descent_structures(g, regular_module(g.source, "left"))


def test_descent_criterion_at_every_level():
    report = run_checks(build("triangular_to_full", F2, 2), ["descent_criterion"], samples=8, seed=3)
    assert report.exit_code() == 0, [r.name for r in report.contradictions]
    criteria = [r for r in report.records if r.name.startswith("descent criterion level")]
    assert {r.name.split(" module")[0] for r in criteria} == {"descent criterion level 1", "descent criterion level 2"}
    assert all(r.kind == "theorem" for r in criteria if r.relation == "==")
    not_epi = run_checks(build("diagonal", F2, 2), ["descent_criterion"], samples=4, seed=3)
    assert not_epi.exit_code() == 0
    assert all(r.kind == "informational" for r in not_epi.records)


def test_descent_criterion_needs_a_finite_field():
    report = run_checks(build("identity", get_field(0), 2), ["descent_criterion"], samples=2)
    assert report.exit_code() == 3
    assert report.refusals[0]["check"] == "descent_criterion"


@pytest.mark.parametrize("family", ["identity", "half_speed", "upper_triangular_corner_bottom"])
def test_contratensor_right_exact_check(family):
    report = run_checks(build(family, F2, 3), ["contratensor_right_exact"], samples=4, seed=5)
    assert report.exit_code() == 0, [r.name for r in report.contradictions]
    assert len(report.records) == 8
