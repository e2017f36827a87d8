import sys
import pathlib

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

import pytest

from finalg import AlgMorphism, get_field, truncated_polynomial_algebra
from tower import (
    EXPECTATIONS,
    FAMILIES,
    PREDICATES,
    HypothesisFlags,
    RingTower,
    TowerError,
    build,
    classify,
    closure_ideal,
    closure_matches_kernel,
    expected_predicates,
    is_proepimorphism,
    is_strongly_right_taut,
    polynomial_tower,
    reduction_map,
    truncated_polynomial_tower,
)

F2 = get_field(2)
F3 = get_field(3)


def test_truncated_polynomial_tower_shape():
    tower = truncated_polynomial_tower(F2, 4)
    assert tower.depth == 4
    assert tower.dims() == [1, 2, 3, 4]
    assert tower.projection(1).matrix.shape == (1, 4)
    assert tower.accumulated_kernel(2).rank == 2
    assert tower.kernel_ideal(3).rank == 1


def test_tower_rejects_non_surjective_transition():
    a1, a2 = truncated_polynomial_algebra(F2, 1), truncated_polynomial_algebra(F2, 2)
    # k -> k[t]/(t^2) is not onto
    inclusion = AlgMorphism(a1, a2, F2.array([[1], [0]]))
    with pytest.raises(TowerError):
        RingTower([a2, a1], [inclusion])


def test_tower_rejects_decreasing_orders():
    with pytest.raises(TowerError):
        polynomial_tower(F2, [2, 1])


def test_level_bounds():
    tower = truncated_polynomial_tower(F3, 2)
    with pytest.raises(TowerError):
        tower.level(3)
    with pytest.raises(TowerError):
        tower.transition(2)
    with pytest.raises(TowerError):
        tower.projection(2, 1)


def test_build_rejects_unknown_family_and_depth():
    with pytest.raises(TowerError):
        build("no_such_family", F2, 2)
    with pytest.raises(TowerError):
        build("identity", F2, 0)
    with pytest.raises(TowerError):
        expected_predicates("no_such_family", 2)


def test_every_family_has_expectations():
    assert set(FAMILIES) == set(EXPECTATIONS)


@pytest.mark.parametrize("family", sorted(FAMILIES))
@pytest.mark.parametrize("depth", [1, 2, 3])
def test_classification_matches_known_answers(family, depth):
    f = build(family, F2, depth)
    verdicts = classify(f)
    expected = expected_predicates(family, depth)
    assert {name: verdicts[name].holds for name in PREDICATES} == expected


@pytest.mark.parametrize("family", ["identity", "half_speed", "unit_inclusion"])
def test_classification_in_odd_characteristic(family):
    f = build(family, F3, 3)
    assert {k: v.holds for k, v in classify(f).items()} == expected_predicates(family, 3)


def test_half_speed_fails_tautness_at_level_two():
    f = build("half_speed", F2, 3)
    verdict = is_strongly_right_taut(f)
    assert not verdict
    assert verdict.level == 2
    assert verdict.witness["kernel_dim"] + verdict.witness["cokernel_dim"] > 0
    assert "at level 2" in verdict.describe()


def test_reduction_map_is_iso_for_identity():
    f = build("identity", F3, 3)
    for n in (1, 2):
        tensor, mapping = reduction_map(f, n)
        assert tensor.dim == n
        assert mapping.shape == (n, n)


def test_expected_predicates_by_depth():
    assert expected_predicates("half_speed", 2) == {
        "strongly_right_taut": True, "left_proflat": False, "proepimorphism": True,
    }
    assert expected_predicates("unit_inclusion", 1) == dict.fromkeys(PREDICATES, True)
    assert expected_predicates("diagonal", 4)["proepimorphism"] is False


def test_closure_ideal_for_identity_and_unit_inclusion():
    ident = build("identity", F2, 3)
    for m in (1, 2, 3):
        assert closure_matches_kernel(ident, m)
    unit = build("unit_inclusion", F2, 3)
    assert closure_ideal(unit, 1).rank == 0
    assert not closure_matches_kernel(unit, 1)
    assert closure_matches_kernel(unit, 3)


def test_truncate_and_flags():
    f = build("product_projection", F2, 3)
    g = f.truncate(2)
    assert g.depth == 2 and g.builder["depth"] == 2
    flagged = f.with_source_flags(HypothesisFlags(forgetful_fully_faithful=True))
    assert flagged.source.flags.forgetful_fully_faithful
    assert flagged.maps == f.maps
    assert not f.source.flags.forgetful_fully_faithful


def test_composition_of_tower_morphisms():
    f = build("identity", F2, 2)
    g = f.compose(f)
    assert g.depth == 2
    assert all((a.matrix == b.matrix).all() for a, b in zip(g.maps, f.maps))


@pytest.mark.parametrize("outer, inner", [
    ("levelwise_quotient", "product_projection"),
    ("levelwise_quotient", "upper_triangular_corner_top"),
    ("identity", "product_projection"),
])
@pytest.mark.parametrize("field", [F2, F3])
def test_taut_proepimorphisms_compose(outer, inner, field):
    g, f = build(outer, field, 3), build(inner, field, 3)
    for m in (f, g):
        assert is_strongly_right_taut(m) and is_proepimorphism(m)
    composite = g.compose(f)
    assert composite.source.dims() == f.source.dims()
    assert composite.target.dims() == g.target.dims()
    assert is_strongly_right_taut(composite)
    assert is_proepimorphism(composite)


def test_composition_rejects_depth_mismatch():
    with pytest.raises(TowerError):
        build("levelwise_quotient", F2, 2).compose(build("product_projection", F2, 3))
