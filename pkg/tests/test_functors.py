import sys
import pathlib

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1]))

import numpy as np
import pytest

from finalg import get_field, is_bijective
from finmod import regular_module, zero_module
from functors import (
    FunctorTag,
    PreconditionError,
    apply,
    coextend_counit,
    coextend_discrete,
    coextend_system,
    coextend_unit,
    contraextend,
    contraextend_counit,
    contraextend_unit,
    extend_discrete,
    level_dims,
    restrict_discrete,
    restrict_system,
)
from systems import DiscreteModule, SystemAxiomError, free_system, is_flat_system, make_left_system, regular_discrete
from tower import TowerError, build

F2 = get_field(2)


@pytest.fixture
def projection():
    """k[t]/(t^n) × k -> k[t]/(t^n) at depth 3."""
    return build("product_projection", F2, 3)


def test_restrict_discrete_pulls_back_action(projection):
    n = regular_discrete(projection.target, 2)
    restricted = restrict_discrete(projection, n)
    assert restricted.level == 2 and restricted.dim == 2
    assert restricted.tower is projection.source
    # basis of R_2 is (1,0), (t,0), (0,1); the second factor acts by zero
    assert not np.any(restricted.module.action[2] != 0)
    assert np.array_equal(restricted.module.action[0], F2.eye(2))


def test_restrict_discrete_identity_and_zero():
    ident = build("identity", F2, 3)
    n = regular_discrete(ident.target, 3)
    assert restrict_discrete(ident, n).dim == 3
    zero = DiscreteModule(ident.target, 1, zero_module(ident.target.level(1), "right"))
    assert restrict_discrete(ident, zero).dim == 0


def test_restrict_discrete_checks_tower(projection):
    with pytest.raises(TowerError):
        restrict_discrete(projection, regular_discrete(projection.source, 1))


@pytest.mark.parametrize("level, expected", [(1, 1), (2, 2), (3, 3)])
def test_extend_discrete_of_cyclic_module(projection, level, expected):
    extended = extend_discrete(projection, regular_discrete(projection.source, level))
    assert extended.tower is projection.target
    assert extended.dim == expected == projection.target.level(level).dim


@pytest.mark.parametrize("family, level", [("unit_inclusion", 1), ("half_speed", 2)])
def test_extend_discrete_refuses_non_taut(family, level):
    f = build(family, F2, 3)
    with pytest.raises(PreconditionError) as info:
        extend_discrete(f, regular_discrete(f.source, 1))
    assert info.value.level == level


def test_coextend_discrete(projection):
    assert coextend_discrete(projection, regular_discrete(projection.source, 1)).dim == 1
    assert coextend_discrete(projection, regular_discrete(projection.source, 2)).dim == 2
    ident = build("identity", F2, 3)
    assert coextend_discrete(ident, regular_discrete(ident.source, 3)).dim == 3
    zero = DiscreteModule(projection.source, 2, zero_module(projection.source.level(2), "right"))
    assert coextend_discrete(projection, zero).dim == 0


def test_coextend_discrete_does_not_need_tautness():
    f = build("unit_inclusion", F2, 3)
    # Hom_k(k[t]/(t^2), k) as a right k[t]/(t^2)-module
    assert coextend_discrete(f, regular_discrete(f.source, 2)).dim == 2


def test_restrict_system(projection):
    q = free_system(projection.target, 1)
    p = restrict_system(projection, q)
    assert p.tower is projection.source
    assert p.dims() == [1, 2, 3]
    assert is_flat_system(p)
    ident = build("identity", F2, 3)
    assert restrict_system(ident, free_system(ident.target, 2)).dims() == [2, 4, 6]


def test_restrict_system_fails_for_half_speed():
    f = build("half_speed", F2, 3)
    with pytest.raises(SystemAxiomError) as info:
        restrict_system(f, free_system(f.target, 1))
    assert info.value.level == 2


def test_contraextend_free_systems(projection):
    assert contraextend(projection, free_system(projection.source, 2)).dims() == free_system(projection.target, 2).dims()
    quotient = build("levelwise_quotient", F2, 3)
    assert contraextend(quotient, free_system(quotient.source, 1)).dims() == [1, 1, 1]
    # contraextension needs no hypothesis on f
    inclusion = build("unit_inclusion", F2, 3)
    assert contraextend(inclusion, free_system(inclusion.source, 1)).dims() == [1, 2, 3]


def test_coextend_system(projection):
    p = coextend_system(projection, free_system(projection.source, 1))
    assert p.tower is projection.target
    assert p.dims() == [1, 2, 3]
    zero = make_left_system(projection.source, zero_module(projection.source.level(3)))
    assert coextend_system(projection, zero).dims() == [0, 0, 0]


def test_coextend_system_requires_taut():
    f = build("unit_inclusion", F2, 3)
    with pytest.raises(PreconditionError):
        coextend_system(f, free_system(f.source, 1))


def test_coextend_system_without_tautness_breaks_system_axiom():
    f = build("half_speed", F2, 3)
    with pytest.raises(SystemAxiomError) as info:
        coextend_system(f, free_system(f.source, 1), require_taut=False)
    assert info.value.level == 1


def test_units_and_counits_at_top(projection):
    d = projection.depth
    r_top, s_top = projection.source.level(d), projection.target.level(d)
    tensor, eta = contraextend_unit(projection, regular_module(r_top))
    assert tensor.dim == 3 and eta.shape == (3, 4)
    tensor, eps = contraextend_counit(projection, regular_module(s_top))
    assert is_bijective(F2, eps)
    space, evaluation = coextend_counit(projection, regular_module(r_top))
    assert space.dim == 3 and evaluation.shape == (4, 3)
    space, unit = coextend_unit(projection, regular_module(s_top))
    assert is_bijective(F2, unit)


def test_apply_dispatch(projection):
    n = regular_discrete(projection.target, 2)
    assert apply("restrict_discrete", projection, n).dim == 2
    assert apply(FunctorTag.CONTRAEXTEND, projection, free_system(projection.source, 1)).dims() == [1, 2, 3]
    with pytest.raises(TypeError):
        apply("contraextend", projection, n)
    with pytest.raises(TypeError):
        apply("extend_discrete", projection, free_system(projection.source, 1))
    with pytest.raises(ValueError):
        apply("no_such_functor", projection, n)
    assert level_dims(n) == [2]
    assert level_dims(free_system(projection.source, 1)) == [2, 3, 4]
