import logging
from enum import Enum
from typing import List, Tuple, Union

import numpy as np

from finalg import AlgMorphism, kron, solve
from finmod import (
    Bimodule,
    FinModule,
    HomSpace,
    ModuleError,
    TensorProduct,
    hom_bimodule,
    restrict_scalars,
    tensor_over,
)
from systems import DiscreteModule, LeftSystem, SystemAxiomError, same_tower, separated_reflection
from tower import TowerError, TowerMorphism, is_strongly_right_taut

logger = logging.getLogger("functors")


class PreconditionError(ValueError):
    """A functor was refused because its hypothesis fails."""

    def __init__(self, message: str, level: Union[int, None] = None):
        super().__init__(message)
        self.level = level


class FunctorTag(str, Enum):
    RESTRICT_DISCRETE = "restrict_discrete"
    EXTEND_DISCRETE = "extend_discrete"
    COEXTEND_DISCRETE = "coextend_discrete"
    RESTRICT_SYSTEM = "restrict_system"
    CONTRAEXTEND = "contraextend"
    COEXTEND_SYSTEM = "coextend_system"


def _require_taut(f: TowerMorphism, functor: str):
    taut = is_strongly_right_taut(f)
    if not taut:
        raise PreconditionError(f"{functor} needs a strongly right taut morphism: {taut.describe()}", taut.level)


def _check_over(tower, expected, what: str):
    if not same_tower(tower, expected):
        raise TowerError(f"{what} lives over the wrong tower")


# ---------- bimodule structures on S_n ----------


def target_over_source(f_n: AlgMorphism) -> Bimodule:
    """S_n as an (S_n, R_n)-bimodule: s·x·r = s x f(r)."""
    s = f_n.target
    right = np.stack([s.right_matrix(f_n.matrix[:, i]) for i in range(f_n.source.dim)])
    return Bimodule(s, f_n.source, s.left_matrices(), right, name=s.name)


def source_over_target(f_n: AlgMorphism) -> Bimodule:
    """S_n as an (R_n, S_n)-bimodule: r·x·s = f(r) x s."""
    s = f_n.target
    left = np.stack([s.left_matrix(f_n.matrix[:, i]) for i in range(f_n.source.dim)])
    return Bimodule(f_n.source, s, left, s.right_matrices(), name=s.name)


# ---------- discrete modules ----------


def restrict_discrete(f: TowerMorphism, n: DiscreteModule) -> DiscreteModule:
    _check_over(n.tower, f.target, "restrict_discrete input")
    return DiscreteModule(f.source, n.level, restrict_scalars(n.module, f.level_map(n.level)))


def extend_discrete(f: TowerMorphism, m: DiscreteModule) -> DiscreteModule:
    """M ⊗_{R_m} S_m."""
    _check_over(m.tower, f.source, "extend_discrete input")
    _require_taut(f, "extend_discrete")
    tensor = tensor_over(m.module, source_over_target(f.level_map(m.level)))
    return DiscreteModule(f.target, m.level, tensor.right_outer)


def coextend_discrete(f: TowerMorphism, m: DiscreteModule) -> DiscreteModule:
    """Hom_{R_m}(S_m, M) with (φ·s)(x) = φ(s·x)."""
    _check_over(m.tower, f.source, "coextend_discrete input")
    _, module = hom_bimodule(target_over_source(f.level_map(m.level)), m.module, over="right")
    return DiscreteModule(f.target, m.level, module)


# ---------- systems ----------


def restrict_system(f: TowerMorphism, q: LeftSystem) -> LeftSystem:
    """Same levels and transitions, R_n acting through f_n; the system axiom is revalidated."""
    _check_over(q.tower, f.target, "restrict_system input")
    levels = [restrict_scalars(p, f.level_map(n)) for n, p in enumerate(q.levels, start=1)]
    return LeftSystem(f.source, levels, q.transitions, name=f"f_♯({q.name})")


def extend_top(f: TowerMorphism, module: FinModule, level: int) -> TensorProduct:
    """S_n ⊗_{R_n} P_n; the left S_n-module is the result's left_outer."""
    return tensor_over(target_over_source(f.level_map(level)), module)


def coextend_top(f: TowerMorphism, module: FinModule, level: int) -> Tuple[HomSpace, FinModule]:
    """Hom_{R_n}(S_n, P_n) with (s·φ)(x) = φ(x·s)."""
    return hom_bimodule(source_over_target(f.level_map(level)), module, over="left")


def contraextend(f: TowerMorphism, p: LeftSystem) -> LeftSystem:
    """Separated reflection of the levels S_n ⊗_{R_n} P_n with transitions t^S_n ⊗ τ_n."""
    _check_over(p.tower, f.source, "contraextend input")
    fld = f.field
    tensors = [extend_top(f, module, n) for n, module in enumerate(p.levels, start=1)]
    transitions = []
    for n in range(1, f.depth):
        ambient = kron(fld, f.target.transition(n).matrix, p.transitions[n - 1])
        transitions.append(tensors[n - 1].space.project(fld.matmul(ambient, tensors[n].space.section)))
    return separated_reflection(LeftSystem(f.target, [t.left_outer for t in tensors], transitions,
                                           name=f"f^♯({p.name})"))


def coextend_system(f: TowerMorphism, p: LeftSystem, require_taut: bool = True) -> LeftSystem:
    """Levels Hom_{R_n}(S_n, P_n); φ descends along t^S_n to the unique ψ with ψ∘t^S_n = τ_n∘φ."""
    _check_over(p.tower, f.source, "coextend_system input")
    if require_taut:
        _require_taut(f, "coextend_system")
    fld = f.field
    homs = [coextend_top(f, module, n) for n, module in enumerate(p.levels, start=1)]
    transitions = []
    for n in range(1, f.depth):
        lower, _ = homs[n - 1]
        upper, _ = homs[n]
        t_s = f.target.transition(n).matrix
        images = []
        for phi in upper.basis:
            rhs = fld.matmul(p.transitions[n - 1], phi)
            psi_t = solve(fld, np.ascontiguousarray(t_s.T), np.ascontiguousarray(rhs.T))
            if psi_t is None:
                raise SystemAxiomError(n, 0, 0, "Hom_(R_n+1)(S_n+1, P_n+1) does not descend to level n")
            images.append(np.ascontiguousarray(psi_t.T))
        if images:
            try:
                tau = lower.coordinates(np.stack(images))
            except ModuleError:
                raise SystemAxiomError(n, 0, 0, "descended map is not R_n-linear") from None
        else:
            tau = fld.zeros((lower.dim, 0))
        transitions.append(tau)
    return LeftSystem(f.target, [module for _, module in homs], transitions, name=f"f^♮({p.name})")


# ---------- units and counits at the top level ----------


def contraextend_unit(f: TowerMorphism, module: FinModule) -> Tuple[TensorProduct, np.ndarray]:
    """η: P -> S ⊗_R P, p -> 1 ⊗ p."""
    fld, d = f.field, f.depth
    tensor = extend_top(f, module, d)
    unit = f.target.level(d).unit.reshape(-1, 1)
    return tensor, tensor.space.project(kron(fld, unit, fld.eye(module.dim)))


def contraextend_counit(f: TowerMorphism, module: FinModule) -> Tuple[TensorProduct, np.ndarray]:
    """ε: S ⊗_R Q -> Q, s ⊗ q -> s·q, for a left S_d-module Q."""
    fld, d = f.field, f.depth
    tensor = extend_top(f, restrict_scalars(module, f.level_map(d)), d)
    if module.dim == 0:
        return tensor, fld.zeros((0, tensor.dim))
    ambient = np.concatenate(list(module.action), axis=1)
    return tensor, tensor.space.induced(ambient)


def coextend_counit(f: TowerMorphism, module: FinModule) -> Tuple[HomSpace, np.ndarray]:
    """ε: Hom_R(S, P) -> P, φ -> φ(1), i.e. evaluation at f(1)."""
    fld, d = f.field, f.depth
    space, _ = coextend_top(f, module, d)
    one = f.target.level(d).unit
    if space.dim == 0:
        return space, fld.zeros((module.dim, 0))
    return space, np.stack([fld.matmul(phi, one) for phi in space.basis], axis=1)


def coextend_unit(f: TowerMorphism, module: FinModule) -> Tuple[HomSpace, np.ndarray]:
    """η: Q -> Hom_R(S, Q), q -> (x -> x·q), for a left S_d-module Q."""
    fld, d = f.field, f.depth
    space, _ = coextend_top(f, restrict_scalars(module, f.level_map(d)), d)
    if module.dim == 0:
        return space, fld.zeros((space.dim, 0))
    maps = [np.stack([fld.matmul(act, e) for act in module.action], axis=1) for e in fld.eye(module.dim)]
    return space, space.coordinates(np.stack(maps))


def apply(tag: Union[FunctorTag, str], f: TowerMorphism, obj, **options):
    tag = FunctorTag(tag)
    logger.debug("applying %s along %s", tag.value, f.name)
    dispatch = {
        FunctorTag.RESTRICT_DISCRETE: restrict_discrete,
        FunctorTag.EXTEND_DISCRETE: extend_discrete,
        FunctorTag.COEXTEND_DISCRETE: coextend_discrete,
        FunctorTag.RESTRICT_SYSTEM: restrict_system,
        FunctorTag.CONTRAEXTEND: contraextend,
        FunctorTag.COEXTEND_SYSTEM: coextend_system,
    }
    expects_system = tag in (FunctorTag.RESTRICT_SYSTEM, FunctorTag.CONTRAEXTEND, FunctorTag.COEXTEND_SYSTEM)
    if expects_system and not isinstance(obj, LeftSystem):
        raise TypeError(f"{tag.value} applies to left systems")
    if not expects_system and not isinstance(obj, DiscreteModule):
        raise TypeError(f"{tag.value} applies to discrete modules")
    return dispatch[tag](f, obj, **options)


def level_dims(obj) -> List[int]:
    if isinstance(obj, LeftSystem):
        return obj.dims()
    return [obj.dim]
