import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from finalg import Verdict, kernel_cokernel_dims, kron, same_algebra, solve
from finmod import (
    Bimodule,
    FinModule,
    HomSpace,
    ModuleError,
    TensorProduct,
    annihilator_submodule,
    factor_through,
    free_module,
    hom_module,
    is_flat,
    regular_module,
    restrict_scalars,
    tensor_over,
)
from tower import RingTower, TowerError

logger = logging.getLogger("systems")


class SystemAxiomError(ValueError):
    """σ_n: R_n ⊗_{R_{n+1}} P_{n+1} -> P_n is not bijective."""

    def __init__(self, level: int, kernel_dim: int, cokernel_dim: int, detail: str = ""):
        message = f"system axiom fails at level {level}: kernel dim {kernel_dim}, cokernel dim {cokernel_dim}"
        super().__init__(f"{message} ({detail})" if detail else message)
        self.level = level
        self.kernel_dim = kernel_dim
        self.cokernel_dim = cokernel_dim


def same_tower(a: RingTower, b: RingTower) -> bool:
    return a is b or (
        a.depth == b.depth
        and all(same_algebra(x, y) for x, y in zip(a.levels, b.levels))
        and all(np.array_equal(s.matrix, t.matrix) for s, t in zip(a.transitions, b.transitions))
    )


def _require_same_tower(a: RingTower, b: RingTower, what: str):
    if not same_tower(a, b):
        raise TowerError(f"{what}: objects live over different towers")


# ---------- discrete modules ----------


@dataclass(frozen=True, eq=False)
class DiscreteModule:
    """A right R_m-module, read as a discrete right module over the pro-ring."""

    tower: RingTower
    level: int
    module: FinModule

    def __post_init__(self):
        if not 1 <= self.level <= self.tower.depth:
            raise TowerError(f"level {self.level} exceeds depth {self.tower.depth}")
        if self.module.side != "right":
            raise ModuleError("discrete modules are right modules")
        if not same_algebra(self.module.algebra, self.tower.level(self.level)):
            raise ModuleError(f"module is not over R_{self.level}")

    @property
    def dim(self) -> int:
        return self.module.dim

    def relevel(self, level: int) -> "DiscreteModule":
        """Same module over R_level (level >= self.level) through R_level -> R_self.level."""
        if level < self.level:
            raise TowerError(f"cannot move a level-{self.level} module down to level {level}")
        if level == self.level:
            return self
        projection = self.tower.projection(self.level, level)
        return DiscreteModule(self.tower, level, restrict_scalars(self.module, projection))

    def at_top(self) -> "DiscreteModule":
        return self.relevel(self.tower.depth)

    def right_system(self) -> List[FinModule]:
        """N_n = {x : x·ker(R_d -> R_n) = 0} as right R_n-modules, n = 1..d."""
        top = self.at_top().module
        system = []
        for n in range(1, self.tower.depth + 1):
            killed, _ = annihilator_submodule(top, self.tower.accumulated_kernel(n))
            system.append(factor_through(killed, self.tower.projection(n)))
        return system


def discrete_level(module: DiscreteModule) -> int:
    """Least m such that the module is annihilated by ker(R_d -> R_m)."""
    top = module.at_top().module
    for m in range(1, module.tower.depth + 1):
        kernel = module.tower.accumulated_kernel(m)
        if all(not np.any(top.act_by(k) != 0) for k in kernel.basis):
            return m
    return module.tower.depth


def regular_discrete(tower: RingTower, level: int) -> DiscreteModule:
    """R_m as a right module over itself."""
    return DiscreteModule(tower, level, regular_module(tower.level(level), "right"))


# ---------- left systems ----------


def _sigma_map(r_n, t_n, lower: FinModule, upper: FinModule, tau: np.ndarray) -> Tuple[TensorProduct, np.ndarray]:
    """R_n ⊗_{R_{n+1}} P_{n+1} and σ_n(r ⊗ p) = r·τ_n(p) on it."""
    f = r_n.field
    right = restrict_scalars(regular_module(r_n, "right"), t_n)
    tensor = tensor_over(right, upper)
    if lower.dim == 0 or upper.dim == 0:
        ambient = f.zeros((lower.dim, r_n.dim * upper.dim))
    else:
        ambient = np.concatenate([f.matmul(act, tau) for act in lower.action], axis=1)
    return tensor, tensor.space.induced(ambient)


@dataclass(frozen=True, eq=False)
class LeftSystem:
    """Left R_n-modules P_n with R_{n+1}-linear surjections τ_n: P_{n+1} -> P_n.

    levels[n - 1] is P_n; transitions[n - 1] is τ_n as a (dim P_n × dim P_{n+1}) matrix.
    """

    tower: RingTower
    levels: Tuple[FinModule, ...]
    transitions: Tuple[np.ndarray, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        d = self.tower.depth
        if len(self.levels) != d or len(self.transitions) != d - 1:
            raise TowerError(f"a system over a depth-{d} tower needs {d} levels and {d - 1} transitions")
        for n, p in enumerate(self.levels, start=1):
            if p.side != "left" or not same_algebra(p.algebra, self.tower.level(n)):
                raise ModuleError(f"P_{n} is not a left R_{n}-module")
        f = self.tower.field
        for n in range(1, d):
            lower, upper, tau = self.levels[n - 1], self.levels[n], self.transitions[n - 1]
            if tau.shape != (lower.dim, upper.dim):
                raise ModuleError(f"τ_{n} has shape {tau.shape}, expected {(lower.dim, upper.dim)}")
            t_n = self.tower.transition(n)
            for i in range(self.tower.level(n + 1).dim):
                image = lower.act_by(t_n.matrix[:, i])
                if not np.array_equal(f.matmul(tau, upper.action[i]), f.matmul(image, tau)):
                    raise ModuleError(f"τ_{n} is not R_{n + 1}-linear")
            _, sigma = _sigma_map(self.tower.level(n), t_n, lower, upper, tau)
            ker, coker = kernel_cokernel_dims(f, sigma)
            if ker or coker:
                raise SystemAxiomError(n, ker, coker, self.name)

    @property
    def depth(self) -> int:
        return self.tower.depth

    @property
    def top(self) -> FinModule:
        return self.levels[-1]

    def level(self, n: int) -> FinModule:
        self.tower._check_level(n)
        return self.levels[n - 1]

    def dims(self) -> List[int]:
        return [p.dim for p in self.levels]

    def to_level(self, n: int) -> np.ndarray:
        """Composite τ_n ∘ ... ∘ τ_{d-1}: P_d -> P_n."""
        f = self.tower.field
        result = f.eye(self.top.dim)
        for k in range(self.depth - 1, n - 1, -1):
            result = f.matmul(self.transitions[k - 1], result)
        return result

    def __repr__(self) -> str:
        return f"LeftSystem({self.name or '?'}, dims={self.dims()})"


def _base_change_bimodule(r_n, projection) -> Bimodule:
    """R_n as an (R_n, R_d)-bimodule, R_d acting on the right through R_d -> R_n."""
    right = np.stack([r_n.right_matrix(projection.matrix[:, i]) for i in range(projection.source.dim)])
    return Bimodule(r_n, projection.source, r_n.left_matrices(), right)


def make_left_system(tower: RingTower, top: FinModule, name: str = "") -> LeftSystem:
    """P_n = R_n ⊗_{R_d} P_d, with P_d = top itself."""
    if top.side != "left" or not same_algebra(top.algebra, tower.level(tower.depth)):
        raise ModuleError("the top of a left system must be a left R_d-module")
    f = tower.field
    d = tower.depth
    tensors: List[Optional[TensorProduct]] = [None] * d
    levels: List[FinModule] = [top] * d
    for n in range(1, d):
        tensor = tensor_over(_base_change_bimodule(tower.level(n), tower.projection(n)), top)
        tensors[n - 1] = tensor
        levels[n - 1] = tensor.left_outer
    transitions = []
    for n in range(1, d):
        lower = tensors[n - 1]
        if n == d - 1:
            unit = tower.level(n).unit.reshape(-1, 1)
            tau = lower.space.project(kron(f, unit, f.eye(top.dim)))
        else:
            tau = lower.space.project(
                f.matmul(kron(f, tower.transition(n).matrix, f.eye(top.dim)), tensors[n].space.section)
            )
        transitions.append(tau)
    system = LeftSystem(tower, levels, transitions, name=name)
    logger.debug("left system %s with level dims %s", name or "?", system.dims())
    return system


def free_system(tower: RingTower, rank: int) -> LeftSystem:
    """R[[X]] truncated, |X| = rank."""
    top = free_module(tower.level(tower.depth), rank, "left")
    return make_left_system(tower, top, name=f"free rank {rank}")


def system_hom(p: LeftSystem, q: LeftSystem) -> HomSpace:
    """Hom_{R_d}(P_d, Q_d): the depth-d term of the limit computing system morphisms."""
    _require_same_tower(p.tower, q.tower, "system_hom")
    return hom_module(p.top, q.top)


def system_morphism_levels(p: LeftSystem, q: LeftSystem, top_map: np.ndarray) -> List[np.ndarray]:
    """Levelwise components F_n with F_n ∘ (P_d -> P_n) = (Q_d -> Q_n) ∘ F_d."""
    _require_same_tower(p.tower, q.tower, "system_morphism_levels")
    f = p.tower.field
    components = []
    for n in range(1, p.depth + 1):
        src, dst = p.to_level(n), f.matmul(q.to_level(n), top_map)
        x = solve(f, np.ascontiguousarray(src.T), np.ascontiguousarray(dst.T))
        if x is None:
            raise ModuleError(f"top-level map does not descend to level {n}")
        components.append(np.ascontiguousarray(x.T))
    return components


def contratensor(n: DiscreteModule, p: LeftSystem) -> TensorProduct:
    """N ⊛ P computed as N ⊗_{R_m} P_m at the level m of N."""
    _require_same_tower(n.tower, p.tower, "contratensor")
    return tensor_over(n.module, p.level(n.level))


def contratensor_map(n: DiscreteModule, p: LeftSystem, q: LeftSystem, top_map: np.ndarray) -> np.ndarray:
    """id_N ⊛ F: N ⊛ P -> N ⊛ Q for the system morphism F with top component top_map."""
    _require_same_tower(n.tower, p.tower, "contratensor_map")
    component = system_morphism_levels(p, q, top_map)[n.level - 1]
    return contratensor(n, q).induced_map(contratensor(n, p), n.tower.field.eye(n.dim), component)


def is_flat_system(p: LeftSystem) -> Verdict:
    for n, module in enumerate(p.levels, start=1):
        flat = is_flat(module)
        if not flat:
            return Verdict(False, level=n, detail=f"P_{n} is not flat over R_{n}", witness=flat.witness, depth=p.depth)
    return Verdict(True, detail="flat at every level", depth=p.depth)


def separated_reflection(p: LeftSystem) -> LeftSystem:
    """Λ: every truncated system is already separated."""
    return p


def nonseparated_kernel_dims(p: LeftSystem) -> List[int]:
    """Ω at each level; finite levels have exact limits, so it vanishes."""
    return [0] * p.depth
