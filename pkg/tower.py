import logging
from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from finalg import (
    AlgMorphism,
    FinAlgebra,
    Ideal,
    Verdict,
    diagonal_morphism,
    factor_projection,
    full_matrix_algebra,
    ground_algebra,
    identity_morphism,
    is_ring_epimorphism,
    kernel_cokernel_dims,
    kron,
    morphism_from_columns,
    product_algebra,
    product_map,
    same_algebra,
    tensor_algebra,
    truncated_polynomial_algebra,
    unit_morphism,
    upper_triangular_algebra,
)
from finmod import is_flat, regular_module, restrict_scalars, tensor_over

logger = logging.getLogger("tower")


class TowerError(ValueError):
    """Invalid tower or tower morphism."""


@dataclass(frozen=True)
class HypothesisFlags:
    """Declared (never computed) hypotheses about the pro-ring a tower stands for."""

    forgetful_fully_faithful: bool = False


@dataclass(frozen=True, eq=False)
class RingTower:
    """Truncated projective system A_1 <- A_2 <- ... <- A_d of surjective algebra maps.

    Levels are numbered from 1; transitions[n - 1] is t_n: A_{n+1} -> A_n.
    """

    levels: Tuple[FinAlgebra, ...]
    transitions: Tuple[AlgMorphism, ...]
    name: str = ""
    builder: Optional[dict] = None
    flags: HypothesisFlags = HypothesisFlags()
    top_projections: Tuple[AlgMorphism, ...] = dc_field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        if not self.levels:
            raise TowerError("a tower needs at least one level")
        if len(self.transitions) != len(self.levels) - 1:
            raise TowerError(f"{len(self.levels)} levels need {len(self.levels) - 1} transitions, got {len(self.transitions)}")
        field = self.levels[0].field
        for n, a in enumerate(self.levels, start=1):
            if a.field != field:
                raise TowerError(f"level {n} is over {a.field}, level 1 over {field}")
        for n, t in enumerate(self.transitions, start=1):
            if not (same_algebra(t.source, self.levels[n]) and same_algebra(t.target, self.levels[n - 1])):
                raise TowerError(f"transition t_{n} does not map level {n + 1} to level {n}")
            if not t.is_surjective():
                raise TowerError(f"transition t_{n} is not surjective")
        # composites A_d -> A_m for m = 1..d
        d = self.depth
        projections: List[AlgMorphism] = [identity_morphism(self.levels[-1])]
        for n in range(d - 1, 0, -1):
            projections.append(self.transitions[n - 1].compose(projections[-1]))
        object.__setattr__(self, "top_projections", tuple(reversed(projections)))
        kernels = [p.kernel() for p in self.top_projections]
        for m in range(1, d):
            if not kernels[m].is_contained_in(kernels[m - 1]):
                raise TowerError(f"accumulated kernels are not nested at level {m}")

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def field(self):
        return self.levels[0].field

    def level(self, n: int) -> FinAlgebra:
        self._check_level(n)
        return self.levels[n - 1]

    def transition(self, n: int) -> AlgMorphism:
        """t_n: A_{n+1} -> A_n."""
        if not 1 <= n < self.depth:
            raise TowerError(f"no transition t_{n} in a tower of depth {self.depth}")
        return self.transitions[n - 1]

    def projection(self, m: int, n: Optional[int] = None) -> AlgMorphism:
        """Composite A_n -> A_m (n defaults to the top level)."""
        n = self.depth if n is None else n
        self._check_level(m)
        self._check_level(n)
        if m > n:
            raise TowerError(f"no projection from level {n} to the higher level {m}")
        result = identity_morphism(self.level(n))
        for k in range(n - 1, m - 1, -1):
            result = self.transition(k).compose(result)
        return result

    def kernel_ideal(self, n: int) -> Ideal:
        """K_n = ker(t_n)."""
        return self.transition(n).kernel()

    def accumulated_kernel(self, m: int, n: Optional[int] = None) -> Ideal:
        """K_{m,n} = ker(A_n -> A_m)."""
        if n is None or n == self.depth:
            self._check_level(m)
            return self.top_projections[m - 1].kernel()
        return self.projection(m, n).kernel()

    def truncate(self, depth: int) -> "RingTower":
        self._check_level(depth)
        builder = dict(self.builder, depth=depth) if self.builder else None
        return RingTower(self.levels[:depth], self.transitions[: depth - 1], self.name, builder, self.flags)

    def dims(self) -> List[int]:
        return [a.dim for a in self.levels]

    def _check_level(self, n: int):
        if not 1 <= n <= self.depth:
            raise TowerError(f"level {n} outside 1..{self.depth}")

    def __repr__(self) -> str:
        return f"RingTower({self.name or '?'}, dims={self.dims()})"


@dataclass(frozen=True, eq=False)
class TowerMorphism:
    """Levelwise algebra maps f_n: R_n -> S_n with f_n ∘ t^R_n = t^S_n ∘ f_{n+1}."""

    source: RingTower
    target: RingTower
    maps: Tuple[AlgMorphism, ...]
    name: str = ""
    builder: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        d = self.source.depth
        if self.target.depth != d or len(self.maps) != d:
            raise TowerError(f"depth mismatch: source {d}, target {self.target.depth}, {len(self.maps)} level maps")
        if self.source.field != self.target.field:
            raise TowerError("source and target towers are over different fields")
        for n, f in enumerate(self.maps, start=1):
            if not (same_algebra(f.source, self.source.level(n)) and same_algebra(f.target, self.target.level(n))):
                raise TowerError(f"f_{n} does not map R_{n} to S_{n}")
        fld = self.source.field
        for n in range(1, d):
            lower = fld.matmul(self.maps[n - 1].matrix, self.source.transition(n).matrix)
            upper = fld.matmul(self.target.transition(n).matrix, self.maps[n].matrix)
            if not np.array_equal(lower, upper):
                raise TowerError(f"square at level {n} does not commute")

    @property
    def depth(self) -> int:
        return self.source.depth

    @property
    def field(self):
        return self.source.field

    def level_map(self, n: int) -> AlgMorphism:
        self.source._check_level(n)
        return self.maps[n - 1]

    def compose(self, inner: "TowerMorphism") -> "TowerMorphism":
        """self ∘ inner."""
        if inner.depth != self.depth:
            raise TowerError("composition of tower morphisms of different depths")
        maps = [g.compose(f) for g, f in zip(self.maps, inner.maps)]
        return TowerMorphism(inner.source, self.target, maps, name=f"{self.name}∘{inner.name}")

    def truncate(self, depth: int) -> "TowerMorphism":
        builder = dict(self.builder, depth=depth) if self.builder else None
        return TowerMorphism(self.source.truncate(depth), self.target.truncate(depth), self.maps[:depth], self.name, builder)

    def with_source_flags(self, flags: HypothesisFlags) -> "TowerMorphism":
        """Same morphism with hypotheses declared on the source tower."""
        s = self.source
        source = RingTower(s.levels, s.transitions, s.name, s.builder, flags)
        return TowerMorphism(source, self.target, self.maps, self.name, self.builder)

    def __repr__(self) -> str:
        return f"TowerMorphism({self.name or '?'}, depth={self.depth})"


# ---------- predicates ----------


def reduction_map(f: TowerMorphism, n: int):
    """R_n ⊗_{R_{n+1}} S_{n+1} and the matrix of r ⊗ s -> f_n(r)·t^S_n(s) on it."""
    r_n = f.source.level(n)
    s_n, s_next = f.target.level(n), f.target.level(n + 1)
    right = restrict_scalars(regular_module(r_n, "right"), f.source.transition(n))
    left = restrict_scalars(regular_module(s_next, "left"), f.level_map(n + 1))
    tensor = tensor_over(right, left)
    ambient = product_map(s_n, f.level_map(n).matrix, f.target.transition(n).matrix)
    return tensor, tensor.space.induced(ambient)


def is_strongly_right_taut(f: TowerMorphism) -> Verdict:
    d = f.depth
    levels = []
    for n in range(1, d):
        tensor, mapping = reduction_map(f, n)
        ker, coker = kernel_cokernel_dims(f.field, mapping)
        levels.append({"level": n, "tensor_dim": tensor.dim, "target_dim": f.target.level(n).dim,
                       "kernel_dim": ker, "cokernel_dim": coker})
        logger.debug("%s: R_%d ⊗ S_%d -> S_%d has kernel %d, cokernel %d", f.name, n, n + 1, n, ker, coker)
        if ker or coker:
            return Verdict(False, level=n,
                           detail=f"R_{n}⊗S_{n + 1} has dim {tensor.dim}, S_{n} has dim {f.target.level(n).dim}",
                           witness=levels[-1], depth=d)
    return Verdict(True, detail="R_n⊗S_(n+1) ≅ S_n at every level", witness={"levels": levels}, depth=d)


def is_left_proflat(f: TowerMorphism) -> Verdict:
    taut = is_strongly_right_taut(f)
    if not taut:
        return Verdict(False, level=taut.level, detail=f"not strongly right taut: {taut.detail}",
                       witness=taut.witness, depth=f.depth)
    for n in range(1, f.depth + 1):
        module = restrict_scalars(regular_module(f.target.level(n), "left"), f.level_map(n))
        flat = is_flat(module)
        if not flat:
            return Verdict(False, level=n, detail=f"S_{n} is not flat as a left R_{n}-module", witness=flat.witness,
                           depth=f.depth)
    return Verdict(True, detail="strongly right taut and S_n flat over R_n at every level", depth=f.depth)


def is_proepimorphism(f: TowerMorphism) -> Verdict:
    for n in range(1, f.depth + 1):
        epi = is_ring_epimorphism(f.level_map(n))
        if not epi:
            return Verdict(False, level=n, detail=f"f_{n} is not a ring epimorphism: {epi.detail}",
                           witness=epi.witness, depth=f.depth)
    return Verdict(True, detail="every f_n is a ring epimorphism", depth=f.depth)


def closure_ideal(f: TowerMorphism, m: int) -> Ideal:
    """Two-sided ideal of S_d generated by f_d(ker(R_d -> R_m))."""
    top = f.target.level(f.depth)
    kernel = f.source.accumulated_kernel(m)
    if kernel.rank == 0:
        return Ideal.zero(top)
    images = f.field.matmul(kernel.basis, f.level_map(f.depth).matrix.T)
    return Ideal.generated(top, images, "two-sided")


def closure_matches_kernel(f: TowerMorphism, m: int) -> Verdict:
    """Compare closure_ideal(f, m) with ker(S_d -> S_m); inclusion always holds."""
    closure = closure_ideal(f, m)
    kernel = f.target.accumulated_kernel(m)
    if not closure.is_contained_in(kernel):
        raise TowerError("closure ideal escapes the target kernel; tower morphism data is inconsistent")
    detail = f"rank f(I_{m})S = {closure.rank}, rank J_{m} = {kernel.rank}"
    if closure.same_as(kernel):
        return Verdict(True, level=m, detail=detail, depth=f.depth)
    return Verdict(False, level=m, detail=f"strict inclusion: {detail}", depth=f.depth)


# ---------- tower builders ----------


def polynomial_tower(field, orders: Sequence[int], name: str = "") -> RingTower:
    """Levels k[t]/(t^orders[n-1]) with the natural surjections (orders nondecreasing)."""
    if any(b < a for a, b in zip(orders, orders[1:])):
        raise TowerError("truncation orders must be nondecreasing")
    levels = [truncated_polynomial_algebra(field, k) for k in orders]
    transitions = []
    for lower, upper in zip(levels, levels[1:]):
        matrix = field.zeros((lower.dim, upper.dim))
        matrix[:, : lower.dim] = field.eye(lower.dim)
        transitions.append(AlgMorphism(upper, lower, matrix))
    return RingTower(levels, transitions, name=name or "k[[t]]")


def truncated_polynomial_tower(field, depth: int) -> RingTower:
    return polynomial_tower(field, list(range(1, depth + 1)), name="k[[t]]")


def constant_tower(algebra: FinAlgebra, depth: int) -> RingTower:
    return RingTower([algebra] * depth, [identity_morphism(algebra)] * (depth - 1), name=f"const({algebra.name})")


def product_tower(first: RingTower, second: RingTower) -> RingTower:
    if first.depth != second.depth:
        raise TowerError("product of towers of different depths")
    fld = first.field
    levels = [product_algebra(a, b) for a, b in zip(first.levels, second.levels)]
    transitions = []
    for n in range(1, first.depth):
        ta, tb = first.transition(n).matrix, second.transition(n).matrix
        matrix = fld.zeros((levels[n - 1].dim, levels[n].dim))
        matrix[: ta.shape[0], : ta.shape[1]] = ta
        matrix[ta.shape[0]:, ta.shape[1]:] = tb
        transitions.append(AlgMorphism(levels[n], levels[n - 1], matrix))
    return RingTower(levels, transitions, name=f"{first.name} x {second.name}")


def upper_triangular_tower(base: RingTower) -> RingTower:
    """UT_2(A_n) = UT_2(k) ⊗ A_n; basis E11⊗a, E12⊗a, E22⊗a in that order."""
    fld = base.field
    ut = upper_triangular_algebra(fld, 2)
    levels = [tensor_algebra(ut, a) for a in base.levels]
    transitions = [
        AlgMorphism(levels[n], levels[n - 1], kron(fld, fld.eye(ut.dim), base.transition(n).matrix))
        for n in range(1, base.depth)
    ]
    return RingTower(levels, transitions, name=f"UT2({base.name})")


# ---------- morphism builders ----------


def _tagged(morphism: TowerMorphism, family: str) -> TowerMorphism:
    tag = {"family": family, "depth": morphism.depth, "char": morphism.field.characteristic}
    object.__setattr__(morphism, "builder", tag)
    object.__setattr__(morphism, "name", family)
    return morphism


def identity(field, depth: int) -> TowerMorphism:
    tower = truncated_polynomial_tower(field, depth)
    return _tagged(TowerMorphism(tower, tower, [identity_morphism(a) for a in tower.levels]), "identity")


def product_projection(field, depth: int) -> TowerMorphism:
    """k[t]/(t^n) × k -> k[t]/(t^n), projection onto the first factor."""
    target = truncated_polynomial_tower(field, depth)
    k = ground_algebra(field)
    source = product_tower(target, constant_tower(k, depth))
    maps = [factor_projection(r, s, k, 0) for r, s in zip(source.levels, target.levels)]
    return _tagged(TowerMorphism(source, target, maps), "product_projection")


def diagonal(field, depth: int) -> TowerMorphism:
    """k[t]/(t^n) -> k[t]/(t^n) × k[t]/(t^n)."""
    source = truncated_polynomial_tower(field, depth)
    target = product_tower(source, source)
    maps = [diagonal_morphism(a, b) for a, b in zip(source.levels, target.levels)]
    return _tagged(TowerMorphism(source, target, maps), "diagonal")


def levelwise_quotient(field, depth: int) -> TowerMorphism:
    """k[t]/(t^n) -> k, reduction modulo t."""
    source = truncated_polynomial_tower(field, depth)
    target = constant_tower(ground_algebra(field), depth)
    maps = []
    for r, s in zip(source.levels, target.levels):
        matrix = field.zeros((1, r.dim))
        matrix[0, 0] = field.one
        maps.append(AlgMorphism(r, s, matrix))
    return _tagged(TowerMorphism(source, target, maps), "levelwise_quotient")


def half_speed(field, depth: int) -> TowerMorphism:
    """k[t]/(t^n) -> k[t]/(t^ceil(n/2)); not strongly right taut once depth >= 3."""
    source = truncated_polynomial_tower(field, depth)
    target = polynomial_tower(field, [(n + 1) // 2 for n in range(1, depth + 1)], name="k[[t]] at half speed")
    maps = []
    for r, s in zip(source.levels, target.levels):
        matrix = field.zeros((s.dim, r.dim))
        matrix[:, : s.dim] = field.eye(s.dim)
        maps.append(AlgMorphism(r, s, matrix))
    return _tagged(TowerMorphism(source, target, maps), "half_speed")


def unit_inclusion(field, depth: int) -> TowerMorphism:
    """Constant k -> k[t]/(t^n)."""
    target = truncated_polynomial_tower(field, depth)
    source = constant_tower(ground_algebra(field), depth)
    maps = [unit_morphism(k, s) for k, s in zip(source.levels, target.levels)]
    return _tagged(TowerMorphism(source, target, maps), "unit_inclusion")


def upper_triangular_corner(field, depth: int, corner: str = "top") -> TowerMorphism:
    """UT_2(k[t]/(t^n)) -> k[t]/(t^n), [[a, b], [0, c]] -> a (top) or c (bottom)."""
    if corner not in ("top", "bottom"):
        raise TowerError(f"unknown corner {corner!r}")
    target = truncated_polynomial_tower(field, depth)
    source = upper_triangular_tower(target)
    maps = []
    for r, s in zip(source.levels, target.levels):
        selector = field.zeros((1, 3))
        selector[0, 0 if corner == "top" else 2] = field.one
        maps.append(AlgMorphism(r, s, kron(field, selector, field.eye(s.dim))))
    return _tagged(TowerMorphism(source, target, maps), f"upper_triangular_corner_{corner}")


def triangular_to_full(field, depth: int) -> TowerMorphism:
    """Constant UT_2(k) -> M_2(k): flat epimorphism that is not surjective."""
    ut, full = upper_triangular_algebra(field, 2), full_matrix_algebra(field, 2)
    inclusion = morphism_from_columns(ut, full, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    source, target = constant_tower(ut, depth), constant_tower(full, depth)
    return _tagged(TowerMorphism(source, target, [inclusion] * depth), "triangular_to_full")


def _corner(corner: str) -> Callable:
    return lambda field, depth: upper_triangular_corner(field, depth, corner)


FAMILIES: Dict[str, Callable] = {
    "identity": identity,
    "product_projection": product_projection,
    "diagonal": diagonal,
    "levelwise_quotient": levelwise_quotient,
    "half_speed": half_speed,
    "unit_inclusion": unit_inclusion,
    "upper_triangular_corner_top": _corner("top"),
    "upper_triangular_corner_bottom": _corner("bottom"),
    "triangular_to_full": triangular_to_full,
}

# least depth at which (strongly right taut, left proflat, proepimorphism) fails; None = never
EXPECTATIONS: Dict[str, Tuple[Optional[int], Optional[int], Optional[int]]] = {
    "identity": (None, None, None),
    "product_projection": (None, None, None),
    "diagonal": (None, None, 1),
    "levelwise_quotient": (None, 2, None),
    "half_speed": (3, 2, None),
    "unit_inclusion": (2, 2, 2),
    "upper_triangular_corner_top": (None, None, None),
    "upper_triangular_corner_bottom": (None, 1, None),
    "triangular_to_full": (None, None, None),
}

PREDICATES = ("strongly_right_taut", "left_proflat", "proepimorphism")

NONCOMMUTATIVE_FAMILIES = ("upper_triangular_corner_top", "upper_triangular_corner_bottom", "triangular_to_full")


def build(family: str, field, depth: int) -> TowerMorphism:
    try:
        builder = FAMILIES[family]
    except KeyError:
        raise TowerError(f"unknown tower family {family!r}; known: {', '.join(sorted(FAMILIES))}") from None
    if depth < 1:
        raise TowerError("depth must be positive")
    return builder(field, depth)


def classify(f: TowerMorphism) -> Dict[str, Verdict]:
    return {
        "strongly_right_taut": is_strongly_right_taut(f),
        "left_proflat": is_left_proflat(f),
        "proepimorphism": is_proepimorphism(f),
    }


def expected_predicates(family: str, depth: int) -> Dict[str, bool]:
    """Known answers for a builder family truncated at the given depth."""
    if family not in EXPECTATIONS:
        raise TowerError(f"unknown tower family {family!r}")
    return {name: fails is None or depth < fails for name, fails in zip(PREDICATES, EXPECTATIONS[family])}
