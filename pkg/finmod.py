import logging
from dataclasses import dataclass, field as dc_field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from finalg import (
    AlgMorphism,
    FinAlgebra,
    Ideal,
    QuotientSpace,
    Verdict,
    balanced_tensor_space,
    infeasibility_certificate,
    kron,
    nullspace,
    row_space,
    same_algebra,
    solve,
)

logger = logging.getLogger("finmod")

MODULE_SIDES = ("left", "right")


class ModuleError(ValueError):
    """Invalid module data or mismatched algebras/sides."""


def _products_with(field, mat: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """mat @ stack[j] for every j, returned with shape (len(stack), m, m)."""
    n, m, _ = stack.shape
    if n == 0 or m == 0:
        return field.zeros(stack.shape)
    wide = stack.transpose(1, 0, 2).reshape(m, n * m)
    return field.matmul(mat, wide).reshape(m, n, m).transpose(1, 0, 2)


@dataclass(frozen=True, eq=False)
class FinModule:
    """Finite module over a FinAlgebra; action[i] is the matrix of the action of e_i."""

    algebra: FinAlgebra
    side: str
    action: np.ndarray
    name: str = ""

    def __post_init__(self):
        if self.side not in MODULE_SIDES:
            raise ModuleError(f"unknown module side {self.side!r}")
        d = self.algebra.dim
        if self.action.ndim != 3 or self.action.shape[0] != d or self.action.shape[1] != self.action.shape[2]:
            raise ModuleError(f"action of shape {self.action.shape} does not fit an algebra of dim {d}")
        problem = self.axiom_violation()
        if problem:
            raise ModuleError(problem)

    @property
    def field(self):
        return self.algebra.field

    @property
    def dim(self) -> int:
        return self.action.shape[1]

    def axiom_violation(self) -> Optional[str]:
        f, d, m = self.field, self.algebra.dim, self.dim
        if m == 0:
            return None
        unit_action = f.matmul(self.algebra.unit, self.action.reshape(d, m * m)).reshape(m, m)
        if not np.array_equal(unit_action, f.eye(m)):
            return "unit does not act as the identity"
        of_products = f.matmul(self.algebra.table.reshape(d * d, d), self.action.reshape(d, m * m)).reshape(d, d, m, m)
        for i in range(d):
            if self.side == "left":
                products = _products_with(f, self.action[i], self.action)
            else:
                # m·(e_i e_j) = (m·e_i)·e_j, so ρ(e_i e_j) = ρ(e_j) ρ(e_i)
                products = np.stack([f.matmul(self.action[j], self.action[i]) for j in range(d)])
            bad = np.argwhere(np.any(products != of_products[i], axis=(1, 2)))
            if bad.size:
                return f"{self.side} action is not multiplicative on (e{i}, e{int(bad[0][0])})"
        return None

    def act_by(self, a: np.ndarray) -> np.ndarray:
        """Matrix of the action of an arbitrary algebra element a."""
        f, d, m = self.field, self.algebra.dim, self.dim
        return f.matmul(a, self.action.reshape(d, m * m)).reshape(m, m)

    def __repr__(self) -> str:
        return f"FinModule({self.side} over {self.algebra.name or '?'}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class Bimodule:
    """Left module over left_algebra and right module over right_algebra with commuting actions."""

    left_algebra: FinAlgebra
    right_algebra: FinAlgebra
    left_action: np.ndarray
    right_action: np.ndarray
    name: str = ""
    left_module: FinModule = dc_field(init=False, repr=False)
    right_module: FinModule = dc_field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "left_module", FinModule(self.left_algebra, "left", self.left_action, self.name))
        object.__setattr__(self, "right_module", FinModule(self.right_algebra, "right", self.right_action, self.name))
        if self.left_module.dim != self.right_module.dim:
            raise ModuleError("left and right actions live on spaces of different dimension")
        f = self.left_algebra.field
        for i, lam in enumerate(self.left_action):
            for j, rho in enumerate(self.right_action):
                if not np.array_equal(f.matmul(lam, rho), f.matmul(rho, lam)):
                    raise ModuleError(f"left action of e{i} does not commute with right action of e{j}")

    @property
    def dim(self) -> int:
        return self.left_module.dim

    @property
    def field(self):
        return self.left_algebra.field


ModuleLike = Union[FinModule, Bimodule]


# ---------- constructors ----------


def regular_module(algebra: FinAlgebra, side: str = "left") -> FinModule:
    action = algebra.left_matrices() if side == "left" else algebra.right_matrices()
    return FinModule(algebra, side, action, name=algebra.name)


def zero_module(algebra: FinAlgebra, side: str = "left") -> FinModule:
    return FinModule(algebra, side, algebra.field.zeros((algebra.dim, 0, 0)), name="0")


def _block_diagonal(field, blocks: Sequence[np.ndarray]) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = field.zeros((n, n))
    offset = 0
    for b in blocks:
        k = b.shape[0]
        out[offset:offset + k, offset:offset + k] = b
        offset += k
    return out


def direct_sum(*modules: FinModule) -> FinModule:
    if not modules:
        raise ModuleError("direct_sum needs at least one summand")
    first = modules[0]
    for m in modules[1:]:
        if m.side != first.side or not same_algebra(m.algebra, first.algebra):
            raise ModuleError("direct sum of modules over different algebras or sides")
    f = first.field
    action = np.stack([
        _block_diagonal(f, [m.action[i] for m in modules]) for i in range(first.algebra.dim)
    ])
    return FinModule(first.algebra, first.side, action, name=" ⊕ ".join(m.name or "?" for m in modules))


def free_module(algebra: FinAlgebra, rank_: int, side: str = "left") -> FinModule:
    """A^rank; basis element e_i of copy k sits at index k·dim A + i."""
    if rank_ == 0:
        return zero_module(algebra, side)
    return direct_sum(*([regular_module(algebra, side)] * rank_))


def restrict_scalars(module: FinModule, f: AlgMorphism) -> FinModule:
    """View a module over f.target as a module over f.source."""
    if not same_algebra(module.algebra, f.target):
        raise ModuleError("restriction along a morphism whose target is not the module's algebra")
    fld, dt, m = module.field, f.target.dim, module.dim
    action = fld.matmul(f.matrix.T, module.action.reshape(dt, m * m)).reshape(f.source.dim, m, m)
    return FinModule(f.source, module.side, action, name=module.name)


def factor_through(module: FinModule, projection: AlgMorphism) -> FinModule:
    """A module over A killed by ker(A -> Q) as a module over Q."""
    if not same_algebra(module.algebra, projection.source):
        raise ModuleError("projection does not start at the module's algebra")
    f, m = module.field, module.dim
    da = module.algebra.dim
    for k in projection.kernel().basis:
        if np.any(module.act_by(k) != 0):
            raise ModuleError("module is not annihilated by the kernel of the projection")
    preimages = solve(f, projection.matrix, f.eye(projection.target.dim))
    if preimages is None:
        raise ModuleError("factor_through needs a surjective projection")
    action = f.matmul(preimages.T, module.action.reshape(da, m * m)).reshape(projection.target.dim, m, m)
    return FinModule(projection.target, module.side, action, name=module.name)


def submodule(module: FinModule, rows: np.ndarray) -> Tuple[FinModule, np.ndarray]:
    """Submodule spanned by the given rows, with its inclusion matrix (dim M × dim sub)."""
    f = module.field
    basis = row_space(f, rows.reshape(-1, module.dim)) if rows.size else f.zeros((0, module.dim))
    inclusion = np.ascontiguousarray(basis.T)
    k = basis.shape[0]
    action = f.zeros((module.algebra.dim, k, k))
    for i, rho in enumerate(module.action):
        if k == 0:
            break
        restricted = solve(f, inclusion, f.matmul(rho, inclusion))
        if restricted is None:
            raise ModuleError(f"subspace is not stable under the action of e{i}")
        action[i] = restricted
    return FinModule(module.algebra, module.side, action), inclusion


def quotient_module(module: FinModule, rows: np.ndarray) -> Tuple[FinModule, np.ndarray]:
    """M / span(rows), with the projection matrix (dim quotient × dim M)."""
    f = module.field
    relations = rows.reshape(-1, module.dim) if rows.size else f.zeros((0, module.dim))
    space = QuotientSpace.from_relations(f, relations, module.dim)
    for i, rho in enumerate(module.action):
        moved = f.matmul(relations, rho.T)
        if any(np.any(space.project(v) != 0) for v in moved):
            raise ModuleError(f"relations are not stable under the action of e{i}")
    action = np.stack([f.matmul(space.projection, f.matmul(rho, space.section)) for rho in module.action])
    return FinModule(module.algebra, module.side, action), space.projection


def generated_submodule(module: FinModule, vectors: np.ndarray) -> np.ndarray:
    """Echelon basis of the smallest submodule containing the given vectors."""
    f = module.field
    span = row_space(f, vectors.reshape(-1, module.dim)) if vectors.size else f.zeros((0, module.dim))
    while True:
        moved = [f.matmul(span, rho.T) for rho in module.action]
        grown = row_space(f, np.concatenate([span] + moved, axis=0)) if span.shape[0] else span
        if grown.shape[0] == span.shape[0]:
            return grown
        span = grown


def generating_set(module: FinModule) -> List[np.ndarray]:
    """Greedy generating set: basis vectors taken in order, skipping those already generated."""
    f = module.field
    gens: List[np.ndarray] = []
    covered = f.zeros((0, module.dim))
    for j in range(module.dim):
        if covered.shape[0] == module.dim:
            break
        e = f.eye(module.dim)[j]
        if covered.shape[0] and solve(f, covered.T, e) is not None:
            continue
        gens.append(e)
        covered = generated_submodule(module, np.stack(gens))
    return gens


def cyclic_module(algebra: FinAlgebra, ideal: Ideal, side: str = "left") -> Tuple[FinModule, np.ndarray]:
    """A/I as a one-sided module (I must be closed on that side)."""
    return quotient_module(regular_module(algebra, side), ideal.basis)


# ---------- Hom ----------


@dataclass(frozen=True, eq=False)
class HomSpace:
    """Basis of module maps source -> target; basis[b] is a (dim target × dim source) matrix."""

    source: FinModule
    target: FinModule
    basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def field(self):
        return self.source.field

    def flat_basis(self) -> np.ndarray:
        """Basis as columns of vec(F) (row-major)."""
        return np.ascontiguousarray(self.basis.reshape(self.dim, self.target.dim * self.source.dim).T)

    def coordinates(self, maps: np.ndarray) -> np.ndarray:
        """Coordinates (dim × count) of a stack of maps in this basis."""
        f = self.field
        count = maps.shape[0] if maps.ndim == 3 else 1
        stack = maps.reshape(count, self.target.dim * self.source.dim)
        if self.dim == 0:
            if np.any(stack != 0):
                raise ModuleError("map is not a module homomorphism")
            return f.zeros((0, stack.shape[0]))
        coords = solve(f, self.flat_basis(), np.ascontiguousarray(stack.T))
        if coords is None:
            raise ModuleError("map is not a module homomorphism")
        return coords

    def element(self, coords: np.ndarray) -> np.ndarray:
        f = self.field
        flat = f.matmul(self.flat_basis(), coords) if self.dim else f.zeros(self.target.dim * self.source.dim)
        return flat.reshape(self.target.dim, self.source.dim)

    def contains(self, matrix: np.ndarray) -> bool:
        try:
            self.coordinates(matrix)
        except ModuleError:
            return False
        return True


def intertwining_system(source: FinModule, target: FinModule) -> np.ndarray:
    """Matrix whose nullspace is vec(Hom(source, target)), F row-major of shape (dim target, dim source)."""
    f = source.field
    n, m = target.dim, source.dim
    blocks = [
        f.normalize(kron(f, rn, f.eye(m)) - kron(f, f.eye(n), rm.T))
        for rn, rm in zip(target.action, source.action)
    ]
    if not blocks or n * m == 0:
        return f.zeros((0, n * m))
    return np.concatenate(blocks, axis=0)


def hom_module(source: FinModule, target: FinModule) -> HomSpace:
    if source.side != target.side:
        raise ModuleError(f"Hom between a {source.side} and a {target.side} module")
    if not same_algebra(source.algebra, target.algebra):
        raise ModuleError("Hom between modules over different algebras")
    f = source.field
    n, m = target.dim, source.dim
    system = intertwining_system(source, target)
    kernel = nullspace(f, system)
    basis = kernel.reshape(kernel.shape[0], n, m)
    logger.debug("Hom(%s, %s): dim %d", source, target, basis.shape[0])
    return HomSpace(source, target, basis)


def hom_bimodule(source: Bimodule, target: FinModule, over: str) -> Tuple[HomSpace, FinModule]:
    """Hom over one side of a bimodule, with the outer action of the other side materialized.

    over="right": Hom over the right algebra; (φ·s)(x) = φ(s·x) makes it a right module over
    the left algebra. over="left": Hom over the left algebra; (s·φ)(x) = φ(x·s) makes it a
    left module over the right algebra.
    """
    f = target.field
    if over == "right":
        space = hom_module(source.right_module, target)
        outer_algebra, outer_action, side = source.left_algebra, source.left_action, "right"
    elif over == "left":
        space = hom_module(source.left_module, target)
        outer_algebra, outer_action, side = source.right_algebra, source.right_action, "left"
    else:
        raise ModuleError(f"unknown side {over!r}")
    k = space.dim
    action = f.zeros((outer_algebra.dim, k, k))
    if k:
        for i, x in enumerate(outer_action):
            moved = np.stack([f.matmul(phi, x) for phi in space.basis])
            action[i] = space.coordinates(moved)
    return space, FinModule(outer_algebra, side, action)


# ---------- tensor ----------


@dataclass(frozen=True, eq=False)
class TensorProduct:
    """M ⊗_A N as a quotient of M ⊗_k N (index a·dim N + b for m_a ⊗ n_b)."""

    left: FinModule
    right: FinModule
    space: QuotientSpace
    left_outer: Optional[FinModule] = None
    right_outer: Optional[FinModule] = None

    @property
    def dim(self) -> int:
        return self.space.dim

    @property
    def field(self):
        return self.left.field

    def element(self, m: np.ndarray, n: np.ndarray) -> np.ndarray:
        f = self.field
        return self.space.project(f.normalize(np.multiply.outer(m, n).reshape(-1)))

    def induced_map(self, source: "TensorProduct", left_map: np.ndarray, right_map: np.ndarray) -> np.ndarray:
        """Matrix of g ⊗ h: source -> self for factor maps g (left) and h (right)."""
        f = self.field
        return self.space.project(f.matmul(kron(f, left_map, right_map), source.space.section))


def _one_sided(module: ModuleLike, side: str) -> FinModule:
    if isinstance(module, Bimodule):
        return module.right_module if side == "right" else module.left_module
    return module


def tensor_over(m: ModuleLike, n: ModuleLike) -> TensorProduct:
    """Balanced tensor product of a right A-module with a left A-module.

    When m is a bimodule its left action passes to the result (left_outer); when n is a
    bimodule its right action passes to the result (right_outer).
    """
    right_part = _one_sided(m, "right")
    left_part = _one_sided(n, "left")
    if right_part.side != "right" or left_part.side != "left":
        raise ModuleError("tensor_over expects a right module and a left module")
    if not same_algebra(right_part.algebra, left_part.algebra):
        raise ModuleError("tensor_over of modules over different algebras")
    f = right_part.field
    dm, dn = right_part.dim, left_part.dim
    space = balanced_tensor_space(f, list(right_part.action), list(left_part.action), dm, dn)
    left_outer = right_outer = None
    if isinstance(m, Bimodule):
        action = np.stack([
            f.matmul(space.projection, f.matmul(kron(f, lam, f.eye(dn)), space.section)) for lam in m.left_action
        ])
        left_outer = FinModule(m.left_algebra, "left", action)
    if isinstance(n, Bimodule):
        action = np.stack([
            f.matmul(space.projection, f.matmul(kron(f, f.eye(dm), rho), space.section)) for rho in n.right_action
        ])
        right_outer = FinModule(n.right_algebra, "right", action)
    return TensorProduct(right_part, left_part, space, left_outer, right_outer)


# ---------- flatness ----------


def cover_map(module: FinModule, generators: Sequence[np.ndarray]) -> np.ndarray:
    """Surjection A^g -> M onto the given generators; column k·dim A + i is e_i acting on m_k."""
    f = module.field
    cols = [f.matmul(rho, g) for g in generators for rho in module.action]
    if not cols:
        return f.zeros((module.dim, 0))
    return np.stack(cols, axis=1)


def is_flat(module: FinModule, spanning: str = "minimal") -> Verdict:
    """Flat ⟺ projective for finite modules; decided by solving π∘σ = id with σ a module map.

    spanning="minimal" covers M by a greedy generating set, spanning="basis" by its whole basis.
    On success the witness holds the splitting σ; otherwise a certificate y with y·A = 0 and
    y·b ≠ 0 for the affine system A·vec(σ) = b.
    """
    f = module.field
    m = module.dim
    if m == 0:
        return Verdict(True, detail="zero module")
    if spanning == "basis":
        gens = list(f.eye(m))
    else:
        gens = generating_set(module)
    free = free_module(module.algebra, len(gens), module.side)
    pi = cover_map(module, gens)
    intertwine = intertwining_system(module, free)
    splitting_rows = kron(f, pi, f.eye(m))
    system = np.concatenate([intertwine, splitting_rows], axis=0)
    rhs = np.concatenate([f.zeros(intertwine.shape[0]), f.eye(m).reshape(-1)])
    x = solve(f, system, rhs)
    detail = f"{len(gens)} generator(s), free cover of dim {free.dim}"
    if x is not None:
        return Verdict(True, detail=detail, witness={"splitting": x.reshape(free.dim, m), "cover": pi})
    certificate = infeasibility_certificate(f, system, rhs)
    logger.debug("module %s is not projective (%s)", module, detail)
    return Verdict(False, detail=detail, witness={"certificate": certificate, "cover": pi})


def annihilator_submodule(module: FinModule, ideal: Ideal) -> Tuple[FinModule, np.ndarray]:
    """{x ∈ M : x·I = 0} (or I·x = 0 for left modules) with its inclusion matrix."""
    if not same_algebra(module.algebra, ideal.parent):
        raise ModuleError("ideal lives in a different algebra")
    f = module.field
    if ideal.rank == 0 or module.dim == 0:
        return submodule(module, f.eye(module.dim))
    stacked = np.concatenate([module.act_by(a) for a in ideal.basis], axis=0)
    return submodule(module, nullspace(f, stacked))
