"""Theorem harness: runs the change-of-scalars statements on concrete tower morphisms.

Every check returns a VerificationReport. Records come in three kinds:

* ``theorem``: a statement that must hold; a failing record is a contradiction.
* ``negative_control``: an operation that must be refused or must fail on an
  instance violating its hypothesis; not failing is a contradiction.
* ``informational``: measured and reported, never asserted.

Checks whose own preconditions fail add a refusal instead of records.
"""
import itertools
import logging
from dataclasses import dataclass, field as dc_field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from codec import jsonable
from finalg import (
    AlgMorphism,
    FinAlgebra,
    Ideal,
    QuotientSpace,
    is_bijective,
    is_ring_epimorphism,
    kernel_cokernel_dims,
    kron,
    rref,
    solve,
)
from finmod import (
    FinModule,
    HomSpace,
    cyclic_module,
    direct_sum,
    free_module,
    generated_submodule,
    hom_module,
    quotient_module,
    regular_module,
    restrict_scalars,
    submodule,
    tensor_over,
    zero_module,
)
from functors import (
    PreconditionError,
    coextend_counit,
    coextend_discrete,
    coextend_system,
    coextend_top,
    coextend_unit,
    contraextend,
    contraextend_counit,
    contraextend_unit,
    extend_discrete,
    extend_top,
    restrict_discrete,
    restrict_system,
    source_over_target,
    target_over_source,
)
from systems import (
    DiscreteModule,
    LeftSystem,
    SystemAxiomError,
    contratensor,
    contratensor_map,
    discrete_level,
    free_system,
    is_flat_system,
    make_left_system,
    regular_discrete,
    same_tower,
)
from tower import (
    TowerMorphism,
    closure_matches_kernel,
    is_left_proflat,
    is_proepimorphism,
    is_strongly_right_taut,
)

logger = logging.getLogger("verify")


@dataclass
class CheckRecord:
    name: str
    relation: str
    left: Any
    right: Any
    passed: bool
    kind: str = "theorem"
    note: str = ""
    witness: Any = None

    @property
    def contradiction(self) -> bool:
        return self.kind != "informational" and not self.passed


@dataclass
class VerificationReport:
    scenario: str = ""
    seed: Optional[int] = None
    samples: Optional[int] = None
    depth: Optional[int] = None
    predicates: Dict[str, Any] = dc_field(default_factory=dict)
    records: List[CheckRecord] = dc_field(default_factory=list)
    refusals: List[Dict[str, Any]] = dc_field(default_factory=list)

    def record(self, name: str, relation: str, left: Any, right: Any, passed: bool, kind: str = "theorem",
               note: str = "", witness: Any = None) -> CheckRecord:
        rec = CheckRecord(name, relation, left, right, bool(passed), kind, note, witness)
        self.records.append(rec)
        if rec.contradiction:
            logger.warning("❌ %s: %s %s %s (%s)", name, left, relation, right, note)
        return rec

    def refuse(self, check: str, reason: str, level: Optional[int] = None):
        self.refusals.append({"check": check, "reason": reason, "level": level})
        logger.info("check %s refused: %s", check, reason)

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        for key, value in other.predicates.items():
            self.predicates.setdefault(key, value)
        self.records.extend(other.records)
        self.refusals.extend(other.refusals)
        return self

    @property
    def contradictions(self) -> List[CheckRecord]:
        return [r for r in self.records if r.contradiction]

    @property
    def passed(self) -> bool:
        return not self.contradictions and not self.refusals

    def exit_code(self) -> int:
        if self.contradictions:
            return 2
        if self.refusals:
            return 3
        return 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "samples": self.samples,
            "depth": self.depth,
            "predicates": jsonable(self.predicates),
            "checks": [
                {
                    "name": r.name,
                    "relation": r.relation,
                    "left": jsonable(r.left),
                    "right": jsonable(r.right),
                    "pass": r.passed,
                    "kind": r.kind,
                    "note": r.note,
                    "witness": jsonable(r.witness),
                }
                for r in self.records
            ],
            "refusals": jsonable(self.refusals),
            "summary": {
                "checks": len(self.records),
                "contradictions": len(self.contradictions),
                "refusals": len(self.refusals),
                "exit_code": self.exit_code(),
            },
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"name": r.name, "relation": r.relation, "left": str(jsonable(r.left)), "right": str(jsonable(r.right)),
             "pass": r.passed, "kind": r.kind, "note": r.note}
            for r in self.records
        ]
        return pd.DataFrame(rows, columns=["name", "relation", "left", "right", "pass", "kind", "note"])


def predicate_summary(f: TowerMorphism) -> Dict[str, Any]:
    out = {}
    for key, verdict in (("strongly_right_taut", is_strongly_right_taut(f)),
                         ("left_proflat", is_left_proflat(f)),
                         ("proepimorphism", is_proepimorphism(f))):
        out[key] = {"holds": verdict.holds, "level": verdict.level, "detail": verdict.detail,
                    "certified_depth": verdict.depth}
    return out


# ---------- samplers ----------


def random_matrix(field, rng: np.random.Generator, shape) -> np.ndarray:
    if field.characteristic:
        return field.array(rng.integers(0, field.characteristic, size=shape))
    return field.array(rng.integers(-2, 3, size=shape))


def random_module(algebra: FinAlgebra, side: str, rng: np.random.Generator, max_rank: int = 2) -> FinModule:
    """A cyclic A/I for a random one-generator ideal I, or a quotient of a free module of rank <= max_rank."""
    if rng.integers(0, 4) == 0:
        ideal = Ideal.generated(algebra, random_matrix(algebra.field, rng, (algebra.dim,)), side)
        module, _ = cyclic_module(algebra, ideal, side)
        return module
    if algebra.dim > 4:
        max_rank = 1
    free = free_module(algebra, int(rng.integers(1, max_rank + 1)), side)
    count = int(rng.integers(0, 3))
    relations = generated_submodule(free, random_matrix(algebra.field, rng, (count, free.dim)))
    module, _ = quotient_module(free, relations)
    return module


def random_projective(algebra: FinAlgebra, side: str, rng: np.random.Generator, attempts: int = 12) -> FinModule:
    """A·e (or e·A) for a random nonzero idempotent e, falling back to the regular module."""
    f = algebra.field
    for _ in range(attempts):
        e = random_matrix(f, rng, (algebra.dim,))
        if not np.any(e != 0) or not np.array_equal(algebra.mul(e, e), e):
            continue
        mult = algebra.right_matrix(e) if side == "left" else algebra.left_matrix(e)
        module, _ = submodule(regular_module(algebra, side), np.ascontiguousarray(mult.T))
        return module
    return regular_module(algebra, side)


def random_discrete(tower, rng: np.random.Generator) -> DiscreteModule:
    level = int(rng.integers(1, tower.depth + 1))
    return DiscreteModule(tower, level, random_module(tower.level(level), "right", rng))


def random_system(tower, rng: np.random.Generator) -> LeftSystem:
    return make_left_system(tower, random_module(tower.level(tower.depth), "left", rng), name="sample")


def random_flat_system(tower, rng: np.random.Generator) -> LeftSystem:
    top_algebra = tower.level(tower.depth)
    if rng.integers(0, 2):
        top = random_projective(top_algebra, "left", rng)
    else:
        top = free_module(top_algebra, int(rng.integers(1, 3)), "left")
    return make_left_system(tower, top, name="flat sample")


# ---------- canonical test modules ----------


def tensor_square(f_n: AlgMorphism, side: str) -> FinModule:
    """S ⊗_R S as a right (side="right") or left (side="left") S-module."""
    tensor = tensor_over(target_over_source(f_n), source_over_target(f_n))
    return tensor.right_outer if side == "right" else tensor.left_outer


def _extra_map(wide: HomSpace, narrow: HomSpace) -> Optional[np.ndarray]:
    for phi in wide.basis:
        if not narrow.contains(phi):
            return phi
    return None


# ---------- full faithfulness ----------


def check_ff_discrete(f: TowerMorphism, samples: int = 20, seed: int = 1) -> VerificationReport:
    """Hom over S versus Hom over R after restriction, for discrete S-modules."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    rng = np.random.default_rng(seed)
    taut = is_strongly_right_taut(f)
    epi = is_proepimorphism(f)
    pairs = []
    for m in range(1, f.depth + 1):
        regular = DiscreteModule(f.target, m, regular_module(f.target.level(m), "right"))
        square = DiscreteModule(f.target, m, tensor_square(f.level_map(m), "right"))
        pairs.append((f"canonical S_{m} -> S_{m}⊗S_{m}", regular, square))
    for i in range(samples):
        a, b = random_discrete(f.target, rng), random_discrete(f.target, rng)
        level = max(a.level, b.level)
        pairs.append((f"sample {i}", a.relevel(level), b.relevel(level)))
    all_equal = True
    for label, m_mod, n_mod in pairs:
        over_s = hom_module(m_mod.module, n_mod.module)
        over_r = hom_module(restrict_discrete(f, m_mod).module, restrict_discrete(f, n_mod).module)
        equal = over_s.dim == over_r.dim
        all_equal &= equal
        report.record(f"ff_discrete {label}", "dim Hom_S == dim Hom_R", over_s.dim, over_r.dim, equal,
                      kind="theorem" if taut and epi else "informational",
                      note="equal" if equal else "R-linear map that is not S-linear",
                      witness=None if equal else _extra_map(over_r, over_s))
    report.record("ff_discrete agrees with proepimorphism", "==", all_equal, epi.holds, all_equal == epi.holds,
                  kind="theorem" if taut else "informational",
                  note="fully faithful on sample" if all_equal else "not fully faithful")
    return report


def check_ff_separated(f: TowerMorphism, samples: int = 20, seed: int = 1) -> VerificationReport:
    """Hom over S versus Hom over R for left systems, at every truncation depth."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    taut = is_strongly_right_taut(f)
    if not taut:
        report.refuse("ff_separated", f"not strongly right taut: {taut.describe()}", taut.level)
        return report
    rng = np.random.default_rng(seed)
    epi = is_proepimorphism(f)
    proflat = is_left_proflat(f)
    triples = []
    for m in range(1, f.depth + 1):
        g = f if m == f.depth else f.truncate(m)
        free = free_system(g.target, 1)
        square = make_left_system(g.target, tensor_square(g.level_map(m), "left"), name="S⊗S")
        triples.append((f"canonical depth {m}", g, free, square, False))
    for i in range(samples):
        triples.append((f"sample {i}", f, random_system(f.target, rng), random_system(f.target, rng), False))
    if proflat:
        for i in range(max(1, samples // 2)):
            triples.append((f"flat sample {i}", f, random_flat_system(f.target, rng),
                            random_flat_system(f.target, rng), True))
    all_equal = flat_equal = True
    for label, g, p, q, flat in triples:
        over_s = hom_module(p.top, q.top)
        over_r = hom_module(restrict_system(g, p).top, restrict_system(g, q).top)
        equal = over_s.dim == over_r.dim
        all_equal &= equal
        if flat:
            flat_equal &= equal
        report.record(f"ff_separated {label}", "dim Hom_S == dim Hom_R", over_s.dim, over_r.dim, equal,
                      kind="theorem" if epi else "informational",
                      note="equal" if equal else "R-linear map that is not S-linear",
                      witness=None if equal else _extra_map(over_r, over_s))
    report.record("ff_separated agrees with proepimorphism", "==", all_equal, epi.holds, all_equal == epi.holds)
    if proflat:
        report.record("ff on flat systems agrees with proepimorphism", "==", flat_equal, epi.holds,
                      flat_equal == epi.holds)
    return report


# ---------- adjunctions ----------


def _expect_failure(report: VerificationReport, name: str, action: Callable, errors, kind: str = "negative_control"):
    try:
        action()
    except errors as exc:
        report.record(name, "refused", type(exc).__name__, "refused", True, kind=kind, note=str(exc))
        return
    report.record(name, "refused", "accepted", "refused", False, kind=kind)


def _triangles_contraextend(report: VerificationReport, f: TowerMorphism, p_top: FinModule, q_top: FinModule, label: str):
    fld = f.field
    # ε_{f^♯P} ∘ f^♯(η_P) = id
    tensor, eta = contraextend_unit(f, p_top)
    extended = tensor.left_outer
    outer, eps = contraextend_counit(f, extended)
    lifted = outer.induced_map(tensor, fld.eye(f.target.level(f.depth).dim), eta)
    first = fld.matmul(eps, lifted)
    report.record(f"(iii) triangle ε∘f^♯η {label}", "= id", first.shape, extended.dim,
                  np.array_equal(first, fld.eye(extended.dim)))
    # f_♯(ε_Q) ∘ η_{f_♯Q} = id
    restricted = restrict_scalars(q_top, f.level_map(f.depth))
    _, eta_q = contraextend_unit(f, restricted)
    _, eps_q = contraextend_counit(f, q_top)
    second = fld.matmul(eps_q, eta_q)
    report.record(f"(iii) triangle f_♯ε∘η {label}", "= id", second.shape, q_top.dim,
                  np.array_equal(second, fld.eye(q_top.dim)))


def _triangles_coextend(report: VerificationReport, f: TowerMorphism, p_top: FinModule, q_top: FinModule, label: str):
    fld, d = f.field, f.depth
    # ε_{f_♯Q} ∘ f_♯(η_Q) = id
    space, eta = coextend_unit(f, q_top)
    _, eps = coextend_counit(f, restrict_scalars(q_top, f.level_map(d)))
    first = fld.matmul(eps, eta)
    report.record(f"(iv) triangle ε∘η {label}", "= id", first.shape, q_top.dim,
                  np.array_equal(first, fld.eye(q_top.dim)))
    # f^♮(ε_P) ∘ η_{f^♮P} = id
    hom_p, coextended = coextend_top(f, p_top, d)
    _, eps_p = coextend_counit(f, p_top)
    hom2, eta_h = coextend_unit(f, coextended)
    if hom2.dim:
        pushed = hom_p.coordinates(np.stack([fld.matmul(eps_p, psi) for psi in hom2.basis]))
    else:
        pushed = fld.zeros((hom_p.dim, 0))
    second = fld.matmul(pushed, eta_h)
    report.record(f"(iv) triangle f^♮ε∘η {label}", "= id", second.shape, hom_p.dim,
                  np.array_equal(second, fld.eye(hom_p.dim)))
    # the counit is evaluation at f(1)
    one = fld.matmul(f.level_map(d).matrix, f.source.level(d).unit)
    evaluation = (np.stack([fld.matmul(phi, one) for phi in hom_p.basis], axis=1)
                  if hom_p.dim else fld.zeros((p_top.dim, 0)))
    report.record(f"(iv) counit is evaluation at f(1) {label}", "==", eps_p.shape, evaluation.shape,
                  np.array_equal(eps_p, evaluation))


def check_adjunction_suite(f: TowerMorphism, samples: int = 20, seed: int = 1) -> VerificationReport:
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    rng = np.random.default_rng(seed)
    taut = is_strongly_right_taut(f)
    proflat = is_left_proflat(f)
    d = f.depth

    for i in range(samples):
        m_mod, n_mod = random_discrete(f.source, rng), random_discrete(f.target, rng)
        level = max(m_mod.level, n_mod.level)
        m_mod, n_mod = m_mod.relevel(level), n_mod.relevel(level)
        restricted_n = restrict_discrete(f, n_mod)
        # (ii) restrict ⊣ coextend on discrete modules
        left = hom_module(restricted_n.module, m_mod.module).dim
        right = hom_module(n_mod.module, coextend_discrete(f, m_mod).module).dim
        report.record(f"(ii) Hom_R(f_⋄N, M) = Hom_S(N, f^⋄M) sample {i}", "==", left, right, left == right,
                      kind="theorem" if taut else "informational")
        if taut:
            # (i) extend ⊣ restrict on discrete modules
            left = hom_module(extend_discrete(f, m_mod).module, n_mod.module).dim
            right = hom_module(m_mod.module, restricted_n.module).dim
            report.record(f"(i) Hom_S(f^•M, N) = Hom_R(M, f_⋄N) sample {i}", "==", left, right, left == right)

    if not taut:
        rank_one = free_system(f.target, 1)
        _expect_failure(report, "(i) extend_discrete refused on a non-taut morphism",
                        lambda: extend_discrete(f, regular_discrete(f.source, 1)), PreconditionError)
        _expect_failure(report, "(iii) restrict_system of the free S-system fails the system axiom",
                        lambda: restrict_system(f, rank_one), SystemAxiomError)
        _expect_failure(report, "(iv) coextend_system refused on a non-taut morphism",
                        lambda: coextend_system(f, free_system(f.source, 1)), PreconditionError)
        _expect_failure(report, "(iv) levelwise Hom without tautness fails the system axiom",
                        lambda: coextend_system(f, free_system(f.source, 1), require_taut=False), SystemAxiomError)
        return report

    for i in range(samples):
        p, q = random_system(f.source, rng), random_system(f.target, rng)
        # (iii) contraextend ⊣ restrict on systems
        left = hom_module(contraextend(f, p).top, q.top).dim
        right = hom_module(p.top, restrict_system(f, q).top).dim
        report.record(f"(iii) Hom_S(f^♯P, Q) = Hom_R(P, f_♯Q) sample {i}", "==", left, right, left == right)
        # (iv) restrict ⊣ coextend on systems, at the top level
        _, coextended = coextend_top(f, p.top, d)
        left = hom_module(restrict_system(f, q).top, p.top).dim
        right = hom_module(q.top, coextended).dim
        report.record(f"(iv) Hom_R(f_♯Q, P) = Hom_S(Q, f^♮P) sample {i}", "==", left, right, left == right)
        if i < max(1, samples // 4):
            _triangles_contraextend(report, f, p.top, q.top, f"sample {i}")
            _triangles_coextend(report, f, p.top, q.top, f"sample {i}")

    # levelwise Hom as a system: asserted for proflat morphisms, reported otherwise
    try:
        coextended_free = coextend_system(f, free_system(f.source, 1))
        report.record("(iv) levelwise Hom_R(S_n, R_n) forms a system", "valid", coextended_free.dims(), "system",
                      True, kind="theorem" if proflat else "informational")
    except SystemAxiomError as exc:
        report.record("(iv) levelwise Hom_R(S_n, R_n) forms a system", "valid", f"level {exc.level}", "system",
                      False, kind="theorem" if proflat else "informational", note=str(exc))
    return report


# ---------- flatness ----------


def check_flat_preservation(f: TowerMorphism, samples: int = 10, seed: int = 1) -> VerificationReport:
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    taut = is_strongly_right_taut(f)
    if not taut:
        report.refuse("flat_preservation", f"not strongly right taut: {taut.describe()}", taut.level)
        return report
    rng = np.random.default_rng(seed)
    proflat = is_left_proflat(f)
    systems = [free_system(f.target, 1)] + [random_flat_system(f.target, rng) for _ in range(samples)]
    all_flat = True
    for i, q in enumerate(systems):
        label = "free rank 1" if i == 0 else f"sample {i}"
        flat_q = is_flat_system(q)
        report.record(f"flat_preservation {label} is flat over S", "flat", flat_q.holds, True, flat_q.holds)
        restricted = is_flat_system(restrict_system(f, q))
        all_flat &= restricted.holds
        report.record(f"flat_preservation {label} restricted", "flat", restricted.holds, proflat.holds,
                      True, kind="informational", note=restricted.describe())
    report.record("flat_preservation agrees with left proflatness", "==", all_flat, proflat.holds,
                  all_flat == proflat.holds)
    return report


def check_flat_exactness(f: TowerMorphism, samples: int = 5, seed: int = 1) -> VerificationReport:
    """Split sequences P' -> P' ⊕ P'' -> P'' of flat systems stay exact under contraextend and N ⊛ -."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    rng = np.random.default_rng(seed)
    fld = f.field
    for i in range(samples):
        first, second = random_flat_system(f.source, rng), random_flat_system(f.source, rng)
        middle = make_left_system(f.source, direct_sum(first.top, second.top), name="sum")
        e1, e2, e_mid = contraextend(f, first), contraextend(f, second), contraextend(f, middle)
        dims = [a + b for a, b in zip(e1.dims(), e2.dims())]
        report.record(f"contraextend keeps split sequence exact sample {i}", "dims add", e_mid.dims(), dims,
                      e_mid.dims() == dims)
        n_mod = random_discrete(f.source, rng)
        left = contratensor(n_mod, middle).dim
        right = contratensor(n_mod, first).dim + contratensor(n_mod, second).dim
        report.record(f"N ⊛ - keeps split sequence exact sample {i}", "dims add", left, right, left == right)
        # inclusion P' -> P' ⊕ P'' after base change stays injective at the top
        tensor_first = extend_top(f, first.top, f.depth)
        tensor_mid = extend_top(f, middle.top, f.depth)
        inclusion = np.concatenate([fld.eye(first.top.dim), fld.zeros((second.top.dim, first.top.dim))], axis=0)
        induced = tensor_mid.induced_map(tensor_first, fld.eye(f.target.level(f.depth).dim), inclusion)
        ker, _ = kernel_cokernel_dims(fld, induced)
        report.record(f"S ⊗ inclusion injective sample {i}", "kernel dim", ker, 0, ker == 0)
    return report


# ---------- contratensor and discreteness ----------


def check_contratensor_identity(f: TowerMorphism, samples: int = 20, seed: int = 1) -> VerificationReport:
    """dim f_⋄(N) ⊛_R P = dim N ⊛_S f^♯(P)."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    rng = np.random.default_rng(seed)
    for i in range(samples):
        n_mod, p = random_discrete(f.target, rng), random_system(f.source, rng)
        left = contratensor(restrict_discrete(f, n_mod), p).dim
        right = contratensor(n_mod, contraextend(f, p)).dim
        report.record(f"contratensor identity sample {i}", "==", left, right, left == right)
    return report


def check_contratensor_right_exact(f: TowerMorphism, samples: int = 10, seed: int = 1) -> VerificationReport:
    """N ⊛ K -> N ⊛ P -> N ⊛ P/K -> 0 is exact for K generated by one random top-level vector."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    rng = np.random.default_rng(seed)
    tower, fld = f.source, f.field
    for i in range(samples):
        p = random_system(tower, rng)
        rows = generated_submodule(p.top, random_matrix(fld, rng, (1, p.top.dim)))
        k_top, inclusion = submodule(p.top, rows)
        q_top, projection = quotient_module(p.top, rows)
        k = make_left_system(tower, k_top, name="K")
        q = make_left_system(tower, q_top, name="P/K")
        n_mod = random_discrete(tower, rng)
        a = contratensor_map(n_mod, k, p, inclusion)
        b = contratensor_map(n_mod, p, q, projection)
        ker_a, _ = kernel_cokernel_dims(fld, a)
        _, coker_b = kernel_cokernel_dims(fld, b)
        report.record(f"N ⊛ P -> N ⊛ P/K onto sample {i}", "cokernel dim", coker_b, 0, coker_b == 0)
        composite_zero = not np.any(fld.matmul(b, a) != 0)
        image_a = a.shape[1] - ker_a
        kernel_b = b.shape[1] - (b.shape[0] - coker_b)
        report.record(f"image N ⊛ K = kernel to N ⊛ P/K sample {i}", "==", image_a, kernel_b,
                      composite_zero and image_a == kernel_b,
                      note="" if composite_zero else "composite is not zero")
    return report


def check_discrete_quotients_tensor(f: TowerMorphism, samples: int = 0, seed: int = 1) -> VerificationReport:
    """For strongly right taut f, R_m ⊗_{R_d} S_d -> S_m, r ⊗ s -> f_m(r)·s is an isomorphism."""
    report = VerificationReport(seed=seed, depth=f.depth)
    taut = is_strongly_right_taut(f)
    if not taut:
        report.refuse("discrete_quotients_tensor", f"not strongly right taut: {taut.describe()}", taut.level)
        return report
    fld, d = f.field, f.depth
    s_top = source_over_target(f.level_map(d))
    for m in range(1, d + 1):
        r_m, s_m = f.source.level(m), f.target.level(m)
        cyclic = restrict_scalars(regular_module(r_m, "right"), f.source.projection(m))
        tensor = tensor_over(cyclic, s_top)
        to_level = f.target.projection(m).matrix
        ambient = np.concatenate([fld.matmul(s_m.left_matrix(f.level_map(m).matrix[:, a]), to_level)
                                  for a in range(r_m.dim)], axis=1)
        bijective = is_bijective(fld, tensor.space.induced(ambient))
        report.record(f"R_{m} ⊗ S_{d} ≅ S_{m}", "bijective", tensor.dim, s_m.dim, bijective)
    for m in range(1, f.depth + 1):
        closure = closure_matches_kernel(f, m)
        report.record(f"closure of f(I_{m})S equals J_{m}", "==", closure.detail, "equal", closure.holds)
    return report


def check_discreteness_levels(f: TowerMorphism, samples: int = 20, seed: int = 1) -> VerificationReport:
    """A discrete S-module and its restriction are annihilated at the same level (for taut f)."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    taut = is_strongly_right_taut(f)
    rng = np.random.default_rng(seed)
    for i in range(samples):
        n_mod = random_discrete(f.target, rng)
        left, right = discrete_level(n_mod), discrete_level(restrict_discrete(f, n_mod))
        report.record(f"discreteness level sample {i}", "==", left, right, left == right,
                      kind="theorem" if taut else "informational")
    return report


def check_reduction_structure(f: TowerMorphism, samples: int = 10, seed: int = 1) -> VerificationReport:
    """For Q in the image of restriction, R_n ⊗_{R_d} Q_d and S_n ⊗_{S_d} Q_d have equal dimensions."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    taut = is_strongly_right_taut(f)
    if not taut:
        report.refuse("reduction_structure", f"not strongly right taut: {taut.describe()}", taut.level)
        return report
    rng = np.random.default_rng(seed)
    for i in range(samples):
        q = random_system(f.target, rng)
        over_r = make_left_system(f.source, restrict_scalars(q.top, f.level_map(f.depth)))
        report.record(f"I⋇Q = J⋇Q sample {i}", "==", over_r.dims(), q.dims(), over_r.dims() == q.dims())
    return report


# ---------- descent ----------


@dataclass
class DescentResult:
    system: Optional[LeftSystem]
    level: Optional[int] = None
    kernel_dim: int = 0
    cokernel_dim: int = 0

    @property
    def descended(self) -> bool:
        return self.system is not None


def descent_preconditions(f: TowerMorphism) -> Dict[str, Any]:
    return {
        "left_proflat": is_left_proflat(f).holds,
        "proepimorphism": is_proepimorphism(f).holds,
        "forgetful_fully_faithful": f.source.flags.forgetful_fully_faithful,
    }


def descend_structure(f: TowerMorphism, q: LeftSystem) -> DescentResult:
    """Recover an S-system structure on an R-system through the unit Q_n -> S_n ⊗_{R_n} Q_n.

    When every unit is bijective the S-action is transported onto Q's own coordinates,
    so restricting the result gives back Q exactly.
    """
    conditions = descent_preconditions(f)
    if not all(conditions.values()):
        failing = ", ".join(k for k, v in conditions.items() if not v)
        raise PreconditionError(f"descent needs a left proflat proepimorphism over a declared tower: {failing} fails")
    if not same_tower(q.tower, f.source):
        raise PreconditionError("system does not live over the source tower")
    fld = f.field
    levels = []
    for n, module in enumerate(q.levels, start=1):
        tensor = extend_top(f, module, n)
        unit = f.target.level(n).unit.reshape(-1, 1)
        eta = tensor.space.project(kron(fld, unit, fld.eye(module.dim)))
        ker, coker = kernel_cokernel_dims(fld, eta)
        if ker or coker:
            logger.debug("descent refused at level %d: kernel %d, cokernel %d", n, ker, coker)
            return DescentResult(None, n, ker, coker)
        if module.dim:
            inverse = solve(fld, eta, fld.eye(eta.shape[0]))
            action = np.stack([fld.matmul(inverse, fld.matmul(lam, eta)) for lam in tensor.left_outer.action])
        else:
            action = fld.zeros((f.target.level(n).dim, 0, 0))
        levels.append(FinModule(f.target.level(n), "left", action))
    return DescentResult(LeftSystem(f.target, levels, q.transitions, name=f"descended({q.name})"))


def same_structure(a: LeftSystem, b: LeftSystem) -> bool:
    """Identical action matrices and transitions at every level."""
    return (a.dims() == b.dims()
            and all(np.array_equal(x.action, y.action) for x, y in zip(a.levels, b.levels))
            and all(np.array_equal(s, t) for s, t in zip(a.transitions, b.transitions)))


def enumerate_descent_structures(f_n: AlgMorphism, module: FinModule, limit: int = 1 << 16) -> List[np.ndarray]:
    """All left S_n-actions on the space of a left R_n-module that restrict to its R_n-action.

    Exhaustive over a prime field: the action on a complement of im(f_n) is enumerated
    and every candidate is checked for the unit and multiplicativity axioms in one batch.
    """
    fld = module.field
    p = fld.characteristic
    if not p:
        raise ValueError("exhaustive enumeration needs a finite field")
    s_alg, m = f_n.target, module.dim
    d_s = s_alg.dim
    if m == 0:
        return [np.zeros((d_s, 0, 0), dtype=np.int64)]
    for k in f_n.kernel().basis:
        if np.any(module.act_by(k) != 0):
            return []
    _, pivots = rref(fld, f_n.matrix)
    image = f_n.matrix[:, pivots]
    space = QuotientSpace.from_relations(fld, np.ascontiguousarray(image.T), d_s)
    complement = list(space.complement)
    basis = np.concatenate([image, fld.eye(d_s)[:, complement]], axis=1)
    coords = solve(fld, basis, fld.eye(d_s))
    free_entries = len(complement) * m * m
    if p ** free_entries > limit:
        raise ValueError(f"{p}^{free_entries} candidate actions exceed the limit {limit}")
    known = np.stack([module.action[i] for i in pivots]) if pivots else np.zeros((0, m, m), dtype=np.int64)
    digits = np.array(list(itertools.product(range(p), repeat=free_entries)), dtype=np.int64)
    count = digits.shape[0]
    unknown = digits.reshape(count, len(complement), m, m)
    generators = np.concatenate([np.broadcast_to(known, (count,) + known.shape), unknown], axis=1)
    # action of e_s = Σ_b coords[b, s] · (action of basis vector b)
    actions = np.mod(np.einsum("bs,nbij->nsij", coords, generators), p)
    unit_action = np.mod(np.einsum("s,nsij->nij", s_alg.unit, actions), p)
    ok = np.all(unit_action == np.eye(m, dtype=np.int64), axis=(1, 2))
    products = np.mod(np.einsum("nsij,ntjk->nstik", actions, actions), p)
    of_products = np.mod(np.einsum("stk,nkij->nstij", s_alg.table, actions), p)
    ok &= np.all(products == of_products, axis=(1, 2, 3, 4))
    return [actions[i] for i in np.flatnonzero(ok)]


def check_descent(f: TowerMorphism, samples: int = 10, seed: int = 1) -> VerificationReport:
    """Pseudopullback round trips: descend(restrict(Q)) = Q and restrict(descend(Q)) = Q."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    conditions = descent_preconditions(f)
    if not all(conditions.values()):
        failing = ", ".join(k for k, v in conditions.items() if not v)
        report.refuse("descent", f"preconditions fail: {failing}")
        _expect_failure(report, "descend_structure refused without its hypotheses",
                        lambda: descend_structure(f, free_system(f.source, 1)), PreconditionError)
        return report
    rng = np.random.default_rng(seed)
    candidates = [random_system(f.target, rng) for _ in range(samples)]
    candidates += [random_flat_system(f.target, rng) for _ in range(max(1, samples // 2))]
    candidates.append(make_left_system(f.target, free_module(f.target.level(f.depth), 0, "left"), name="zero"))
    for i, q_s in enumerate(candidates):
        q = restrict_system(f, q_s)
        result = descend_structure(f, q)
        report.record(f"descent of restricted sample {i}", "descends", result.descended, True, result.descended)
        if not result.descended:
            continue
        back = restrict_system(f, result.system)
        report.record(f"restrict ∘ descend = id sample {i}", "identical", back.dims(), q.dims(), same_structure(back, q))
        report.record(f"descended structure is unique sample {i}", "identical", result.system.dims(), q_s.dims(),
                      same_structure(result.system, q_s))
    free = free_system(f.source, 1)
    result = descend_structure(f, free)
    bijective = all(is_bijective(f.field, g.matrix) for g in f.maps)
    report.record("free R-system descends iff every f_n is bijective", "==", result.descended, bijective,
                  result.descended == bijective,
                  note="" if result.descended else f"refused at level {result.level}: kernel {result.kernel_dim}, "
                                                   f"cokernel {result.cokernel_dim}")
    return report


def check_descent_criterion(f_n: AlgMorphism, modules: Sequence[FinModule], limit: int = 1 << 16,
                            kind: str = "theorem", label: str = "") -> VerificationReport:
    """Unit bijectivity against exhaustive enumeration of S-actions, one record per module.

    Modules with too many candidate actions get an informational record instead.
    """
    report = VerificationReport()
    fld = f_n.target.field
    bimodule = target_over_source(f_n)
    for i, module in enumerate(modules):
        try:
            structures = enumerate_descent_structures(f_n, module, limit)
        except ValueError as e:
            report.record(f"descent criterion {label}module {i}", "enumerated", module.dim, limit, True,
                          kind="informational", note=str(e))
            continue
        tensor = tensor_over(bimodule, module)
        eta = tensor.space.project(kron(fld, f_n.target.unit.reshape(-1, 1), fld.eye(module.dim)))
        criterion = is_bijective(fld, eta)
        report.record(f"descent criterion {label}module {i}", "==", criterion, bool(structures),
                      criterion == bool(structures), kind=kind, note=f"{len(structures)} structure(s)")
        report.record(f"descent structure unique {label}module {i}", "<= 1", len(structures), 1,
                      len(structures) <= 1, kind=kind)
    return report


def check_descent_levels(f: TowerMorphism, samples: int = 10, seed: int = 1) -> VerificationReport:
    """The descent criterion at every level, on the zero module and random rank-one quotients of R_n."""
    report = VerificationReport(seed=seed, samples=samples, depth=f.depth)
    if not f.field.characteristic:
        report.refuse("descent_criterion", "exhaustive enumeration needs a finite field")
        return report
    rng = np.random.default_rng(seed)
    for n in range(1, f.depth + 1):
        f_n = f.level_map(n)
        epi = is_ring_epimorphism(f_n)
        modules = [zero_module(f_n.source)]
        modules += [random_module(f_n.source, "left", rng, max_rank=1) for _ in range(max(1, samples // 4))]
        logger.debug("descent criterion at level %d on %d modules (ring epimorphism: %s)", n, len(modules), epi.holds)
        report.merge(check_descent_criterion(f_n, modules, limit=1 << 10,
                                             kind="theorem" if epi else "informational", label=f"level {n} "))
    return report


CHECKS: Dict[str, Callable[..., VerificationReport]] = {
    "ff_discrete": check_ff_discrete,
    "ff_separated": check_ff_separated,
    "adjunction_suite": check_adjunction_suite,
    "flat_preservation": check_flat_preservation,
    "flat_exactness": check_flat_exactness,
    "contratensor_identity": check_contratensor_identity,
    "discrete_quotients_tensor": check_discrete_quotients_tensor,
    "discreteness_levels": check_discreteness_levels,
    "reduction_structure": check_reduction_structure,
    "descent": check_descent,
    "descent_criterion": check_descent_levels,
    "contratensor_right_exact": check_contratensor_right_exact,
}


def run_checks(f: TowerMorphism, names: Sequence[str], samples: int = 20, seed: int = 1,
               scenario: str = "") -> VerificationReport:
    report = VerificationReport(scenario=scenario, seed=seed, samples=samples, depth=f.depth)
    report.predicates = predicate_summary(f)
    for name in names:
        try:
            check = CHECKS[name]
        except KeyError:
            raise ValueError(f"unknown check {name!r}; known: {', '.join(sorted(CHECKS))}") from None
        logger.info("🚀 running %s on %s (depth %d)", name, f.name or "?", f.depth)
        report.merge(check(f, samples=samples, seed=seed))
    return report
