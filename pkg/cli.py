import argparse
import hashlib
import logging
import os
import re
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

try:
    from dotenv import load_dotenv
except Exception:  # pragma: no cover - optional dev dependency
    load_dotenv = None

if load_dotenv is not None:
    load_dotenv()

from codec import (
    CodecError,
    dumps,
    jsonable,
    load_json,
    load_morphism,
    load_object,
    load_tower,
    object_to_json,
    tower_morphism_from_json,
    tower_morphism_to_json,
    write_json,
)
from finalg import MAX_PRIME, AlgebraError, get_field
from finmod import ModuleError
from functors import FunctorTag, PreconditionError, apply, level_dims
from serieslab import valuation_table
from systems import LeftSystem, SystemAxiomError, nonseparated_kernel_dims
from tower import (
    FAMILIES,
    NONCOMMUTATIVE_FAMILIES,
    HypothesisFlags,
    TowerError,
    TowerMorphism,
    build,
    expected_predicates,
)
from verify import CHECKS, VerificationReport, predicate_summary, run_checks

logger = logging.getLogger("contratower")

DEFAULT_CHECKS = ["ff_discrete", "ff_separated", "adjunction_suite", "contratensor_identity", "flat_preservation",
                  "descent"]

DEFAULT_CORPUS_SPEC: Dict[str, Any] = {
    "families": [f for f in FAMILIES if f not in NONCOMMUTATIVE_FAMILIES],
    "include_noncommutative": True,
    "count": 40,
    "max_depth": 4,
    "max_dim": 6,
    "chars": [2, 3],
    "checks": DEFAULT_CHECKS,
    "samples": 20,
}

# checks that refuse to run when the morphism is not strongly right taut
TAUT_ONLY_CHECKS = ("ff_separated", "flat_preservation", "discrete_quotients_tensor", "reduction_structure")


def _env_int(name: str, default: int) -> int:
    try:
        return int(os.environ.get(name, default))
    except ValueError:
        logger.warning("ignoring non-integer %s=%r", name, os.environ.get(name))
        return default


def _char(args) -> int:
    return args.char if args.char is not None else _env_int("CONTRA_CHAR", 2)


# ---------- argparse validators ----------


def validate_char_arg(value: str) -> int:
    """Argparse 'type' validator for --char: 0 or a prime below 2^31."""
    try:
        char = int(value)
        get_field(char)
    except (ValueError, AlgebraError):
        raise argparse.ArgumentTypeError(f"characteristic must be 0 or a prime below {MAX_PRIME}, got {value!r}")
    return char


def validate_positive_arg(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        n = 0
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value!r}")
    return n


def validate_nonnegative_arg(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        n = -1
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value!r}")
    return n


def validate_levels_arg(value: str) -> List[int]:
    """'2..6' -> [2, 3, 4, 5, 6]; a single number is accepted too."""
    match = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+)\s*)?", value)
    if not match:
        raise argparse.ArgumentTypeError(f"expected a level range like 2..6, got {value!r}")
    lo = int(match.group(1))
    hi = int(match.group(2)) if match.group(2) else lo
    if lo < 1 or hi < lo:
        raise argparse.ArgumentTypeError(f"invalid level range {value!r}")
    return list(range(lo, hi + 1))


def validate_family_arg(value: str) -> str:
    if value not in FAMILIES:
        raise argparse.ArgumentTypeError(f"unknown family {value!r}; known: {', '.join(sorted(FAMILIES))}")
    return value


# ---------- scenarios ----------


def _morphism_from_args(args) -> TowerMorphism:
    if getattr(args, "morphism", None):
        return load_morphism(args.morphism, depth=args.depth, char=args.char)
    if getattr(args, "family", None):
        return build(args.family, get_field(_char(args)), args.depth or 3)
    raise CodecError("give --morphism FILE or --family NAME")


def _settle_refusals(report: VerificationReport, expected: Sequence[str]) -> None:
    """Refusals the scenario declares become passed negative controls; a missing one is a contradiction."""
    kept = []
    seen = set()
    for refusal in report.refusals:
        if refusal["check"] in expected:
            seen.add(refusal["check"])
            report.record(f"{refusal['check']} refused as declared", "refused", "refused", "refused", True,
                          kind="negative_control", note=refusal["reason"])
        else:
            kept.append(refusal)
    report.refusals = kept
    for name in expected:
        if name not in seen:
            report.record(f"{name} refused as declared", "refused", "ran", "refused", False, kind="negative_control")


def run_scenario(path, seed: Optional[int] = None, samples: Optional[int] = None,
                 depth: Optional[int] = None, char: Optional[int] = None) -> VerificationReport:
    path = Path(path)
    data = load_json(path)
    where = str(path)
    if not isinstance(data, dict):
        raise CodecError("scenario must be a JSON object", where)
    scenario_id = data.get("id") or path.stem
    morphism = data.get("morphism")
    if isinstance(morphism, str):
        morphism = load_json(path.parent / morphism)
    if not isinstance(morphism, dict):
        raise CodecError("missing morphism (builder spec, inline object or file reference)", f"{where}.morphism")
    depth = depth if depth is not None else data.get("depth")
    f = tower_morphism_from_json(morphism, f"{where}.morphism", path.parent, depth, char)
    flags = data.get("flags") or {}
    if flags.get("forgetful_fully_faithful"):
        f = f.with_source_flags(HypothesisFlags(forgetful_fully_faithful=True))
    checks = data.get("checks", DEFAULT_CHECKS)
    if not isinstance(checks, list) or not all(isinstance(c, str) for c in checks):
        raise CodecError("checks must be a list of names", f"{where}.checks")
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise CodecError(f"unknown checks {unknown}; known: {', '.join(sorted(CHECKS))}", f"{where}.checks")
    seed = seed if seed is not None else int(data.get("seed", _env_int("CONTRA_SEED", 1)))
    samples = samples if samples is not None else int(data.get("samples", _env_int("CONTRA_SAMPLES", 20)))

    logger.info("🚀 scenario %s: %s at depth %d over %s", scenario_id, f.name or "?", f.depth, f.field)
    report = run_checks(f, checks, samples=samples, seed=seed, scenario=scenario_id)
    _settle_refusals(report, data.get("expected_refusals", []))
    for name, expected in sorted((data.get("expect") or {}).items()):
        if name not in report.predicates:
            raise CodecError(f"unknown predicate {name!r}", f"{where}.expect")
        actual = report.predicates[name]["holds"]
        report.record(f"expected {name}", "==", actual, bool(expected), actual == bool(expected))
    return report


def _max_dim(f: TowerMorphism) -> int:
    return max(f.source.dims() + f.target.dims())


def generate_corpus(spec: Dict[str, Any], seed: int, out_dir) -> List[Path]:
    """Deterministic scenario files, one builder morphism each, plus a sha256 manifest."""
    families = list(spec.get("families", []))
    if spec.get("include_noncommutative"):
        families += [f for f in NONCOMMUTATIVE_FAMILIES if f not in families]
    if not families:
        return []
    unknown = [f for f in families if f not in FAMILIES]
    if unknown:
        raise CodecError(f"unknown families {unknown}", "spec.families")
    count = int(spec.get("count", len(families)))
    max_depth = int(spec.get("max_depth", 4))
    max_dim = int(spec.get("max_dim", 6))
    chars = list(spec.get("chars", [2]))
    checks = list(spec.get("checks", DEFAULT_CHECKS))
    samples = int(spec.get("samples", 20))
    rng = np.random.default_rng(seed)
    out_dir = Path(out_dir)
    written: List[Path] = []
    manifest: Dict[str, str] = {}
    for i in range(count):
        family = families[i % len(families)]
        char = int(chars[int(rng.integers(0, len(chars)))])
        # the first round uses the deepest admissible tower so every negative answer is visible
        depth = max_depth if i < len(families) else int(rng.integers(1, max_depth + 1))
        while depth > 1 and _max_dim(build(family, get_field(char), depth)) > max_dim:
            depth -= 1
        expect = expected_predicates(family, depth)
        refusals = [c for c in checks if c in TAUT_ONLY_CHECKS and not expect["strongly_right_taut"]]
        if "descent" in checks and not (expect["left_proflat"] and expect["proepimorphism"]):
            refusals.append("descent")
        scenario = {
            "id": f"{i:03d}_{family}_d{depth}_p{char}",
            "morphism": {"builder": {"family": family, "depth": depth, "char": char}},
            "flags": {"forgetful_fully_faithful": True},
            "checks": checks,
            "seed": seed,
            "samples": samples,
            "expect": expect,
            "expected_refusals": refusals,
        }
        target = write_json(out_dir / f"{scenario['id']}.json", scenario)
        manifest[target.name] = hashlib.sha256(target.read_bytes()).hexdigest()
        written.append(target)
    write_json(out_dir / "manifest.json", {"seed": seed, "files": manifest})
    logger.info("✅ corpus of %d scenarios written to %s", len(written), out_dir)
    return written


# ---------- verbs ----------


def cmd_check_tower(args) -> int:
    if args.tower:
        towers = {"tower": load_tower(args.tower)}
    else:
        f = _morphism_from_args(args)
        towers = {"source": f.source, "target": f.target}
    result = {}
    for role, t in towers.items():
        logger.info("✅ %s %s over %s: level dims %s", role, t.name or "?", t.field, t.dims())
        result[role] = {"name": t.name, "char": t.field.characteristic, "depth": t.depth, "dims": t.dims()}
    if args.out:
        write_json(args.out, jsonable(result))
    return 0


def cmd_classify(args) -> int:
    f = _morphism_from_args(args)
    summary = predicate_summary(f)
    result: Dict[str, Any] = {"morphism": f.name, "depth": f.depth, "char": f.field.characteristic,
                              "predicates": summary}
    code = 0
    for name, verdict in summary.items():
        marker = "✅" if verdict["holds"] else "❌"
        logger.info("%s %s (level %s) %s", marker, name, verdict["level"], verdict["detail"])
    if f.builder and f.builder.get("family") in FAMILIES:
        expected = expected_predicates(f.builder["family"], f.depth)
        result["expected"] = expected
        mismatched = [k for k, v in expected.items() if summary[k]["holds"] != v]
        if mismatched:
            logger.error("❌ predicates disagree with the known answers: %s", ", ".join(mismatched))
            code = 2
    if args.save_morphism:
        write_json(args.save_morphism, tower_morphism_to_json(f))
        logger.info("✅ explicit morphism written to %s", args.save_morphism)
    if args.out:
        write_json(args.out, jsonable(result))
    return code


def cmd_apply(args) -> int:
    f = _morphism_from_args(args)
    tag = FunctorTag(args.functor)
    restricting = tag in (FunctorTag.RESTRICT_DISCRETE, FunctorTag.RESTRICT_SYSTEM)
    obj = load_object(args.object, tower=f.target if restricting else f.source)
    result = apply(tag, f, obj)
    logger.info("✅ %s: level dims %s -> %s", tag.value, level_dims(obj), level_dims(result))
    if isinstance(result, LeftSystem):
        logger.info("separated: Ω dims %s", nonseparated_kernel_dims(result))
    if args.out:
        write_json(args.out, object_to_json(result))
    else:
        sys.stdout.write(dumps(object_to_json(result)))
    return 0


def cmd_verify(args) -> int:
    report = run_scenario(args.scenario, seed=args.seed, samples=args.samples, depth=args.depth, char=args.char)
    if args.out:
        write_json(args.out, report.to_dict())
    if args.csv:
        csv_path = Path(args.csv)
        tmp = csv_path.with_suffix(csv_path.suffix + ".tmp")
        report.to_frame().to_csv(tmp, index=False)
        tmp.replace(csv_path)
    code = report.exit_code()
    marker = "✅" if code == 0 else "❌"
    logger.info("%s %s: %d checks, %d contradictions, %d refusals", marker, report.scenario, len(report.records),
                len(report.contradictions), len(report.refusals))
    return code


def cmd_serieslab(args) -> int:
    table = valuation_table(args.levels, args.degree, _char(args))
    logger.info("\n%s", table.to_string(index=False))
    if args.table:
        path = Path(args.table)
        tmp = path.with_suffix(path.suffix + ".tmp")
        table.to_csv(tmp, index=False)
        tmp.replace(path)
        logger.info("✅ table written to %s", path)
    return 0


def cmd_gen_corpus(args) -> int:
    spec = dict(DEFAULT_CORPUS_SPEC)
    if args.spec:
        loaded = load_json(args.spec)
        if not isinstance(loaded, dict):
            raise CodecError("corpus spec must be a JSON object", str(args.spec))
        spec = loaded
    if args.count is not None:
        spec["count"] = args.count
    if args.depth is not None:
        spec["max_depth"] = args.depth
    generate_corpus(spec, args.seed if args.seed is not None else _env_int("CONTRA_SEED", 1), args.out_dir)
    return 0


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1 (2 is reserved for contradictions)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=validate_nonnegative_arg, default=None, help="default: scenario seed, then CONTRA_SEED")
    common.add_argument("--depth", type=validate_positive_arg, default=None, help="override the tower depth")
    common.add_argument("--char", type=validate_char_arg, default=None,
                        help="field characteristic: 0 for Q or a prime (default: stored value, then CONTRA_CHAR)")
    common.add_argument("--log-level", default=os.environ.get("CONTRA_LOG_LEVEL", "INFO"))

    parser = _Parser(prog="contratower", description="Change of scalars along towers of finite-dimensional algebras")
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("check-tower", parents=[common], help="validate a tower and print its level dimensions")
    p.add_argument("--tower")
    p.add_argument("--morphism")
    p.add_argument("--family", type=validate_family_arg)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_check_tower)

    p = sub.add_parser("classify-morphism", parents=[common], help="decide taut / proflat / proepimorphism")
    p.add_argument("--morphism")
    p.add_argument("--family", type=validate_family_arg)
    p.add_argument("--out")
    p.add_argument("--save-morphism", help="write the morphism as explicit JSON (towers and level maps)")
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("apply", parents=[common], help="apply a change-of-scalars functor")
    p.add_argument("--functor", required=True, choices=[t.value for t in FunctorTag])
    p.add_argument("--morphism")
    p.add_argument("--family", type=validate_family_arg)
    p.add_argument("--object", required=True)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_apply)

    p = sub.add_parser("verify", parents=[common], help="run a scenario's theorem checks")
    p.add_argument("--scenario", required=True)
    p.add_argument("--samples", type=validate_positive_arg, default=None)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("serieslab", parents=[common], help="valuation growth of the obstruction series")
    p.add_argument("--levels", type=validate_levels_arg, default=validate_levels_arg("2..6"))
    p.add_argument("--degree", type=validate_nonnegative_arg, default=64)
    p.add_argument("--table")
    p.set_defaults(handler=cmd_serieslab)

    p = sub.add_parser("gen-corpus", parents=[common], help="write a deterministic scenario corpus")
    p.add_argument("--out-dir", default="corpus")
    p.add_argument("--spec")
    p.add_argument("--count", type=validate_nonnegative_arg, default=None)
    p.set_defaults(handler=cmd_gen_corpus)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(levelname)s: %(message)s")
    try:
        return args.handler(args)
    except (CodecError, AlgebraError, ModuleError, TowerError, SystemAxiomError) as e:
        logger.error("❌ Validation error: %s", e)
        return 1
    except PreconditionError as e:
        logger.error("❌ Refused: %s", e)
        return 3
    except Exception as e:
        logger.exception("Unexpected error: %s", e)
        return 99


if __name__ == "__main__":
    sys.exit(main())
