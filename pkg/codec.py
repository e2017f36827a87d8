"""JSON load/save for algebras, towers, morphisms, modules, systems and reports.

Field elements are written as decimal strings ("3", "-1/2"); matrices are dense
row-major nested lists; structure constants are sparse [i, j, k, value] triples.
A tower or morphism that came from a builder carries its builder tag and is
rebuilt from it on load, so --depth/--char can override the stored values.
"""
import json
import logging
from dataclasses import is_dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from finalg import AlgebraError, AlgMorphism, FinAlgebra, Verdict, get_field
from finmod import FinModule, ModuleError
from systems import DiscreteModule, LeftSystem, make_left_system, same_tower
from tower import HypothesisFlags, RingTower, TowerError, TowerMorphism, build

logger = logging.getLogger("codec")

PathLike = Union[str, Path]


class CodecError(ValueError):
    """Malformed artifact; the message starts with the file position or JSON path."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


# ---------- files ----------


def load_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CodecError(str(e), str(path)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise CodecError(e.msg, f"{path}:{e.lineno}:{e.colno}") from None


def dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_json(path: PathLike, data: Any) -> Path:
    """Atomic UTF-8 write with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(dumps(data), encoding="utf-8")
    tmp.replace(path)
    logger.debug("wrote %s", path)
    return path


def _array_out(arr: np.ndarray) -> Any:
    if arr.ndim == 0:
        return str(arr.item())
    if arr.ndim == 1:
        return [str(x) for x in arr.tolist()]
    return [_array_out(row) for row in arr]


def jsonable(obj: Any) -> Any:
    """Plain JSON value for reports: arrays become nested lists of decimal strings."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float):
        return obj
    if isinstance(obj, np.ndarray):
        return _array_out(obj)
    if isinstance(obj, Verdict):
        return {"holds": obj.holds, "level": obj.level, "detail": obj.detail, "depth": obj.depth,
                "witness": jsonable(obj.witness)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if is_dataclass(obj):
        return repr(obj)
    return str(obj)


# ---------- field elements ----------


def _where(path: str, key: Union[str, int]) -> str:
    return f"{path}[{key}]" if isinstance(key, int) else f"{path}.{key}"


def _get(obj: Dict[str, Any], key: str, path: str, default: Any = ...) -> Any:
    if not isinstance(obj, dict):
        raise CodecError("expected an object", path)
    if key not in obj:
        if default is ...:
            raise CodecError(f"missing key {key!r}", path)
        return default
    return obj[key]


def _matrix_out(field, arr: np.ndarray) -> Any:
    if arr.ndim == 0:
        return field.format(arr.item())
    return [_matrix_out(field, row) for row in arr]


def _matrix_in(field, data: Any, shape, path: str) -> np.ndarray:
    try:
        arr = field.array(data)
    except (ValueError, TypeError, ZeroDivisionError) as e:
        raise CodecError(f"bad field element ({e})", path) from None
    if arr.size == 0 and int(np.prod(shape)) == 0:
        arr = field.zeros(shape)
    if arr.shape != tuple(shape):
        raise CodecError(f"expected shape {tuple(shape)}, got {arr.shape}", path)
    return arr


def _field_of(data: Dict[str, Any], path: str, char: Optional[int] = None):
    value = char if char is not None else _get(data, "char", path)
    try:
        return get_field(int(value))
    except (AlgebraError, ValueError, TypeError) as e:
        raise CodecError(str(e), _where(path, "char")) from None


# ---------- algebras and morphisms ----------


def algebra_to_json(a: FinAlgebra) -> Dict[str, Any]:
    f = a.field
    triples = [[int(i), int(j), int(k), f.format(a.table[i, j, k])] for i, j, k in np.argwhere(a.table != 0)]
    return {
        "char": f.characteristic,
        "dim": a.dim,
        "unit": _matrix_out(f, a.unit),
        "structure_constants": triples,
        "labels": list(a.labels),
        "name": a.name,
        "commutative": a.commutative,
    }


def algebra_from_json(data: Dict[str, Any], path: str = "$") -> FinAlgebra:
    f = _field_of(data, path)
    d = _get(data, "dim", path)
    if not isinstance(d, int) or d < 1:
        raise CodecError("dim must be a positive integer", _where(path, "dim"))
    table = f.zeros((d, d, d))
    for n, triple in enumerate(_get(data, "structure_constants", path)):
        where = _where(_where(path, "structure_constants"), n)
        if not isinstance(triple, list) or len(triple) != 4:
            raise CodecError("expected [i, j, k, value]", where)
        i, j, k, value = triple
        if not all(isinstance(x, int) and 0 <= x < d for x in (i, j, k)):
            raise CodecError(f"index out of range for dim {d}", where)
        table[i, j, k] = _matrix_in(f, value, (), where)
    unit = _matrix_in(f, _get(data, "unit", path), (d,), _where(path, "unit"))
    try:
        return FinAlgebra(f, table, unit, labels=tuple(_get(data, "labels", path, [])),
                          name=_get(data, "name", path, ""), commutative=_get(data, "commutative", path, None))
    except AlgebraError as e:
        raise CodecError(str(e), path) from None


def morphism_to_json(g: AlgMorphism) -> Dict[str, Any]:
    """Columns are the images of the source basis in target coordinates."""
    return {"columns": _matrix_out(g.target.field, g.matrix.T)}


def morphism_from_json(data: Dict[str, Any], source: FinAlgebra, target: FinAlgebra, path: str = "$") -> AlgMorphism:
    cols = _matrix_in(target.field, _get(data, "columns", path), (source.dim, target.dim), _where(path, "columns"))
    try:
        return AlgMorphism(source, target, np.ascontiguousarray(cols.T))
    except AlgebraError as e:
        raise CodecError(str(e), path) from None


# ---------- towers ----------


def tower_to_json(t: RingTower) -> Dict[str, Any]:
    return {
        "char": t.field.characteristic,
        "depth": t.depth,
        "name": t.name,
        "levels": [algebra_to_json(a) for a in t.levels],
        "transitions": [morphism_to_json(g) for g in t.transitions],
        "builder": t.builder,
        "flags": {"forgetful_fully_faithful": t.flags.forgetful_fully_faithful},
    }


def _flags_from_json(data: Dict[str, Any], path: str) -> HypothesisFlags:
    flags = _get(data, "flags", path, None) or {}
    return HypothesisFlags(forgetful_fully_faithful=bool(flags.get("forgetful_fully_faithful", False)))


def tower_from_json(data: Dict[str, Any], path: str = "$") -> RingTower:
    levels = [algebra_from_json(a, _where(_where(path, "levels"), n))
              for n, a in enumerate(_get(data, "levels", path))]
    raw = _get(data, "transitions", path)
    if len(raw) != len(levels) - 1:
        raise CodecError(f"{len(levels)} levels need {len(levels) - 1} transitions", _where(path, "transitions"))
    transitions = [morphism_from_json(m, levels[n + 1], levels[n], _where(_where(path, "transitions"), n))
                   for n, m in enumerate(raw)]
    try:
        return RingTower(levels, transitions, _get(data, "name", path, ""), _get(data, "builder", path, None),
                         _flags_from_json(data, path))
    except TowerError as e:
        raise CodecError(str(e), path) from None


def tower_morphism_to_json(f: TowerMorphism) -> Dict[str, Any]:
    return {
        "kind": "tower_morphism",
        "name": f.name,
        "builder": f.builder,
        "flags": {"forgetful_fully_faithful": f.source.flags.forgetful_fully_faithful},
        "source": tower_to_json(f.source),
        "target": tower_to_json(f.target),
        "maps": [morphism_to_json(g) for g in f.maps],
    }


def _resolve(value: Any, base: Optional[Path], path: str) -> Dict[str, Any]:
    """Inline object, or a file reference relative to the referring file."""
    if isinstance(value, str):
        ref = Path(value) if base is None else base / value
        return load_json(ref)
    if not isinstance(value, dict):
        raise CodecError("expected an object or a file reference", path)
    return value


def tower_morphism_from_json(data: Dict[str, Any], path: str = "$", base: Optional[Path] = None,
                             depth: Optional[int] = None, char: Optional[int] = None) -> TowerMorphism:
    builder = _get(data, "builder", path, None)
    flags = _flags_from_json(data, path)
    if builder:
        family = _get(builder, "family", _where(path, "builder"))
        field = _field_of(builder, _where(path, "builder"), char)
        d = depth if depth is not None else _get(builder, "depth", _where(path, "builder"))
        try:
            f = build(family, field, int(d))
        except TowerError as e:
            raise CodecError(str(e), _where(path, "builder")) from None
    else:
        source = tower_from_json(_resolve(_get(data, "source", path), base, _where(path, "source")), _where(path, "source"))
        target = tower_from_json(_resolve(_get(data, "target", path), base, _where(path, "target")), _where(path, "target"))
        raw = _get(data, "maps", path)
        maps = [morphism_from_json(m, source.level(n + 1), target.level(n + 1), _where(_where(path, "maps"), n))
                for n, m in enumerate(raw)]
        try:
            f = TowerMorphism(source, target, maps, name=_get(data, "name", path, ""))
        except TowerError as e:
            raise CodecError(str(e), path) from None
        if depth is not None:
            f = f.truncate(depth)
    if flags.forgetful_fully_faithful and not f.source.flags.forgetful_fully_faithful:
        f = f.with_source_flags(flags)
    return f


def load_morphism(path: PathLike, depth: Optional[int] = None, char: Optional[int] = None) -> TowerMorphism:
    path = Path(path)
    return tower_morphism_from_json(load_json(path), str(path), path.parent, depth, char)


def load_tower(path: PathLike) -> RingTower:
    path = Path(path)
    return tower_from_json(load_json(path), str(path))


# ---------- modules and systems ----------


def module_to_json(m: FinModule) -> Dict[str, Any]:
    return {"side": m.side, "dim": m.dim, "name": m.name, "action": _matrix_out(m.field, m.action)}


def module_from_json(data: Dict[str, Any], algebra: FinAlgebra, path: str = "$") -> FinModule:
    side = _get(data, "side", path)
    m = _get(data, "dim", path)
    if not isinstance(m, int) or m < 0:
        raise CodecError("dim must be a nonnegative integer", _where(path, "dim"))
    action = _matrix_in(algebra.field, _get(data, "action", path), (algebra.dim, m, m), _where(path, "action"))
    try:
        return FinModule(algebra, side, action, name=_get(data, "name", path, ""))
    except ModuleError as e:
        raise CodecError(str(e), path) from None


def discrete_to_json(n: DiscreteModule) -> Dict[str, Any]:
    return {"kind": "discrete", "level": n.level, "tower": tower_to_json(n.tower), "module": module_to_json(n.module)}


def system_to_json(p: LeftSystem) -> Dict[str, Any]:
    """Only the top module is stored; reductions are recomputed and revalidated on load."""
    return {"kind": "system", "name": p.name, "tower": tower_to_json(p.tower), "top": module_to_json(p.top)}


def object_from_json(data: Dict[str, Any], tower: Optional[RingTower] = None, path: str = "$",
                     base: Optional[Path] = None) -> Union[DiscreteModule, LeftSystem]:
    """Discrete module or left system; a given tower must match the stored one, if any."""
    kind = _get(data, "kind", path)
    where = _where(path, "tower")
    stored = None
    if tower is None or "tower" in data:
        stored = tower_from_json(_resolve(_get(data, "tower", path), base, where), where)
    if tower is None:
        tower = stored
    elif stored is not None and (stored.field.characteristic != tower.field.characteristic
                                 or not same_tower(stored, tower)):
        raise CodecError(f"stored tower (dims {stored.dims()} over {stored.field}) does not match "
                         f"the expected tower (dims {tower.dims()} over {tower.field})", where)
    try:
        if kind == "discrete":
            level = _get(data, "level", path)
            if not isinstance(level, int):
                raise CodecError("level must be an integer", _where(path, "level"))
            module = module_from_json(_get(data, "module", path), tower.level(level), _where(path, "module"))
            return DiscreteModule(tower, level, module)
        if kind == "system":
            top = module_from_json(_get(data, "top", path), tower.level(tower.depth), _where(path, "top"))
            return make_left_system(tower, top, name=_get(data, "name", path, ""))
    except (ModuleError, TowerError) as e:
        raise CodecError(str(e), path) from None
    raise CodecError(f"unknown object kind {kind!r}", _where(path, "kind"))


def object_to_json(obj: Union[DiscreteModule, LeftSystem]) -> Dict[str, Any]:
    if isinstance(obj, LeftSystem):
        return system_to_json(obj)
    return discrete_to_json(obj)


def load_object(path: PathLike, tower: Optional[RingTower] = None) -> Union[DiscreteModule, LeftSystem]:
    path = Path(path)
    return object_from_json(load_json(path), tower, str(path), path.parent)
