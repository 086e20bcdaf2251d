"""JSON file formats for paths, laws, functional sets, and generator specs.

Numbers pass through Python's repr, the shortest decimal that round-trips the
double exactly, so a save/load cycle is bit-identical.  Writes go to a
temporary file in the destination directory followed by an atomic rename.
"""

from __future__ import annotations

import json
import os
import tempfile

from .errors import ValidationError
from .generators import GeneratorSpec
from .laws import DiscreteProcessLaw
from .metrics import ArctanMoment, TerminalValue, WindowAverage
from .paths import CadlagPath, Coordinate, Partition, TimeHorizon

__all__ = [
    "dump_json",
    "load_json",
    "path_to_obj",
    "path_from_obj",
    "law_to_obj",
    "law_from_obj",
    "functionals_from_obj",
    "spec_from_obj",
]


def dump_json(obj, file_path: str) -> None:
    """Serialize to file_path atomically (write to a sibling temp file, then
    rename over the destination)."""
    directory = os.path.dirname(os.path.abspath(file_path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, file_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_json(file_path: str):
    try:
        with open(file_path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {file_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"{file_path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _require(obj, key, kind, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ValidationError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{where}: field {key!r} must be a number")
        return float(value)
    if kind is int and isinstance(value, bool):
        raise ValidationError(f"{where}: field {key!r} must be int")
    if not isinstance(value, kind):
        raise ValidationError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def _number_list(obj, key, where):
    raw = _require(obj, key, list, where)
    out = []
    for x in raw:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ValidationError(f"{where}: {key!r} must contain only numbers")
        out.append(float(x))
    return out


def _horizon_to_obj(horizon: TimeHorizon) -> dict:
    return {"kind": horizon.kind, "T": horizon.T}


def _horizon_from_obj(obj, where) -> TimeHorizon:
    kind = _require(obj, "kind", str, where)
    if kind not in ("finite", "half_line"):
        raise ValidationError(f"{where}: horizon kind must be 'finite' or 'half_line'")
    return TimeHorizon(kind, _require(obj, "T", float, where))


def _coords_to_obj(path: CadlagPath) -> list:
    return [
        {"breakpoints": list(c.breakpoints), "values": list(c.values)}
        for c in path.coords
    ]


def _coords_from_obj(raw, where) -> tuple[Coordinate, ...]:
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"{where}: 'coords' must be a nonempty array")
    coords = []
    for j, entry in enumerate(raw):
        bp = _number_list(entry, "breakpoints", f"{where}.coords[{j}]")
        vals = _number_list(entry, "values", f"{where}.coords[{j}]")
        coords.append(Coordinate(tuple(bp), tuple(vals)))
    return tuple(coords)


def path_to_obj(path: CadlagPath) -> dict:
    return {
        "d": path.d,
        "horizon": _horizon_to_obj(path.horizon),
        "coords": _coords_to_obj(path),
    }


def path_from_obj(obj, where: str = "path") -> CadlagPath:
    horizon = _horizon_from_obj(_require(obj, "horizon", dict, where), where)
    coords = _coords_from_obj(_require(obj, "coords", list, where), where)
    path = CadlagPath(horizon, coords)
    if "d" in obj and obj["d"] != path.d:
        raise ValidationError(f"{where}: declared d={obj['d']} but found {path.d} coords")
    return path


def law_to_obj(law: DiscreteProcessLaw) -> dict:
    return {
        "grid": list(law.grid.times),
        "d": law.d,
        "horizon": _horizon_to_obj(law.horizon),
        "atoms": [
            {"weight": w, "paths": {"coords": _coords_to_obj(p)}}
            for w, p in zip(law.weights, law.paths)
        ],
    }


def law_from_obj(obj, where: str = "law") -> DiscreteProcessLaw:
    grid = Partition(tuple(_number_list(obj, "grid", where)))
    if "horizon" in obj:
        horizon = _horizon_from_obj(_require(obj, "horizon", dict, where), where)
    else:
        horizon = TimeHorizon("finite", grid.times[-1])
    atoms = _require(obj, "atoms", list, where)
    if not atoms:
        raise ValidationError(f"{where}: 'atoms' must be a nonempty array")
    paths, weights = [], []
    for a, atom in enumerate(atoms):
        at = f"{where}.atoms[{a}]"
        weights.append(_require(atom, "weight", float, at))
        raw_path = _require(atom, "paths", dict, at)
        if "horizon" in raw_path:
            paths.append(path_from_obj(raw_path, at))
        else:
            coords = _coords_from_obj(_require(raw_path, "coords", list, at), at)
            paths.append(CadlagPath(horizon, coords))
    law = DiscreteProcessLaw(grid, tuple(paths), tuple(weights))
    if "d" in obj and obj["d"] != law.d:
        raise ValidationError(f"{where}: declared d={obj['d']} but found d={law.d}")
    return law


_FUNCTIONAL_TYPES = ("window", "arctan", "terminal")


def functionals_from_obj(raw, where: str = "functionals"):
    if not isinstance(raw, list) or not raw:
        raise ValidationError(f"{where}: expected a nonempty array of functionals")
    fs = []
    for j, entry in enumerate(raw):
        at = f"{where}[{j}]"
        kind = _require(entry, "type", str, at)
        i = _require(entry, "i", int, at)
        if kind == "window":
            fs.append(WindowAverage(i=i, q=_require(entry, "q", float, at),
                                    r=_require(entry, "r", float, at)))
        elif kind == "arctan":
            power = entry.get("power", 1)
            if isinstance(power, bool) or not isinstance(power, int):
                raise ValidationError(f"{at}: 'power' must be an integer")
            fs.append(ArctanMoment(i=i, k=_require(entry, "k", int, at), power=power))
        elif kind == "terminal":
            fs.append(TerminalValue(i=i))
        else:
            raise ValidationError(f"{at}: type must be one of {_FUNCTIONAL_TYPES}")
    return tuple(fs)


def spec_from_obj(obj, where: str = "spec") -> GeneratorSpec:
    kind = _require(obj, "kind", str, where)
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ValidationError(f"{where}: 'params' must be an object")
    seed = obj.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValidationError(f"{where}: 'seed' must be an integer")
    if "base" in params and isinstance(params["base"], dict):
        params = dict(params)
        params["base"] = spec_from_obj(params["base"], f"{where}.base")
    return GeneratorSpec.make(kind, seed=seed, **params)
