"""Experiment configuration: a JSON file validated by hand against a fixed
schema.

Every error is a ConfigError naming the offending key path (and, for matrix
problems, the 1-based row), raised before any computation starts.  Unknown
keys are rejected everywhere.  `load_config` returns the resolved
configuration with all defaults filled in, which report writers embed
verbatim for reproducibility; `build_system` turns its system block into a
MapSystem.
"""

from __future__ import annotations

import json
from numbers import Real

from .errors import ConfigError, MarkovProdError
from .maps import AffineMap, IntervalBox, MapSystem, MoebiusMap
from .shift import build_shift

NORMALIZE_MODES = ("primitive", "row-positive")
INITIAL_KINDS = ("uniform", "corner", "center")
PHI_KINDS = ("coordinate", "square", "product")

EXPERIMENT_BLOCKS = (
    "stationary",
    "split",
    "oracle",
    "operator",
    "sync",
    "contract",
    "weak_hyp",
    "coding",
    "ergodic",
)


def _require_dict(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{path} must be an object")
    return value


def _check_keys(obj: dict, path: str, allowed: tuple[str, ...], required: tuple[str, ...] = ()) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}" if path else f"unknown key {key}")
    for key in required:
        if key not in obj:
            raise ConfigError(f"missing key {path}.{key}" if path else f"missing key {key}")


def _as_int(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path} must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path} must be >= {minimum}")
    return value


def _as_float(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise ConfigError(f"{path} must be a number")
    return float(value)


def _as_bool(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{path} must be true or false")
    return value


def _as_str(value, path: str, choices: tuple[str, ...] | None = None) -> str:
    if not isinstance(value, str):
        raise ConfigError(f"{path} must be a string")
    if choices is not None and value not in choices:
        raise ConfigError(f"{path} must be one of {', '.join(choices)}")
    return value


def _as_number_list(value, path: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path} must be a nonempty array of numbers")
    return [_as_float(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _as_word(value, path: str) -> list[int]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path} must be a nonempty array of symbols")
    return [_as_int(v, f"{path}[{i}]", minimum=1) for i, v in enumerate(value)]


def _validate_matrix(value, path: str) -> list[list[float]]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path} must be a nonempty array of rows")
    k = len(value)
    rows = []
    for i, row in enumerate(value, start=1):
        if not isinstance(row, list) or len(row) != k:
            raise ConfigError(f"{path} row {i} must have {k} entries")
        entries = [_as_float(v, f"{path} row {i}") for v in row]
        for v in entries:
            if v < 0.0:
                raise ConfigError(f"{path} row {i} has a negative entry")
        total = sum(entries)
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"{path} row {i} sums to {total!r}, expected 1.0")
        rows.append(entries)
    return rows


def _validate_declared_types(value, path: str, dim: int) -> list[list[str]]:
    if not isinstance(value, list) or len(value) != dim:
        raise ConfigError(f"{path} must have {dim} rows of signs")
    rows = []
    for i, row in enumerate(value, start=1):
        if not isinstance(row, list) or len(row) != dim:
            raise ConfigError(f"{path} row {i} must have {dim} entries")
        for v in row:
            if v not in ("+", "-", "0"):
                raise ConfigError(f"{path} row {i} entries must be '+', '-', or '0'")
        rows.append(list(row))
    return rows


def _validate_map(obj, path: str, dim: int) -> dict:
    obj = _require_dict(obj, path)
    kind = _as_str(obj.get("kind"), f"{path}.kind", ("moebius", "affine")) if "kind" in obj else None
    if kind is None:
        raise ConfigError(f"missing key {path}.kind")
    declared = None
    if "declared_types" in obj:
        declared = _validate_declared_types(obj["declared_types"], f"{path}.declared_types", dim)
    if kind == "moebius":
        _check_keys(obj, path, ("kind", "a", "b", "c", "d", "declared_types"), ("a", "b", "c", "d"))
        if dim != 1:
            raise ConfigError(f"{path}: moebius maps need a 1-dimensional ambient box")
        out = {
            "kind": "moebius",
            "a": _as_float(obj["a"], f"{path}.a"),
            "b": _as_float(obj["b"], f"{path}.b"),
            "c": _as_float(obj["c"], f"{path}.c"),
            "d": _as_float(obj["d"], f"{path}.d"),
        }
    else:
        _check_keys(obj, path, ("kind", "matrix", "offset", "declared_types"), ("matrix", "offset"))
        matrix = obj["matrix"]
        if not isinstance(matrix, list) or len(matrix) != dim:
            raise ConfigError(f"{path}.matrix must have {dim} rows")
        rows = []
        for i, row in enumerate(matrix, start=1):
            if not isinstance(row, list) or len(row) != dim:
                raise ConfigError(f"{path}.matrix row {i} must have {dim} entries")
            rows.append([_as_float(v, f"{path}.matrix row {i}") for v in row])
        offset = _as_number_list(obj["offset"], f"{path}.offset")
        if len(offset) != dim:
            raise ConfigError(f"{path}.offset must have {dim} entries")
        out = {"kind": "affine", "matrix": rows, "offset": offset}
    if declared is not None:
        out["declared_types"] = declared
    return out


def _validate_system(obj, path: str) -> dict:
    obj = _require_dict(obj, path)
    _check_keys(obj, path, ("ambient", "transition_matrix", "maps"), ("ambient", "transition_matrix", "maps"))
    ambient = _require_dict(obj["ambient"], f"{path}.ambient")
    _check_keys(ambient, f"{path}.ambient", ("lo", "hi"), ("lo", "hi"))
    lo = _as_number_list(ambient["lo"], f"{path}.ambient.lo")
    hi = _as_number_list(ambient["hi"], f"{path}.ambient.hi")
    if len(lo) != len(hi):
        raise ConfigError(f"{path}.ambient lo and hi must have the same length")
    for i, (a, b) in enumerate(zip(lo, hi), start=1):
        if a >= b:
            raise ConfigError(f"{path}.ambient coordinate {i} has lo >= hi")
    matrix = _validate_matrix(obj["transition_matrix"], f"{path}.transition_matrix")
    maps = obj["maps"]
    if not isinstance(maps, list) or not maps:
        raise ConfigError(f"{path}.maps must be a nonempty array")
    if len(maps) != len(matrix):
        raise ConfigError(
            f"{path}.maps has {len(maps)} entries for a {len(matrix)}-state matrix"
        )
    dim = len(lo)
    return {
        "ambient": {"lo": lo, "hi": hi},
        "transition_matrix": matrix,
        "maps": [_validate_map(m, f"{path}.maps[{i}]", dim) for i, m in enumerate(maps)],
    }


def _validate_split(obj, path: str) -> dict:
    _check_keys(
        obj,
        path,
        ("word_a", "word_b", "max_len", "horizon", "cloud_size", "prefix_samples", "normalize_mode", "strict_endpoints"),
    )
    out = {
        "word_a": _as_word(obj["word_a"], f"{path}.word_a") if "word_a" in obj else None,
        "word_b": _as_word(obj["word_b"], f"{path}.word_b") if "word_b" in obj else None,
        "max_len": _as_int(obj.get("max_len", 3), f"{path}.max_len", minimum=1),
        "horizon": _as_int(obj.get("horizon", 10), f"{path}.horizon", minimum=0),
        "cloud_size": _as_int(obj.get("cloud_size", 64), f"{path}.cloud_size", minimum=1),
        "prefix_samples": None,
        "normalize_mode": _as_str(obj.get("normalize_mode", "primitive"), f"{path}.normalize_mode", NORMALIZE_MODES),
        "strict_endpoints": _as_bool(obj.get("strict_endpoints", False), f"{path}.strict_endpoints"),
    }
    if obj.get("prefix_samples") is not None:
        out["prefix_samples"] = _as_int(obj["prefix_samples"], f"{path}.prefix_samples", minimum=1)
    if (out["word_a"] is None) != (out["word_b"] is None):
        raise ConfigError(f"{path}: word_a and word_b must be given together")
    return out


def _validate_oracle(obj, path: str) -> dict:
    _check_keys(obj, path, ("xi", "eta", "ell_max", "grid_points", "s", "exact"))
    out = {
        "xi": _as_word(obj["xi"], f"{path}.xi") if "xi" in obj else None,
        "eta": _as_word(obj["eta"], f"{path}.eta") if "eta" in obj else None,
        "ell_max": _as_int(obj.get("ell_max", 6), f"{path}.ell_max", minimum=1),
        "grid_points": _as_int(obj.get("grid_points", 33), f"{path}.grid_points", minimum=1),
        "s": _as_int(obj.get("s", 1), f"{path}.s", minimum=1),
        "exact": _as_bool(obj.get("exact", False), f"{path}.exact"),
    }
    if (out["xi"] is None) != (out["eta"] is None):
        raise ConfigError(f"{path}: xi and eta must be given together")
    return out


def _validate_operator(obj, path: str) -> dict:
    _check_keys(obj, path, ("n_steps", "particles", "initials", "target_samples", "target_depth"))
    initials = obj.get("initials", list(INITIAL_KINDS))
    if not isinstance(initials, list) or not initials:
        raise ConfigError(f"{path}.initials must be a nonempty array")
    for i, kind in enumerate(initials):
        _as_str(kind, f"{path}.initials[{i}]", INITIAL_KINDS)
    if len(set(initials)) != len(initials):
        raise ConfigError(f"{path}.initials must not repeat")
    return {
        "n_steps": _as_int(obj.get("n_steps", 30), f"{path}.n_steps", minimum=1),
        "particles": _as_int(obj.get("particles", 10_000), f"{path}.particles", minimum=1),
        "initials": list(initials),
        "target_samples": _as_int(obj.get("target_samples", 20_000), f"{path}.target_samples", minimum=1),
        "target_depth": _as_int(obj.get("target_depth", 64), f"{path}.target_depth", minimum=1),
    }


def _validate_sync(obj, path: str) -> dict:
    _check_keys(obj, path, ("trials", "n_max", "cloud_size"))
    return {
        "trials": _as_int(obj.get("trials", 100), f"{path}.trials", minimum=1),
        "n_max": _as_int(obj.get("n_max", 20), f"{path}.n_max", minimum=3),
        "cloud_size": _as_int(obj.get("cloud_size", 256), f"{path}.cloud_size", minimum=1),
    }


def _validate_contract(obj, path: str) -> dict:
    _check_keys(obj, path, ("trials", "n_max"))
    return {
        "trials": _as_int(obj.get("trials", 10), f"{path}.trials", minimum=1),
        "n_max": _as_int(obj.get("n_max", 20), f"{path}.n_max", minimum=3),
    }


def _validate_weak_hyp(obj, path: str) -> dict:
    _check_keys(obj, path, ("trials", "depth", "tol"))
    tol = _as_float(obj.get("tol", 1e-9), f"{path}.tol")
    if tol <= 0.0:
        raise ConfigError(f"{path}.tol must be positive")
    return {
        "trials": _as_int(obj.get("trials", 10_000), f"{path}.trials", minimum=1),
        "depth": _as_int(obj.get("depth", 40), f"{path}.depth", minimum=1),
        "tol": tol,
    }


def _validate_coding(obj, path: str) -> dict:
    _check_keys(obj, path, ("words", "depth", "invariance_samples"))
    words = obj.get("words", [])
    if not isinstance(words, list):
        raise ConfigError(f"{path}.words must be an array of words")
    return {
        "words": [_as_word(w, f"{path}.words[{i}]") for i, w in enumerate(words)],
        "depth": _as_int(obj.get("depth", 40), f"{path}.depth", minimum=1),
        "invariance_samples": _as_int(obj.get("invariance_samples", 1000), f"{path}.invariance_samples", minimum=0),
    }


def _validate_phi(value, path: str) -> list:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{path} must be an array like [\"coordinate\", 1]")
    kind = _as_str(value[0], f"{path}[0]", PHI_KINDS)
    want = 3 if kind == "product" else 2
    if len(value) != want:
        raise ConfigError(f"{path} with kind {kind} must have {want} entries")
    return [kind] + [_as_int(v, f"{path}[{i}]", minimum=1) for i, v in enumerate(value[1:], start=1)]


def _validate_ergodic(obj, path: str) -> dict:
    _check_keys(obj, path, ("n", "x", "phi", "target_samples"))
    return {
        "n": _as_int(obj.get("n", 1_000_000), f"{path}.n", minimum=100),
        "x": _as_number_list(obj["x"], f"{path}.x") if "x" in obj else None,
        "phi": _validate_phi(obj.get("phi", ["coordinate", 1]), f"{path}.phi"),
        "target_samples": _as_int(obj.get("target_samples", 20_000), f"{path}.target_samples", minimum=2),
    }


def _validate_stationary(obj, path: str) -> dict:
    _check_keys(obj, path, ())
    return {}


_BLOCK_VALIDATORS = {
    "stationary": _validate_stationary,
    "split": _validate_split,
    "oracle": _validate_oracle,
    "operator": _validate_operator,
    "sync": _validate_sync,
    "contract": _validate_contract,
    "weak_hyp": _validate_weak_hyp,
    "coding": _validate_coding,
    "ergodic": _validate_ergodic,
}


def validate_config(raw) -> dict:
    """Check a parsed JSON document against the schema; returns the resolved
    config with defaults filled in."""
    raw = _require_dict(raw, "config")
    _check_keys(raw, "", ("system", "seed", "out", "experiments"), ("system",))
    resolved = {
        "system": _validate_system(raw["system"], "system"),
        "seed": _as_int(raw.get("seed", 0), "seed", minimum=0),
        "out": _as_str(raw.get("out", "reports"), "out"),
        "experiments": {},
    }
    experiments = _require_dict(raw.get("experiments", {}), "experiments")
    for name, block in experiments.items():
        if name not in EXPERIMENT_BLOCKS:
            raise ConfigError(f"unknown key experiments.{name}")
        block = _require_dict(block, f"experiments.{name}")
        resolved["experiments"][name] = _BLOCK_VALIDATORS[name](block, f"experiments.{name}")
    return resolved


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(raw)


def build_system(config: dict) -> MapSystem:
    """Construct the validated MapSystem from a resolved config."""
    from .maps import sign_table

    block = config["system"]
    ambient = IntervalBox(tuple(block["ambient"]["lo"]), tuple(block["ambient"]["hi"]))
    maps = []
    for i, spec in enumerate(block["maps"]):
        if spec["kind"] == "moebius":
            f = MoebiusMap(spec["a"], spec["b"], spec["c"], spec["d"])
        else:
            f = AffineMap(tuple(tuple(row) for row in spec["matrix"]), tuple(spec["offset"]))
        declared = spec.get("declared_types")
        if declared is not None:
            actual = sign_table(f)
            if tuple(tuple(row) for row in declared) != actual:
                raise ConfigError(
                    f"system.maps[{i}].declared_types does not match the computed "
                    f"sign table {actual}"
                )
        maps.append(f)
    try:
        shift = build_shift(block["transition_matrix"])
        return MapSystem(shift=shift, maps=tuple(maps), ambient=ambient)
    except ConfigError:
        raise
    except MarkovProdError as exc:
        raise ConfigError(f"system block rejected: {exc}") from exc
