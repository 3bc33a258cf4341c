"""Command-line laboratory: one subcommand per experiment plus `all`.

Runs are deterministic: a (config, seed) pair yields bit-identical reports,
so no timestamps or machine identifiers appear in any output.  Each run
writes its CSV data files plus one JSON summary embedding the full resolved
configuration.  Files land atomically (temp file in the target directory,
then rename).

Exit codes: 0 success, 1 verification failure (a split certificate is
missing or falsified, an oracle row fails, or a coding invariance residual
exceeds its bound), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys as _sys
import tempfile

import numpy as np

from . import __version__
from .config import EXPERIMENT_BLOCKS, build_system, load_config
from .errors import ConfigError, MarkovProdError
from .maps import IntervalBox, MapSystem, evaluate_map
from .markov_operator import build_initial, stability_experiment
from .oracle import default_grid, verify_bounds
from .shift import sample_words
from .splitting import (
    SplitWitness,
    certify_split,
    normalize_witness,
    search_witness,
    verify_split_horizon,
)
from .synchronization import (
    coding_point,
    measure_contraction_experiment,
    sync_experiment,
    weak_hyperbolicity_experiment,
)

SUBCOMMANDS = (
    "stationary",
    "split-check",
    "split-search",
    "oracle",
    "operator",
    "sync",
    "contract",
    "weak-hyp",
    "coding",
    "ergodic",
    "all",
)

HOLDS = "holds"
FAILS = "fails"


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    _atomic_write(path, buf.getvalue())


def _box_json(box: IntervalBox) -> dict:
    return {"lo": [float(v) for v in box.lo], "hi": [float(v) for v in box.hi]}


def _witness_json(w: SplitWitness) -> dict:
    return {
        "word_a": list(w.word_a),
        "word_b": list(w.word_b),
        "box_a": _box_json(w.box_a),
        "box_b": _box_json(w.box_b),
        "certified_by": w.certified_by,
        "signs": list(w.signs) if w.signs is not None else None,
    }


def _resolve_witness(sys_: MapSystem, split_cfg: dict) -> SplitWitness | None:
    if split_cfg.get("word_a") is not None:
        return certify_split(sys_, tuple(split_cfg["word_a"]), tuple(split_cfg["word_b"]))
    return search_witness(sys_, split_cfg["max_len"])


def _split_status(sys_: MapSystem, config: dict) -> dict:
    """Cheap witness lookup recorded by the sampling experiments, whose
    conclusions are only meaningful for splitting systems."""
    split_cfg = config["experiments"].get("split", {"word_a": None, "word_b": None, "max_len": 3})
    try:
        witness = _resolve_witness(sys_, split_cfg)
    except MarkovProdError as exc:
        return {"certified": False, "detail": str(exc)}
    if witness is None:
        return {"certified": False, "detail": "no certificate found"}
    return {"certified": True, "witness": _witness_json(witness)}


def _run_stationary(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    shift = sys_.shift
    p = shift.p
    rows = [[j + 1, float(p[j])] for j in range(shift.k)]
    _write_csv(os.path.join(outdir, "stationary.csv"), ["state", "p_stationary"], rows)
    residual = float(np.abs(p @ shift.P - p).max())
    results = {
        "classification": shift.classification,
        "p_stationary": [float(v) for v in p],
        "inverse_matrix": [[float(v) for v in row] for row in shift.Q],
        "stationarity_residual": residual,
        "verdict": HOLDS if residual <= 1e-12 else FAILS,
    }
    return results, results["verdict"] == HOLDS, ["stationary.csv"]


def _run_split_check(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    if block.get("word_a") is None:
        raise ConfigError("experiments.split.word_a and word_b are required for split-check")
    witness = certify_split(sys_, tuple(block["word_a"]), tuple(block["word_b"]))
    if witness is None:
        results = {"witness": None, "verdict": FAILS, "detail": "pair admits no certificate"}
        return results, False, []
    report = verify_split_horizon(
        sys_,
        witness.word_a,
        witness.word_b,
        block["horizon"],
        prefix_samples=block["prefix_samples"],
        cloud_size=block["cloud_size"],
        seed=seed,
    )
    rows = [[n, status] for n, status in enumerate(report.per_n)]
    _write_csv(os.path.join(outdir, "horizon.csv"), ["n", "status"], rows)
    results = {
        "witness": _witness_json(witness),
        "horizon": {
            "n_max": report.n_max,
            "exhaustive": report.exhaustive,
            "prefixes_checked": report.prefixes_checked,
            "certified_to": report.certified_to,
            "verdict": report.verdict,
            "violation": None
            if report.violation is None
            else {
                "n": report.violation[0],
                "coordinate": report.violation[1],
                "prefix": list(report.violation[2]),
            },
        },
        "verdict": FAILS if report.verdict == "violated" else HOLDS,
    }
    return results, results["verdict"] == HOLDS, ["horizon.csv"]


def _run_split_search(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    witness = search_witness(sys_, block["max_len"])
    if witness is None:
        results = {
            "witness": None,
            "verdict": FAILS,
            "detail": f"no witness up to length {block['max_len']}",
        }
        return results, False, []
    results = {"witness": _witness_json(witness), "verdict": HOLDS}
    try:
        pair = normalize_witness(
            sys_, witness, block["normalize_mode"], strict_endpoints=block["strict_endpoints"]
        )
        results["normalized"] = {
            "xi": list(pair.xi),
            "eta": list(pair.eta),
            "endpoint_matched": pair.endpoint_matched,
        }
    except MarkovProdError as exc:
        results["normalized"] = None
        results["normalize_error"] = str(exc)
    return results, True, []


def _oracle_pair(sys_: MapSystem, config: dict, block: dict):
    if block.get("xi") is not None:
        return (tuple(block["xi"]), tuple(block["eta"])), None
    split_cfg = config["experiments"].get(
        "split", {"word_a": None, "word_b": None, "max_len": 3, "normalize_mode": "primitive", "strict_endpoints": False}
    )
    witness = _resolve_witness(sys_, split_cfg)
    if witness is None:
        raise ConfigError(
            "experiments.oracle needs xi/eta, or a split block that certifies a witness"
        )
    pair = normalize_witness(
        sys_,
        witness,
        split_cfg.get("normalize_mode", "primitive"),
        strict_endpoints=split_cfg.get("strict_endpoints", False),
    )
    return pair, witness


def _run_oracle(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    pair, witness = _oracle_pair(sys_, config, block)
    grid = default_grid(sys_, block["s"], block["grid_points"])
    report = verify_bounds(
        sys_,
        pair,
        s=block["s"],
        x_grid=grid,
        ell_max=block["ell_max"],
        exact=block["exact"] or exact,
    )
    rows = [
        [row.ell, float(row.x), float(row.lhs), float(row.rhs), HOLDS if row.holds else FAILS]
        for row in report.rows
    ]
    _write_csv(os.path.join(outdir, "oracle.csv"), ["ell", "x", "lhs", "rhs", "verdict"], rows)
    results = {
        "word": list(report.word),
        "replacement": list(report.replacement),
        "block_length": report.block_length,
        "s": report.s,
        "swapped": report.swapped,
        "word_measure": float(report.word_measure),
        "replacement_measure": float(report.replacement_measure),
        "decay_floor": float(report.decay_floor),
        "exact": report.exact,
        "rows": len(report.rows),
        "rows_failing": sum(1 for row in report.rows if not row.holds),
        "witness": None if witness is None else _witness_json(witness),
        "verdict": HOLDS if report.all_hold else FAILS,
    }
    return results, report.all_hold, ["oracle.csv"]


def _run_operator(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    initials = {
        kind: build_initial(sys_, kind, block["particles"], seed=seed + 31 * i)
        for i, kind in enumerate(block["initials"])
    }
    result = stability_experiment(
        sys_,
        initials,
        block["n_steps"],
        block["particles"],
        seed=seed,
        target_samples=block["target_samples"],
        target_depth=block["target_depth"],
    )
    rows = [[r.step, r.initial_id, r.distance, r.mass_gap] for r in result.rows]
    _write_csv(
        os.path.join(outdir, "operator.csv"),
        ["step", "initial_id", "distance", "mass_gap"],
        rows,
    )
    final = {
        name: next(
            r.distance for r in reversed(result.rows) if r.initial_id == name
        )
        for name in block["initials"]
    }
    results = {
        "mass_identity_error": result.mass_identity_error,
        "target_diameter": result.target_diameter,
        "final_distance": {k: float(v) for k, v in sorted(final.items())},
    }
    return results, True, ["operator.csv"]


def _run_sync(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    result = sync_experiment(
        sys_, block["trials"], block["n_max"], seed=seed, cloud_size=block["cloud_size"]
    )
    curve_rows = [
        [fit.trial, n, u, l]
        for fit, curve in zip(result.fits, result.curves)
        for n, u, l in zip(curve.n, curve.upper, curve.lower)
    ]
    _write_csv(os.path.join(outdir, "sync_curves.csv"), ["trial", "n", "upper", "lower"], curve_rows)
    fit_rows = [[f.trial, f.q_hat, f.c_hat] for f in result.fits]
    _write_csv(os.path.join(outdir, "sync_fits.csv"), ["trial", "q_hat", "C_hat"], fit_rows)
    results = {
        "max_q": result.max_q,
        "contracting_fraction": result.contracting_fraction,
        "trials": block["trials"],
        "split": _split_status(sys_, config),
    }
    return results, True, ["sync_curves.csv", "sync_fits.csv"]


def _run_contract(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    result = measure_contraction_experiment(sys_, block["trials"], block["n_max"], seed=seed)
    rows = [[r.trial, r.s, r.n, r.length] for r in result.rows]
    _write_csv(os.path.join(outdir, "contract_rows.csv"), ["trial", "s", "n", "length"], rows)
    fit_rows = [[f.trial, f.s, f.q_hat, f.c_hat] for f in result.fits]
    _write_csv(
        os.path.join(outdir, "contract_fits.csv"), ["trial", "s", "q_hat", "C_hat"], fit_rows
    )
    results = {
        "max_q": max(f.q_hat for f in result.fits),
        "trials": block["trials"],
        "split": _split_status(sys_, config),
    }
    return results, True, ["contract_rows.csv", "contract_fits.csv"]


def _run_weak_hyp(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    result = weak_hyperbolicity_experiment(
        sys_, block["trials"], block["depth"], block["tol"], seed=seed
    )
    results = {
        "fraction": result.fraction,
        "trials": result.trials,
        "depth": result.depth,
        "tol": result.tol,
        "max_diameter": result.max_diameter,
    }
    return results, True, []


def _run_coding(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    rows = []
    points = []
    for i, word in enumerate(block["words"]):
        point, bound = coding_point(sys_, tuple(word))
        rows.append([i, "".join(str(a) for a in word), *[float(v) for v in point], bound])
        points.append({"word": list(word), "point": [float(v) for v in point], "bound": bound})
    header = ["word_id", "word"] + [f"x{s}" for s in range(1, sys_.dim + 1)] + ["bound"]
    files = []
    if rows:
        _write_csv(os.path.join(outdir, "coding.csv"), header, rows)
        files.append("coding.csv")

    ok = True
    max_residual = 0.0
    max_allowance = 0.0
    n_samples = block["invariance_samples"]
    if n_samples > 0:
        words = sample_words(sys_.shift, n_samples, block["depth"] + 1, inverse=True, seed=seed)
        for row in words:
            word = tuple(int(a) for a in row)
            full, bound_full = coding_point(sys_, word)
            shifted, bound_shifted = coding_point(sys_, word[1:])
            image = evaluate_map(sys_.map_for(word[0]), shifted)
            residual = float(sum(abs(a - b) for a, b in zip(image, full)))
            allowance = bound_full + bound_shifted
            max_residual = max(max_residual, residual)
            max_allowance = max(max_allowance, allowance)
            if residual > allowance:
                ok = False
    results = {
        "points": points,
        "invariance_samples": n_samples,
        "max_residual": max_residual,
        "max_allowance": max_allowance,
        "verdict": HOLDS if ok else FAILS,
    }
    return results, ok, files


def _run_ergodic(sys_: MapSystem, config: dict, block: dict, outdir: str, seed: int, exact: bool):
    from .synchronization import ergodic_average

    x = block["x"]
    if x is None:
        x = list(sys_.ambient.center())
    result = ergodic_average(
        sys_,
        tuple(x),
        tuple(block["phi"]),
        block["n"],
        seed=seed,
        target_samples=block["target_samples"],
    )
    results = {
        "average": result.average,
        "batch_sigma": result.batch_sigma,
        "reference": result.reference,
        "reference_sigma": result.reference_sigma,
        "steps": result.steps,
        "phi": list(block["phi"]),
        "x": [float(v) for v in x],
        "split": _split_status(sys_, config),
    }
    return results, True, []


_RUNNERS = {
    "stationary": ("stationary", _run_stationary),
    "split-check": ("split", _run_split_check),
    "split-search": ("split", _run_split_search),
    "oracle": ("oracle", _run_oracle),
    "operator": ("operator", _run_operator),
    "sync": ("sync", _run_sync),
    "contract": ("contract", _run_contract),
    "weak-hyp": ("weak_hyp", _run_weak_hyp),
    "coding": ("coding", _run_coding),
    "ergodic": ("ergodic", _run_ergodic),
}

_ALL_ORDER = {
    "stationary": "stationary",
    "split": "split-check",
    "oracle": "oracle",
    "operator": "operator",
    "sync": "sync",
    "contract": "contract",
    "weak_hyp": "weak-hyp",
    "coding": "coding",
    "ergodic": "ergodic",
}


def _block_or_default(config: dict, name: str) -> dict:
    from .config import _BLOCK_VALIDATORS

    if name in config["experiments"]:
        return config["experiments"][name]
    return _BLOCK_VALIDATORS[name]({}, f"experiments.{name}")


def _dispatch(subcommand: str, sys_: MapSystem, config: dict, outdir: str, seed: int, exact: bool):
    block_name, runner = _RUNNERS[subcommand]
    block = _block_or_default(config, block_name)
    if subcommand == "split-check" and block.get("word_a") is None:
        raise ConfigError("experiments.split.word_a and word_b are required for split-check")
    return runner(sys_, config, block, outdir, seed, exact)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="markovprod",
        description="Laboratory for Markovian random products of monotone maps.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="path to the JSON experiment config")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--out", default=None, help="override the config output directory")
        sp.add_argument(
            "--threads",
            type=int,
            default=1,
            help="accepted for interface stability; execution is single-threaded",
        )
        sp.add_argument(
            "--exact", action="store_true", help="force exact rational mode in the oracle"
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        config = load_config(args.config)
        sys_ = build_system(config)
        seed = config["seed"] if args.seed is None else args.seed
        outdir = args.out if args.out is not None else config["out"]
        os.makedirs(outdir, exist_ok=True)

        if args.subcommand == "all":
            results = {}
            produced = []
            ok = True
            for block_name in EXPERIMENT_BLOCKS:
                if block_name not in config["experiments"]:
                    continue
                name = _ALL_ORDER[block_name]
                if name == "split-check" and config["experiments"]["split"].get("word_a") is None:
                    name = "split-search"
                block_results, block_ok, files = _dispatch(
                    name, sys_, config, outdir, seed, args.exact
                )
                results[name] = block_results
                produced.extend(files)
                ok = ok and block_ok
        else:
            results, ok, produced = _dispatch(
                args.subcommand, sys_, config, outdir, seed, args.exact
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=_sys.stderr)
        return 2
    except MarkovProdError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2

    summary = {
        "version": __version__,
        "subcommand": args.subcommand,
        "seed": seed,
        "threads": args.threads,
        "exact": args.exact,
        "config": config,
        "results": results,
        "verdict": HOLDS if ok else FAILS,
    }
    path = os.path.join(outdir, f"summary-{args.subcommand}.json")
    _atomic_write(path, json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"{args.subcommand}: {summary['verdict']} ({path})")
    for name in produced:
        print(f"  wrote {os.path.join(outdir, name)}")
    return 0 if ok else 1


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
