"""Command-line interface: ``specnorm gen|analyze|decompose|verify|sweep``.

Exit codes: 0 ok, 2 verification failure, 3 stage failure, 4 bad input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import sys
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .connectivity import ConnectivityConfig
from .decompose import DecomposeConfig, decompose, verify_decomposition
from .dyadic import Dyadic
from .errors import SpecnormError, StageError
from .formats import (
    FormatError,
    canonical_json,
    decomposition_from_obj,
    decomposition_to_obj,
    dump_function,
    dyadic_decimal,
    load_function,
)
from .freiman import FreimanConfig
from .generators import GENERATORS, generate
from .spectral import round_almost_integer, spectral_norm, wht

EXIT_OK, EXIT_VERIFY, EXIT_STAGE, EXIT_INPUT = 0, 2, 3, 4
CSV_HEADER = ["n", "M", "L", "steps", "wall_time_ms", "seed", "status"]


class InputError(Exception):
    """Bad command-line input (maps to exit code 4)."""


# --- helpers ---------------------------------------------------------------


def _write(text: str, out: Optional[str]) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _parse_params(items: Sequence[str]) -> Dict[str, Any]:
    params = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"parameter {item!r} is not key=value")
        try:
            params[key] = json.loads(value)
        except json.JSONDecodeError:
            params[key] = value
    return params


def _fraction(value) -> Fraction:
    if isinstance(value, str) and "^" in value:
        return Dyadic.parse(value).to_fraction()
    return Fraction(value)


def load_config(path: Optional[str], seed: Optional[int]) -> DecomposeConfig:
    """Build a :class:`DecomposeConfig` from an optional JSON file and a seed override."""
    raw: Dict[str, Any] = json.loads(_read(path)) if path else {}
    try:
        conn = ConnectivityConfig(**{
            k: (_fraction(v) if k in ("C2", "C3", "fallback_max_doubling") else v)
            for k, v in raw.pop("connectivity", {}).items()
        })
        fre = FreimanConfig(**raw.pop("freiman", {}))
        kwargs: Dict[str, Any] = {"connectivity": conn, "freiman": fre}
        for key in ("eta", "eps_threshold"):
            if key in raw:
                kwargs[key] = Dyadic.from_fraction(_fraction(raw.pop(key)))
        if "c_cls" in raw:
            kwargs["c_cls"] = _fraction(raw.pop("c_cls"))
        for key in ("p_cap", "seed", "resample_budget"):
            if key in raw:
                kwargs[key] = int(raw.pop(key))
        if raw:
            raise InputError(f"unknown config keys: {sorted(raw)}")
        cfg = DecomposeConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad config: {exc}") from exc
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


def analyze_report(f) -> Dict[str, Any]:
    F = wht(f)
    view = round_almost_integer(f)
    hist = Counter(str(abs(c)) for c in F.values() if c != 0)
    return {
        "n": f.n,
        "spectral_norm": str(spectral_norm(F)),
        "epsilon": str(view.epsilon),
        "unique_rounding": view.unique,
        "support_size": len(view.f_Z.support()),
        "spectrum_size": sum(hist.values()),
        "spectrum_histogram": {k: hist[k] for k in sorted(hist, key=lambda s: Dyadic.parse(s))},
    }


def _trace_obj(trace) -> List[Dict[str, Any]]:
    return [
        {
            "i": s.i, "V": s.V.to_json()["basis"], "norm": str(s.norm), "epsilon": str(s.epsilon), "V_dim": s.V_dim,
            "coset_count": s.coset_count, "support_size": s.support_size, "p": s.p,
            "p_eta": s.p_eta, "small_doubling": str(s.small_doubling),
            "density_in_U": str(s.density_in_U), "g_epsilon": str(s.g_epsilon),
            "next_norm": str(s.next_norm), "next_epsilon": str(s.next_epsilon),
        }
        for s in trace
    ]


# --- subcommands -----------------------------------------------------------


def cmd_gen(args) -> int:
    params = _parse_params(args.param)
    try:
        f, meta = generate(args.kind, args.n, args.seed, **params)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    _write(dump_function(f, meta), args.out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    f, _ = load_function(_read(args.file))
    rep = analyze_report(f)
    if args.json:
        _write(canonical_json(rep), args.out)
    else:
        lines = [f"{k}: {v}" for k, v in rep.items() if k != "spectrum_histogram"]
        lines += [f"  |c| = {k}: {v}" for k, v in rep["spectrum_histogram"].items()]
        _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_decompose(args) -> int:
    f, _ = load_function(_read(args.file))
    cfg = load_config(args.config, args.seed)
    d, trace = decompose(f, cfg)
    _write(canonical_json(decomposition_to_obj(d, _trace_obj(trace))), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    f, _ = load_function(_read(args.function))
    try:
        d = decomposition_from_obj(json.loads(_read(args.decomposition)))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    view = round_almost_integer(f)
    if not view.unique:
        raise InputError("function is not almost integer-valued (epsilon >= 1/2)")
    ok, L, dev = verify_decomposition(view.f_Z, d)
    _write(canonical_json({"ok": ok, "L": L, "max_deviation": dev}), args.out)
    return EXIT_OK if ok else EXIT_VERIFY


def _instance_seed(base: int, kind: str, n: int, params: Dict[str, Any], rep: int) -> int:
    key = canonical_json({"base": base, "kind": kind, "n": n, "params": params, "rep": rep})
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:4], "big") >> 1


def sweep_instances(spec: Dict[str, Any], base_seed: int) -> List[Dict[str, Any]]:
    """Expand a sweep spec into instances in canonical order.

    ``spec = {"generator": kind, "n": [..], "grid": {param: [..]}, "seeds": count}``.
    """
    try:
        kind = spec["generator"]
        ns = [int(n) for n in spec["n"]]
        grid = spec.get("grid", {})
        reps = int(spec.get("seeds", 1))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad sweep spec: {exc}") from exc
    if kind not in GENERATORS:
        raise InputError(f"unknown generator {kind!r}")
    keys = sorted(grid)
    out = []
    for n in ns:
        for combo in itertools.product(*(grid[k] for k in keys)):
            params = dict(zip(keys, combo))
            for rep in range(reps):
                seed = _instance_seed(base_seed, kind, n, params, rep)
                out.append({"kind": kind, "n": n, "params": params, "seed": seed})
    return out


def run_instance(inst: Dict[str, Any], cfg: DecomposeConfig) -> Dict[str, Any]:
    t0 = time.perf_counter()
    f, _ = generate(inst["kind"], inst["n"], inst["seed"], **inst["params"])
    M = spectral_norm(wht(f))
    row = {"n": inst["n"], "M": dyadic_decimal(M), "L": "", "steps": "", "seed": inst["seed"]}
    try:
        d, trace = decompose(f, replace(cfg, seed=inst["seed"]))
        row.update(L=d.L, steps=len(trace), status="ok")
    except StageError as exc:
        row["status"] = "cap-exceeded" if "cap" in str(exc) else exc.stage
        steps = getattr(exc.trace, "steps", None)
        row["steps"] = len(steps) if steps is not None else ""
    except ValueError:
        row["status"] = "precondition"
    except Exception as exc:  # recorded per row; a sweep never aborts on one instance
        row["status"] = f"error:{type(exc).__name__}"
    row["wall_time_ms"] = int((time.perf_counter() - t0) * 1000)
    return row


def _row_key(row) -> tuple:
    return int(row["n"]), int(row["seed"])


def cmd_sweep(args) -> int:
    try:
        spec = json.loads(_read(args.spec))
    except json.JSONDecodeError as exc:
        raise InputError(f"bad sweep spec: {exc}") from exc
    cfg = load_config(args.config, None)
    instances = sweep_instances(spec, args.seed)
    done: Dict[tuple, Dict[str, str]] = {}
    out = Path(args.out) if args.out not in (None, "-") else None
    if out is not None and out.exists():
        with out.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != CSV_HEADER:
                raise InputError(f"{out} has an unexpected header")
            for row in reader:
                done[_row_key(row)] = row
    todo = [inst for inst in instances if (inst["n"], inst["seed"]) not in done]
    if args.limit is not None:
        todo = todo[: args.limit]
    if args.jobs > 1 and len(todo) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(run_instance, todo, itertools.repeat(cfg)))
    else:
        results = [run_instance(inst, cfg) for inst in todo]
    for row in results:
        done[_row_key(row)] = row
    order = {(inst["n"], inst["seed"]): i for i, inst in enumerate(instances)}
    rows = sorted(done.values(), key=lambda r: order.get(_row_key(r), len(order)))
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: row[k] for k in CSV_HEADER})
    _write(buf.getvalue(), args.out)
    return EXIT_OK


# --- entry point -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="specnorm",
                                     description="Decompose integer-valued functions on F_2^n "
                                                 "with small spectral norm.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a function file")
    p.add_argument("kind", choices=sorted(GENERATORS))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE",
                   help="generator parameter, e.g. L=4 or k=3 (repeatable)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="report norm, epsilon, support and spectrum")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("decompose", help="write f_Z as signed subspace indicators")
    p.add_argument("file")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("verify", help="check a decomposition against a function file")
    p.add_argument("function")
    p.add_argument("decomposition")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a resumable experiment grid, writing CSV")
    p.add_argument("spec")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--limit", type=int, help="run at most this many new rows (for chunked runs)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (SpecnormError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
