"""JSON file formats (schema ``v1``) and exact number rendering."""

from __future__ import annotations

import json
from decimal import Decimal
from typing import Any, Dict, Optional, Tuple

from .decompose import Decomposition, SignedTerm
from .dyadic import Dyadic
from .gf2core import Subspace, check_dim
from .spectral import FunctionTable

__all__ = [
    "SCHEMA",
    "FormatError",
    "canonical_json",
    "function_to_obj",
    "function_from_obj",
    "dump_function",
    "load_function",
    "decomposition_to_obj",
    "decomposition_from_obj",
    "term_to_obj",
    "term_from_obj",
    "dyadic_decimal",
]

SCHEMA = "v1"


class FormatError(ValueError):
    """A file does not follow the v1 schema."""


def canonical_json(obj: Any) -> str:
    """Sorted keys, no insignificant whitespace, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def dyadic_decimal(d: Dyadic, max_digits: int = 12) -> str:
    """Decimal rendering; exact when it fits in ``max_digits`` fractional digits, else ``~`` prefixed."""
    k = d.log2_denominator
    exact = Decimal(d.numerator * 5 ** k).scaleb(-k)
    if k <= max_digits:
        return format(exact, "f")
    return "~" + format(round(exact, max_digits), "f")


def term_to_obj(t: SignedTerm) -> Dict[str, Any]:
    return {"sign": t.sign, **t.subspace.to_json()}


def term_from_obj(obj: Dict[str, Any]) -> SignedTerm:
    V = Subspace.from_json(obj)
    if [int(h, 16) for h in obj["basis"]] != list(V.basis):
        raise FormatError("term basis is not in canonical form")
    return SignedTerm(int(obj["sign"]), V)


def function_to_obj(f: FunctionTable, metadata: Optional[dict] = None) -> Dict[str, Any]:
    vals = [[v.numerator, v.log2_denominator] for v in f.values()]
    obj = {"schema": SCHEMA, "kind": "function", "n": f.n, "values": vals}
    if metadata:
        obj["metadata"] = metadata
    return obj


def function_from_obj(obj: Dict[str, Any]) -> Tuple[FunctionTable, dict]:
    try:
        if obj.get("schema") != SCHEMA or obj.get("kind") != "function":
            raise FormatError("not a v1 function file")
        n = check_dim(int(obj["n"]))
        raw = obj["values"]
        if len(raw) != 1 << n:
            raise FormatError(f"expected {1 << n} values, got {len(raw)}")
        vals = []
        for pair in raw:
            num, k = pair
            if not isinstance(num, int) or not isinstance(k, int) or k < 0:
                raise FormatError(f"bad value pair {pair!r}")
            vals.append(Dyadic(num, k))
        return FunctionTable.from_values(n, vals), obj.get("metadata", {})
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc)) from exc


def dump_function(f: FunctionTable, metadata: Optional[dict] = None) -> str:
    return canonical_json(function_to_obj(f, metadata))


def load_function(text: str) -> Tuple[FunctionTable, dict]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc}") from exc
    return function_from_obj(obj)


def decomposition_to_obj(d: Decomposition, trace=None) -> Dict[str, Any]:
    obj = {
        "schema": SCHEMA,
        "kind": "decomposition",
        "n": d.n,
        "L": d.L,
        "source_norm": str(d.source_norm),
        "terms": [term_to_obj(t) for t in d.terms],
    }
    if trace is not None:
        obj["trace"] = trace
    return obj


def decomposition_from_obj(obj: Dict[str, Any]) -> Decomposition:
    try:
        if obj.get("schema") != SCHEMA or obj.get("kind") != "decomposition":
            raise FormatError("not a v1 decomposition file")
        n = check_dim(int(obj["n"]))
        terms = tuple(term_from_obj(t) for t in obj["terms"])
        if any(t.subspace.n != n for t in terms):
            raise FormatError("term dimension disagrees with n")
        return Decomposition(n, terms, Dyadic.parse(obj.get("source_norm", "0")))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(str(exc)) from exc
