"""Reading sum descriptions from JSON.

Format::

    {"summands": [{"p": 0.1, "severity": {"type": "geometric", "alpha": 0.2}},
                  {"p": 0.3, "severity": {"type": "pmf", "probs": [0, 0.5, 0.5]}}],
     "truncation": {"epsilon": 1e-12, "max_support": 4096}}

``truncation`` is optional. Errors name the offending field by path.
"""

from __future__ import annotations

import json
import math
from numbers import Real

from .compound import SumSpec, SummandSpec
from .experiments import MAX_SUMMANDS, MAX_SUPPORT
from .pmf import DEFAULT_POLICY, Pmf, Severity, TruncationPolicy, geometric


class SpecError(ValueError):
    """A malformed spec file; ``where`` is a line number or a field path."""

    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}")
        self.where = where
        self.message = message


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise SpecError(path, f"expected a number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise SpecError(path, "must be finite")
    return value


def _object(value, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> dict:
    if not isinstance(value, dict):
        raise SpecError(path, f"expected an object, got {type(value).__name__}")
    for key in required:
        if key not in value:
            raise SpecError(f"{path}.{key}", "missing required field")
    extra = sorted(set(value) - set(required) - set(optional))
    if extra:
        raise SpecError(f"{path}.{extra[0]}", "unknown field")
    return value


def parse_truncation(raw, path: str = "truncation") -> TruncationPolicy:
    obj = _object(raw, path, (), ("epsilon", "max_support"))
    eps = _number(obj.get("epsilon", DEFAULT_POLICY.epsilon), f"{path}.epsilon")
    ms = obj.get("max_support", DEFAULT_POLICY.max_support)
    if isinstance(ms, bool) or not isinstance(ms, int):
        raise SpecError(f"{path}.max_support", "expected an integer")
    if ms > MAX_SUPPORT:
        raise SpecError(f"{path}.max_support", f"{ms} exceeds the cap of {MAX_SUPPORT}")
    try:
        return TruncationPolicy(eps, ms)
    except ValueError as exc:
        raise SpecError(path, str(exc)) from None


def parse_severity(raw, path: str, policy: TruncationPolicy) -> Severity:
    if not isinstance(raw, dict):
        raise SpecError(path, f"expected an object, got {type(raw).__name__}")
    kind = raw.get("type")
    if kind == "geometric":
        obj = _object(raw, path, ("type", "alpha"))
        alpha = _number(obj["alpha"], f"{path}.alpha")
        if not 0 < alpha < 1:
            raise SpecError(f"{path}.alpha", f"must lie in (0, 1), got {alpha}")
        return geometric(alpha, policy)
    if kind == "pmf":
        obj = _object(raw, path, ("type", "probs"), ("tail_mass",))
        probs = obj["probs"]
        if not isinstance(probs, list) or not probs:
            raise SpecError(f"{path}.probs", "expected a nonempty list")
        if len(probs) > policy.max_support + 1:
            raise SpecError(f"{path}.probs", f"longer than max_support + 1 = {policy.max_support + 1}")
        values = [_number(v, f"{path}.probs[{k}]") for k, v in enumerate(probs)]
        tail = _number(obj.get("tail_mass", 0.0), f"{path}.tail_mass")
        try:
            return Severity.from_pmf(Pmf(values, tail))
        except ValueError as exc:
            raise SpecError(path, str(exc)) from None
    if kind is None:
        raise SpecError(f"{path}.type", "missing required field")
    raise SpecError(f"{path}.type", f"unknown severity type {kind!r}; use 'geometric' or 'pmf'")


def parse_spec(data, overrides: dict | None = None) -> tuple[SumSpec, TruncationPolicy]:
    """Build a ``SumSpec`` from decoded JSON.

    ``overrides`` may set ``epsilon`` or ``max_support``, replacing the
    file's truncation fields.
    """
    obj = _object(data, "$", ("summands",), ("truncation",))
    trunc = obj.get("truncation", {})
    if overrides:
        trunc = {**_object(trunc, "$.truncation", (), ("epsilon", "max_support")), **{k: v for k, v in overrides.items() if v is not None}}
    policy = parse_truncation(trunc, "$.truncation")
    raw = obj["summands"]
    if not isinstance(raw, list) or not raw:
        raise SpecError("$.summands", "expected a nonempty list")
    if len(raw) > MAX_SUMMANDS:
        raise SpecError("$.summands", f"{len(raw)} summands exceeds the cap of {MAX_SUMMANDS}")
    cache: dict[str, Severity] = {}
    summands = []
    for i, item in enumerate(raw):
        path = f"$.summands[{i}]"
        s = _object(item, path, ("p", "severity"))
        p = _number(s["p"], f"{path}.p")
        if not 0 < p < 1:
            raise SpecError(f"{path}.p", f"must lie in (0, 1), got {p}")
        # equal severity blocks share one object so identical summands are detected cheaply
        key = json.dumps(s["severity"], sort_keys=True)
        if key not in cache:
            cache[key] = parse_severity(s["severity"], f"{path}.severity", policy)
        summands.append(SummandSpec(p, cache[key]))
    return SumSpec(summands), policy


def loads_spec(text: str, overrides: dict | None = None) -> tuple[SumSpec, TruncationPolicy]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno}, column {exc.colno}", exc.msg) from None
    return parse_spec(data, overrides)


def load_spec(path: str, overrides: dict | None = None) -> tuple[SumSpec, TruncationPolicy]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return loads_spec(text, overrides)
    except SpecError as exc:
        raise SpecError(f"{path}, {exc.where}", exc.message) from None
