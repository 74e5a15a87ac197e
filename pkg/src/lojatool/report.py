"""Deterministic JSON reports.

Floats are written with 17 significant digits, non-finite floats as the
strings ``"inf"``, ``"-inf"`` and ``"nan"``, and keys in insertion order, so
identical inputs give byte-identical output.  The body is checksummed; timings
(when requested) live outside it.
"""

from __future__ import annotations

import hashlib
import json
import math
from fractions import Fraction
from typing import Any

import jsonschema
import numpy as np

from . import __version__

REPORT_VERSION = 1


def _plain(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "value") and isinstance(obj.value, str):  # enums
        return obj.value
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _float(v: float) -> str:
    if math.isnan(v):
        return '"nan"'
    if math.isinf(v):
        return '"inf"' if v > 0 else '"-inf"'
    s = "%.17g" % v
    if not any(ch in s for ch in ".en"):
        s += ".0"  # keep floats distinguishable from integers
    return s


def _emit(obj, indent: int, level: int, out: list[str]):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (k, v) in enumerate(obj.items()):
            out.append(pad + json.dumps(k) + ": ")
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "}")
    elif isinstance(obj, list):
        if not obj:
            out.append("[]")
            return
        if all(not isinstance(v, (dict, list)) for v in obj):
            out.append("[")
            for i, v in enumerate(obj):
                _emit(v, indent, level, out)
                if i < len(obj) - 1:
                    out.append(", ")
            out.append("]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad)
            _emit(v, indent, level + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(end + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, float):
        out.append(_float(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, int):
        out.append(str(obj))
    else:
        out.append(json.dumps(obj))


def dumps(obj: Any, indent: int = 2) -> str:
    """Canonical JSON text of ``obj`` (see module docstring)."""
    out: list[str] = []
    _emit(_plain(obj), indent, 0, out)
    return "".join(out)


def checksum(body: Any) -> str:
    return "sha256:" + hashlib.sha256(dumps(body, indent=0).encode()).hexdigest()


def envelope(command: str, body: dict, timings: dict | None = None) -> dict:
    rep = {
        "report_version": REPORT_VERSION,
        "tool": {"name": "lojatool", "version": __version__},
        "command": command,
        "body": body,
        "checksum": checksum(body),
    }
    if timings is not None:
        rep["timings"] = timings
    return rep


def error_object(exc: BaseException, category: str | None = None) -> dict:
    code = getattr(exc, "code", type(exc).__name__)
    if category is None:
        category = "input_error" if isinstance(exc, ValueError) else "numerical_failure"
    obj = {"error": {"type": type(exc).__name__, "code": code, "category": category,
                     "message": str(exc)}}
    offset = getattr(exc, "offset", None)
    if offset is not None:
        obj["error"]["offset"] = offset
    return obj


# -- schema ----------------------------------------------------------------

_NUM = {"anyOf": [{"type": "number"}, {"enum": ["inf", "-inf", "nan"]}]}
_OPT_NUM = {"anyOf": [_NUM, {"type": "null"}]}


def _obj(props: dict, required: list[str] | None = None, extra: bool = False) -> dict:
    return {"type": "object", "properties": props,
            "required": list(props) if required is None else required,
            "additionalProperties": extra}


_ESTIMATE = _obj({
    "theta_hat": _NUM,
    "method": {"enum": ["sampling", "flow", "exact_monomial"]},
    "fit_residual": _NUM,
    "n_samples": {"type": "integer"},
    "radii_range": {"anyOf": [{"type": "array", "items": _NUM}, {"type": "null"}]},
    "constant_hat": _OPT_NUM,
    "diagnostics": {"type": "object"},
})

_VERDICT = _obj({
    "kind": {"enum": ["Morse", "MorseBott", "NotMorseBott", "Constant", "Inconclusive"]},
    "label": {"type": "string"},
    "kernel_dim": {"type": "integer"},
    "critical_dim": {"type": ["integer", "null"]},
    "order": {"type": ["integer", "null"]},
    "direction": {"anyOf": [{"type": "array", "items": _NUM}, {"type": "null"}]},
    "exponent_bound": _OPT_NUM,
    "max_order_checked": {"type": ["integer", "null"]},
    "reduced_polynomial": {"type": ["string", "null"]},
    "diagnostics": {"type": "object"},
})

_INEQUALITY = _obj({
    "passed": {"type": "boolean"},
    "min_margin": _NUM,
    "worst_point": {"type": "array", "items": _NUM},
    "theta": _NUM,
    "constant": _NUM,
    "n_samples": {"type": "integer"},
    "atol": _NUM,
})

_SKIPPED = _obj({"skipped": {"type": "string"}})
_ERROR = _obj({"error": _obj({
    "type": {"type": "string"}, "code": {"type": "string"}, "category": {"type": "string"},
    "message": {"type": "string"}, "offset": {"type": "integer"}},
    required=["type", "code", "category", "message"])})

_DECAY = _obj({
    "kind": {"enum": ["exponential", "power"]},
    "rate": _OPT_NUM, "beta": _OPT_NUM, "residual": _NUM,
    "window": {"type": "array", "items": _NUM},
    "n_samples": {"type": "integer"}, "other_residual": _NUM, "time_offset": _NUM,
})

_BOUND = _obj({
    "passed": {"type": "boolean"}, "max_excess": _NUM, "tolerance": _NUM,
    "worst_time": _NUM, "branch": {"enum": ["exponential", "power"]},
    "c": _NUM, "theta": _NUM, "gamma": _NUM, "a": _NUM, "n_steps": {"type": "integer"},
    "limit_residual": _NUM, "notes": {"type": "object"},
})

_TRAJ = _obj({
    "start": {"type": "array", "items": _NUM},
    "n_steps": {"type": "integer"},
    "terminated_by": {"enum": ["time_limit", "gradient_floor", "step_failure"]},
    "t_final": _NUM,
    "final_state": {"type": "array", "items": _NUM},
    "f_final": _NUM,
    "gradnorm_final": _NUM,
})

_FLOW = _obj({
    "trajectory": _TRAJ,
    "decay_fit": {"anyOf": [_DECAY, _ERROR]},
    "exponent": {"anyOf": [_ESTIMATE, {"type": "null"}]},
    "bound_check": {"anyOf": [_BOUND, _ERROR, _SKIPPED]},
})

_INPUT = _obj({
    "poly": {"type": "string"},
    "dim": {"type": "integer"},
    "at": {"type": "array", "items": _NUM},
})

_BODIES = {
    "analyze": _obj({
        "input": _INPUT,
        "verdict": _VERDICT,
        "exponent_sampling": {"anyOf": [_ESTIMATE, _ERROR, _SKIPPED]},
        "exponent_flow": {"anyOf": [_ESTIMATE, _ERROR, _SKIPPED]},
        "inequality_check": {"anyOf": [_INEQUALITY, _SKIPPED]},
        "bound_check": {"anyOf": [_BOUND, _ERROR, _SKIPPED]},
        "flow": {"anyOf": [_FLOW, _ERROR, _SKIPPED]},
        "config": {"type": "object"},
    }),
    "monomial": _obj({
        "n": {"type": "array", "items": {"type": "integer"}},
        "N": {"type": "integer"},
        "theta": {"type": "string"},
        "theta_value": _NUM,
    }),
    "flow": _obj({
        "input": _INPUT,
        "t_end": _NUM,
        "flow": _FLOW,
        "config": {"type": "object"},
    }),
    "reduce": _obj({
        "input": _INPUT,
        "kernel_dim": {"type": "integer"},
        "rank": {"type": "integer"},
        "trust_radius": _NUM,
        "half_width": _NUM,
        "axes": {"type": "array", "items": {"type": "string"}},
        "max_residual": _NUM,
        "max_factor_residual": _NUM,
        "rows": {"type": "array", "items": _obj({
            "z": {"type": "array", "items": _NUM},
            "xi": {"type": "array", "items": _NUM},
            "residual": _NUM,
            "factor_residual": _NUM,
        })},
        "config": {"type": "object"},
    }),
    "exponent": _obj({
        "input": _INPUT,
        "estimate": _ESTIMATE,
        "config": {"type": "object"},
    }),
}


def schema_for(command: str) -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "type": "object",
        "properties": {
            "report_version": {"const": REPORT_VERSION},
            "tool": _obj({"name": {"const": "lojatool"}, "version": {"type": "string"}}),
            "command": {"const": command},
            "body": _BODIES[command],
            "checksum": {"type": "string", "pattern": "^sha256:[0-9a-f]{64}$"},
            "timings": {"type": "object", "additionalProperties": {"type": "number"}},
        },
        "required": ["report_version", "tool", "command", "body", "checksum"],
        "additionalProperties": False,
    }


def validate(report: dict) -> None:
    """Raise :class:`jsonschema.ValidationError` unless ``report`` matches its schema.

    ``report`` may be the parsed JSON text or the in-memory envelope.
    """
    jsonschema.validate(_plain(report), schema_for(report["command"]))
