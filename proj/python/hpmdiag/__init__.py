"""Diagnose performance patterns from hardware counter sessions."""

import json

from ._hpmdiag import (
    Error,
    IoError,
    ParseError,
    ValidationError,
    builtin_groups,
    classify_scaling,
    evaluate,
    generate,
    imbalance_index,
    patterns,
    roofline,
)
from . import _hpmdiag

__all__ = [
    "Error",
    "IoError",
    "ParseError",
    "ValidationError",
    "analyze",
    "builtin_groups",
    "classify_scaling",
    "diagnose_synthetic",
    "evaluate",
    "generate",
    "imbalance_index",
    "patterns",
    "roofline",
]


def analyze(session, machine, *, format="json", **kwargs):
    """Report for a session file; a dict for JSON, a string for text."""
    out = _hpmdiag.analyze(str(session), str(machine), format=format, **kwargs)
    return json.loads(out) if format == "json" else out


def diagnose_synthetic(session_json, label_json, *, format="json"):
    out = _hpmdiag.diagnose_synthetic(session_json, label_json, format)
    return json.loads(out) if format == "json" else out
