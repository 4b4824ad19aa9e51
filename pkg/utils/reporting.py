"""
Reports
=======
Deterministic text and JSON renderings of subcommand results.

JSON reports carry a top-level ``"schema"`` version, the variable count, the
window and the canonical term list of the main operator, plus
command-specific fields. Keys are sorted and fractions are written as "p/q"
strings, so a report is byte-identical across runs.
"""

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

from config.config import REPORT_CONFIG
from models.errors import PsdoError
from models.psdo import OpTuple, PsdOp, Window
from models.series import INF, XSeries
from utils.parsing import canonical_terms, format_fraction, format_operator, format_term

logger = logging.getLogger(__name__)


def terms_payload(L: PsdOp) -> List[Dict]:
    payload = []
    for xexp, dexp, auxexp, coeff in canonical_terms(L):
        entry = {"x": list(xexp), "d": list(dexp), "c": format_fraction(coeff)}
        if L.aux:
            entry["aux"] = {p.name: e for p, e in zip(L.aux, auxexp)}
        payload.append(entry)
    return payload


def operator_payload(L: PsdOp) -> Dict:
    return {
        "text": format_operator(L),
        "window": L.window.to_dict(),
        "terms": terms_payload(L),
    }


def format_series(s: XSeries) -> str:
    """Text of a coefficient series, in the operator syntax (no d-factors)."""
    names = [p.name for p in s.aux]
    n = s.nvars
    keys = sorted(s.terms, key=lambda k: (tuple(reversed(k[:n])), k[n:]))
    pieces = []
    for key in keys:
        text = format_term(key[:n], (0,) * n, key[n:], s.terms[key], names)
        if not pieces:
            pieces.append(text)
        elif text.startswith("-"):
            pieces.append(f"- {text[1:]}")
        else:
            pieces.append(f"+ {text}")
    return " ".join(pieces) if pieces else "0"


def jsonable(value: Any) -> Any:
    """Convert kernel values into plain JSON data."""
    if isinstance(value, PsdOp):
        return operator_payload(value)
    if isinstance(value, OpTuple):
        return [operator_payload(op) for op in value]
    if isinstance(value, XSeries):
        return format_series(value)
    if isinstance(value, Window):
        return value.to_dict()
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        return None if abs(value) == INF else value
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    return str(value)


def textual(value: Any) -> str:
    """One-line text for a report field."""
    if isinstance(value, PsdOp):
        return format_operator(value)
    if isinstance(value, OpTuple):
        return "(" + ", ".join(format_operator(op) for op in value) + ")"
    if isinstance(value, XSeries):
        return format_series(value)
    if isinstance(value, Fraction):
        return format_fraction(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(textual(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {textual(v)}" for k, v in value.items()) + "}"
    return str(value)


@dataclass
class Report:
    """Outcome of one subcommand."""

    command: str
    n: int
    result: Any = None
    extras: Dict[str, Any] = field(default_factory=dict)
    error: Optional[PsdoError] = None
    failed: bool = False

    @property
    def exit_code(self) -> int:
        if self.error is not None:
            return self.error.exit_code
        return 1 if self.failed else 0

    @classmethod
    def failure(cls, command: str, n: int, error: PsdoError) -> "Report":
        logger.info("%s failed with %s: %s", command, error.code, error.message)
        return cls(command, n, error=error)

    def to_dict(self) -> Dict:
        data = {"schema": REPORT_CONFIG["schema"], "command": self.command, "n": self.n}
        if self.error is not None:
            data["error"] = {"code": self.error.code, "message": self.error.message}
            return data
        if isinstance(self.result, PsdOp):
            data.update(operator_payload(self.result))
        elif self.result is not None:
            data["result"] = jsonable(self.result)
        for key, value in self.extras.items():
            data[key] = jsonable(value)
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=REPORT_CONFIG["json_indent"])

    def to_text(self) -> str:
        if self.error is not None:
            return f"error: {self.error.code}: {self.error.message}"
        lines = []
        if self.result is not None:
            lines.append(textual(self.result))
        for key, value in self.extras.items():
            lines.append(f"{key}: {textual(value)}")
        return "\n".join(lines)

    def render(self, output: str = "text") -> str:
        return self.to_json() if output == "json" else self.to_text()
