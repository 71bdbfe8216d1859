"""Robust extraction of label assignments from untrusted model output.

Models wrap their JSON in prose, invent indices, return labels outside the
schema, or truncate mid-object. Extraction finds the first balanced
top-level {...} region (string-escape aware); resolution matches entries
against the batch and schema, recording every repair in diagnostics and
never guessing a label.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..dataset import LabelSchema
from .client import GatewayError


class PayloadError(GatewayError):
    """No usable JSON classification in a response.

    When the payload parsed as an object but nothing resolved, `partial`
    carries the diagnostics gathered along the way.
    """

    def __init__(self, message: str, partial: "ParsedLabels | None" = None):
        super().__init__(message)
        self.partial = partial


@dataclass
class ParseDiagnostics:
    """Counts of everything the parser had to tolerate or drop."""

    extraneous_text_stripped: int = 0
    missing_index: int = 0
    extra_index: int = 0
    unknown_label: int = 0
    repaired_by_case_fold: int = 0
    unparseable: int = 0

    def merge(self, other: "ParseDiagnostics") -> None:
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def to_json_dict(self) -> dict:
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass
class ParsedLabels:
    """Outcome of parsing one response against one batch.

    resolved maps batch indices to canonical schema labels; every batch
    index is either resolved or counted missing (conservation).
    """

    resolved: dict[int, str] = field(default_factory=dict)
    diagnostics: ParseDiagnostics = field(default_factory=ParseDiagnostics)


def extract_json_payload(raw: str) -> tuple[str, bool]:
    """Return (first balanced top-level {...} region, prose_stripped).

    Scans candidate opening braces left to right, tracking JSON string
    boundaries and escapes so braces inside strings don't count.
    """
    for start in range(len(raw)):
        if raw[start] != "{":
            continue
        depth = 0
        in_string = False
        escaped = False
        for pos in range(start, len(raw)):
            ch = raw[pos]
            if escaped:
                escaped = False
                continue
            if in_string:
                if ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
                continue
            if ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    payload = raw[start : pos + 1]
                    stripped = bool(raw[:start].strip()) or bool(raw[pos + 1 :].strip())
                    return payload, stripped
        # unbalanced from this opening brace; try the next one
    raise PayloadError("no JSON object found in response")


def _parse_index(key: str) -> int | None:
    cleaned = key.strip().strip("\"'").strip()
    try:
        return int(cleaned)
    except ValueError:
        return None


def resolve_labels(
    payload: str, batch_indices: list[int] | tuple[int, ...], schema: LabelSchema
) -> ParsedLabels:
    """Match a JSON object of index->label pairs against batch and schema.

    Quoted integer keys are tolerated; labels match by trim + case-fold
    (counted as a repair when not an exact match); extra indices are
    dropped; unknown labels leave their index unresolved.
    """
    try:
        data = json.loads(payload)
    except json.JSONDecodeError as exc:
        raise PayloadError(f"payload is not valid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise PayloadError(f"payload is not a JSON object (got {type(data).__name__})")

    wanted = set(batch_indices)
    result = ParsedLabels()
    diag = result.diagnostics
    for key, value in data.items():
        index = _parse_index(str(key))
        if index is None or index not in wanted:
            diag.extra_index += 1
            continue
        if not isinstance(value, str):
            diag.unknown_label += 1
            continue
        label = schema.canonicalize(value)
        if label is None:
            diag.unknown_label += 1
            continue
        if value != label:
            diag.repaired_by_case_fold += 1
        result.resolved[index] = label

    diag.missing_index = len(wanted) - len(result.resolved)
    if not result.resolved:
        raise PayloadError("zero resolvable entries in payload", partial=result)
    return result


def parse_classification(
    raw: str, batch_indices: list[int] | tuple[int, ...], schema: LabelSchema
) -> ParsedLabels:
    """Total parse: never raises, whatever the input string.

    Failures come back as an all-missing ParsedLabels with `unparseable`
    set, so callers can retry or apply their fallback policy.
    """
    failed = ParsedLabels()
    failed.diagnostics.missing_index = len(batch_indices)
    failed.diagnostics.unparseable = 1
    try:
        payload, stripped = extract_json_payload(raw)
    except PayloadError:
        return failed
    try:
        parsed = resolve_labels(payload, batch_indices, schema)
    except PayloadError as exc:
        if exc.partial is None:
            return failed
        parsed = exc.partial
    if stripped:
        parsed.diagnostics.extraneous_text_stripped = 1
    return parsed
