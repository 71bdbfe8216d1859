"""Corpus-level zero-shot classification over a chat provider.

Documents are batched, each batch gets one request plus at most one
follow-up asking only about entries the parser could not resolve, and
anything still unresolved is marked invalid (scored as incorrect
downstream, never guessed). Every request/response pair is appended to a
JSONL audit log that can be replayed through the parser offline.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..baselines import ScoredPrediction
from ..dataset import Document, LabelSchema
from .client import GatewayError, LlmRunConfig, build_request_body, complete_chat
from .parsing import ParseDiagnostics, ParsedLabels, parse_classification
from .prompts import TaskDescription, build_prompt


class ClassificationAborted(GatewayError):
    """A batch failed permanently; partial results stay in the audit log."""

    def __init__(self, cause: Exception, completed_batches: int, total_batches: int):
        super().__init__(
            f"aborted after {completed_batches}/{total_batches} batches: {cause}"
        )
        self.cause = cause


class AuditLog:
    """Append-only JSONL sink; appends are serialized across threads.

    Constructing the log truncates any file left over from a previous run
    under the same path, so one AuditLog spans exactly one run.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text("", encoding="utf-8")
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")


@dataclass
class LlmClassification:
    """Final per-document outcome of one classification pass."""

    doc_ids: tuple[int, ...]
    resolved: dict[int, str]
    diagnostics: ParseDiagnostics
    n_requests: int
    n_reasks: int

    @property
    def invalid_ids(self) -> list[int]:
        return [i for i in self.doc_ids if i not in self.resolved]

    def one_hot_predictions(self, schema: LabelSchema) -> dict[int, ScoredPrediction]:
        """Degenerate distributions for the resolved documents."""
        out = {}
        for doc_id, label in self.resolved.items():
            scores = [0.0] * len(schema)
            scores[schema.index_of(label)] = 1.0
            out[doc_id] = ScoredPrediction(doc_id=doc_id, label=label, scores=tuple(scores))
        return out


@dataclass
class _BatchOutcome:
    resolved: dict[int, str] = field(default_factory=dict)
    diagnostics: ParseDiagnostics = field(default_factory=ParseDiagnostics)
    n_requests: int = 0
    n_reasks: int = 0


def _audit_record(meta, batch_no, phase, doc_ids, body, response, parsed: ParsedLabels) -> dict:
    return {
        **meta,
        "batch": batch_no,
        "phase": phase,
        "doc_ids": list(doc_ids),
        "request": body,
        "response": {
            "raw_text": response.raw_text,
            "latency_s": response.latency_s,
            "model": response.model,
            "retries": response.retries,
        },
        "parsed": {
            "resolved": {str(k): v for k, v in sorted(parsed.resolved.items())},
            "diagnostics": parsed.diagnostics.to_json_dict(),
        },
    }


def classify_corpus(
    docs: list[Document],
    schema: LabelSchema,
    task: TaskDescription,
    config: LlmRunConfig,
    provider,
    audit: AuditLog | None = None,
    audit_meta: dict | None = None,
    text_of=None,
) -> LlmClassification:
    """Classify every document, preserving input order in the result.

    `text_of` maps a document to the string sent to the model (defaults to
    the raw text). Batches run with up to `config.concurrency` requests in
    flight; results are reassembled in batch order.
    """
    if not docs:
        raise GatewayError("no documents to classify")
    text_of = text_of if text_of is not None else (lambda doc: doc.text)
    meta = dict(audit_meta or {})

    batches = [
        docs[i : i + config.batch_size] for i in range(0, len(docs), config.batch_size)
    ]

    def run_batch(batch_no: int) -> _BatchOutcome:
        batch = batches[batch_no]
        outcome = _BatchOutcome()
        pairs = [(doc.id, text_of(doc)) for doc in batch]
        bundle = build_prompt(schema, task, pairs)
        response = complete_chat(bundle, config, provider)
        outcome.n_requests += 1
        parsed = parse_classification(response.raw_text, bundle.batch_indices, schema)
        if audit is not None:
            audit.append(
                _audit_record(
                    meta, batch_no, "initial", bundle.batch_indices,
                    build_request_body(bundle, config), response, parsed,
                )
            )
        outcome.resolved.update(parsed.resolved)
        outcome.diagnostics.merge(parsed.diagnostics)

        unresolved = [(i, t) for i, t in pairs if i not in outcome.resolved]
        if unresolved:
            re_bundle = build_prompt(schema, task, unresolved)
            re_response = complete_chat(re_bundle, config, provider)
            outcome.n_requests += 1
            outcome.n_reasks += 1
            re_parsed = parse_classification(
                re_response.raw_text, re_bundle.batch_indices, schema
            )
            if audit is not None:
                audit.append(
                    _audit_record(
                        meta, batch_no, "re_ask", re_bundle.batch_indices,
                        build_request_body(re_bundle, config), re_response, re_parsed,
                    )
                )
            outcome.resolved.update(re_parsed.resolved)
            outcome.diagnostics.merge(re_parsed.diagnostics)
        return outcome

    outcomes: list[_BatchOutcome | None] = [None] * len(batches)
    failure: Exception | None = None
    completed = 0
    with ThreadPoolExecutor(max_workers=config.concurrency) as pool:
        futures = {pool.submit(run_batch, b): b for b in range(len(batches))}
        for future, batch_no in futures.items():
            try:
                outcomes[batch_no] = future.result()
                completed += 1
            except Exception as exc:  # noqa: BLE001 - reported, not swallowed
                if failure is None:
                    failure = exc
    if failure is not None:
        raise ClassificationAborted(failure, completed, len(batches)) from failure

    resolved: dict[int, str] = {}
    diagnostics = ParseDiagnostics()
    n_requests = 0
    n_reasks = 0
    for outcome in outcomes:
        resolved.update(outcome.resolved)
        diagnostics.merge(outcome.diagnostics)
        n_requests += outcome.n_requests
        n_reasks += outcome.n_reasks
    # after re-asks, "missing" means finally unresolved, not per-parse gaps
    diagnostics.missing_index = len(docs) - len(resolved)

    return LlmClassification(
        doc_ids=tuple(doc.id for doc in docs),
        resolved=resolved,
        diagnostics=diagnostics,
        n_requests=n_requests,
        n_reasks=n_reasks,
    )


def replay_audit(path: str | Path, schema: LabelSchema):
    """Re-run the parser over a logged run.

    Yields (record, reparsed ParsedLabels); the reparsed labels must match
    the record's stored "parsed" section for a faithful log.
    """
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            parsed = parse_classification(
                record["response"]["raw_text"], record["doc_ids"], schema
            )
            yield record, parsed
