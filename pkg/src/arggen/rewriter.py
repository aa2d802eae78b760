"""Rewrite noisy pair text through a pluggable backend, then review the diffs.

Each rewritten field produces a RewriteRecord holding the original text, the
rewritten text, and a review status, so the original is never lost and only
explicitly approved rewrites reach downstream datasets. Review is out-of-band:
the CLI walks pending records and a human approves or rejects each one.
"""

from __future__ import annotations

import difflib
import json
import logging
import time
import urllib.request
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Protocol, Sequence

from .errors import AlreadyReviewed, BackendUnavailable, InvalidRewrite, ParseError
from .pair_builder import FactArgumentPair

logger = logging.getLogger(__name__)

INSTRUCTION_TEMPLATE = (
    "Rewrite preserving all facts, names, dates, and legal meaning; fix grammar only"
)

REWRITE_FIELDS = ("facts_summary", "argument_summary")
API_KEY_ENV_VAR = "ARGGEN_REWRITE_API_KEY"


@dataclass(frozen=True)
class RewriteRecord:
    """One field's rewrite, its provenance, and its review state."""

    doc_id: str
    field: str
    original_text: str
    rewritten_text: str
    backend_id: str
    status: str = "pending"
    reviewer_note: str | None = None
    instruction: str = INSTRUCTION_TEMPLATE
    attempts: int = 1

    def __post_init__(self):
        if self.field not in REWRITE_FIELDS:
            raise ValueError(f"bad field: {self.field!r}")
        if self.status not in ("pending", "approved", "rejected"):
            raise ValueError(f"bad status: {self.status!r}")
        if self.status != "rejected" and not self.rewritten_text:
            raise ValueError("rewritten_text must be non-empty unless rejected")


class RewriteBackend(Protocol):
    """External text-rewriting service handle."""

    backend_id: str
    timeout_seconds: float
    max_retries: int

    def rewrite(self, text: str, instruction: str) -> str: ...


class IdentityBackend:
    """Offline backend that returns text unchanged; useful for dry runs and tests."""

    backend_id = "identity"
    timeout_seconds = 1.0
    max_retries = 1

    def rewrite(self, text: str, instruction: str) -> str:
        return text


class HttpRewriteBackend:
    """POSTs {text, instruction} as JSON to a rewrite service.

    The bearer token is read from the ARGGEN_REWRITE_API_KEY environment
    variable. The response must be a JSON object with a "text" field.
    """

    def __init__(self, url: str, backend_id: str = "http", timeout_seconds: float = 30.0, max_retries: int = 3):
        import os

        self.url = url
        self.backend_id = backend_id
        self.timeout_seconds = timeout_seconds
        self.max_retries = max_retries
        self._api_key = os.environ.get(API_KEY_ENV_VAR, "")

    def rewrite(self, text: str, instruction: str) -> str:
        payload = json.dumps({"text": text, "instruction": instruction}).encode("utf-8")
        request = urllib.request.Request(
            self.url,
            data=payload,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self._api_key}",
            },
        )
        with urllib.request.urlopen(request, timeout=self.timeout_seconds) as response:
            return json.loads(response.read().decode("utf-8"))["text"]


def _rewrite_with_retries(
    backend: RewriteBackend,
    text: str,
    sleep: Callable[[float], None],
    backoff_base: float,
    backoff_cap: float,
) -> tuple[str, int]:
    max_attempts = max(1, getattr(backend, "max_retries", 1))
    last_error: Exception | None = None
    for attempt in range(1, max_attempts + 1):
        try:
            rewritten = backend.rewrite(text, INSTRUCTION_TEMPLATE)
        except Exception as exc:  # backend failures are retryable
            last_error = exc
            logger.warning(
                "rewrite attempt %d/%d failed: %s", attempt, max_attempts, exc
            )
            if attempt < max_attempts:
                sleep(min(backoff_cap, backoff_base * 2 ** (attempt - 1)))
            continue
        if not rewritten or not rewritten.strip():
            raise InvalidRewrite("backend returned empty text")
        logger.info("rewrite succeeded on attempt %d/%d", attempt, max_attempts)
        return rewritten, attempt
    raise BackendUnavailable(
        f"backend {backend.backend_id!r} failed after {max_attempts} attempts: {last_error}"
    )


def rewrite_pair(
    pair: FactArgumentPair,
    backend: RewriteBackend,
    sleep: Callable[[float], None] = time.sleep,
    backoff_base: float = 0.1,
    backoff_cap: float = 2.0,
) -> tuple[FactArgumentPair, tuple[RewriteRecord, RewriteRecord]]:
    """Rewrite both fields of an original pair.

    Returns the rewritten pair (status pending, so it cannot enter a dataset
    until reviewed) and one record per field retaining the original text.
    """
    if pair.source != "original":
        raise ValueError(f"pair {pair.doc_id!r} was already rewritten")

    records = []
    new_texts = {}
    for field_name in REWRITE_FIELDS:
        original = getattr(pair, field_name)
        rewritten, attempts = _rewrite_with_retries(backend, original, sleep, backoff_base, backoff_cap)
        new_texts[field_name] = rewritten
        records.append(
            RewriteRecord(
                doc_id=pair.doc_id,
                field=field_name,
                original_text=original,
                rewritten_text=rewritten,
                backend_id=backend.backend_id,
                status="pending",
                attempts=attempts,
            )
        )

    rewritten_pair = replace(
        pair,
        facts_summary=new_texts["facts_summary"],
        argument_summary=new_texts["argument_summary"],
        source="rewritten",
        rewrite_status="pending",
    )
    return rewritten_pair, (records[0], records[1])


def diff_report(record: RewriteRecord) -> str:
    """Token-level diff between original and rewritten text.

    Deletions are prefixed with '-', insertions with '+'; a trailing line
    reports the counts. Deterministic for fixed inputs.
    """
    original = record.original_text.split()
    rewritten = record.rewritten_text.split()
    matcher = difflib.SequenceMatcher(a=original, b=rewritten, autojunk=False)
    parts: list[str] = []
    added = removed = 0
    for op, a_start, a_end, b_start, b_end in matcher.get_opcodes():
        if op in ("equal", "delete", "replace"):
            for token in original[a_start:a_end]:
                if op == "equal":
                    parts.append(token)
                else:
                    parts.append(f"-{token}")
                    removed += 1
        if op in ("insert", "replace"):
            for token in rewritten[b_start:b_end]:
                parts.append(f"+{token}")
                added += 1
    header = f"{record.doc_id} {record.field} [{record.backend_id}]"
    body = " ".join(parts)
    footer = f"tokens added: {added}, tokens removed: {removed}"
    return f"{header}\n{body}\n{footer}"


def apply_review(record: RewriteRecord, decision: str, note: str | None = None) -> RewriteRecord:
    """Record an approve/reject decision on a pending rewrite."""
    if record.status != "pending":
        raise AlreadyReviewed(
            f"{record.doc_id}/{record.field} was already reviewed ({record.status})"
        )
    if decision not in ("approved", "rejected"):
        raise ValueError(f"decision must be 'approved' or 'rejected', got {decision!r}")
    return replace(record, status=decision, reviewer_note=note)


def resolve_reviewed_pair(
    original_pair: FactArgumentPair, records: Sequence[RewriteRecord]
) -> FactArgumentPair:
    """Apply approved rewrites to a pair; pending or rejected fields fall back
    to the original text. A pair is tagged rewritten only if at least one field
    actually uses approved rewritten text."""
    if original_pair.source != "original":
        raise ValueError("resolution starts from the original pair")
    texts = {f: getattr(original_pair, f) for f in REWRITE_FIELDS}
    any_approved = False
    for record in records:
        if record.doc_id != original_pair.doc_id:
            continue
        if record.status == "approved":
            texts[record.field] = record.rewritten_text
            any_approved = True
    if not any_approved:
        return original_pair
    return replace(
        original_pair,
        facts_summary=texts["facts_summary"],
        argument_summary=texts["argument_summary"],
        source="rewritten",
        rewrite_status="approved",
    )


# --- persistence --------------------------------------------------------------


def record_to_dict(record: RewriteRecord) -> dict:
    return {
        "doc_id": record.doc_id,
        "field": record.field,
        "original_text": record.original_text,
        "rewritten_text": record.rewritten_text,
        "backend_id": record.backend_id,
        "status": record.status,
        "reviewer_note": record.reviewer_note,
        "instruction": record.instruction,
        "attempts": record.attempts,
    }


def record_from_dict(obj: Mapping) -> RewriteRecord:
    return RewriteRecord(
        doc_id=str(obj["doc_id"]),
        field=str(obj["field"]),
        original_text=str(obj["original_text"]),
        rewritten_text=str(obj["rewritten_text"]),
        backend_id=str(obj["backend_id"]),
        status=str(obj["status"]),
        reviewer_note=obj.get("reviewer_note"),
        instruction=str(obj.get("instruction", INSTRUCTION_TEMPLATE)),
        attempts=int(obj.get("attempts", 1)),
    )


def save_records(records: Iterable[RewriteRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), ensure_ascii=False))
            fh.write("\n")


def load_records(path) -> list[RewriteRecord]:
    records = []
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{line_number}: {exc}", line_number) from exc
    return records
