"""Run evaluation: word overlap, embedding cosine similarity, and report tables.

Word overlap is unique-token recall against the reference by default (the
share of distinct reference words that also appear in the generation),
expressed as a percentage; precision and F1 variants are available. Semantic
similarity is the cosine between document vectors, where a document vector is
the mean of its sentence embeddings.
"""

from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import segment_sentences
from .embeddings import EmbeddingProvider
from .errors import EmptyReference, EmptyText, MissingData
from .generation import GenerationRecord

OVERLAP_DIRECTIONS = ("recall", "precision", "f1")

_EDGE_PUNCT = re.compile(r"^[\W_]+|[\W_]+$")


def metric_tokens(text: str) -> set[str]:
    """Lowercased unique tokens with punctuation stripped at token boundaries."""
    tokens = set()
    for chunk in text.lower().split():
        token = _EDGE_PUNCT.sub("", chunk)
        if token:
            tokens.add(token)
    return tokens


def word_overlap(generated: str, reference: str, direction: str = "recall") -> float:
    """Percentage of shared unique tokens between generation and reference.

    recall divides by the reference vocabulary, precision by the generated
    vocabulary, f1 is their harmonic mean. The reference must tokenize to at
    least one token.
    """
    if direction not in OVERLAP_DIRECTIONS:
        raise ValueError(f"direction must be one of {OVERLAP_DIRECTIONS}")
    reference_tokens = metric_tokens(reference)
    if not reference_tokens:
        raise EmptyReference("reference text tokenizes to nothing")
    generated_tokens = metric_tokens(generated)
    common = len(generated_tokens & reference_tokens)
    if direction == "recall":
        return 100.0 * common / len(reference_tokens)
    if direction == "precision":
        return 100.0 * common / len(generated_tokens) if generated_tokens else 0.0
    recall = common / len(reference_tokens)
    precision = common / len(generated_tokens) if generated_tokens else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 100.0 * 2.0 * precision * recall / (precision + recall)


def document_vector(text: str, provider: EmbeddingProvider) -> np.ndarray:
    """Mean of the text's sentence embeddings."""
    sentences = segment_sentences(text)
    vectors = np.asarray(provider.embed(sentences), dtype=np.float64)
    return vectors.mean(axis=0)


def semantic_similarity(generated: str, reference: str, provider: EmbeddingProvider) -> float:
    """Cosine similarity of the two document vectors; 0.0 when either has zero norm."""
    if not generated or not generated.strip():
        raise EmptyText("generated text is empty")
    if not reference or not reference.strip():
        raise EmptyText("reference text is empty")
    a = document_vector(generated, provider)
    b = document_vector(reference, provider)
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))


@dataclass(frozen=True)
class MetricRow:
    """Aggregate metrics for one run."""

    model_id: str
    k: int
    data_source: str
    avg_word_overlap: float
    avg_semantic_sim: float
    pair_count: int

    def __post_init__(self):
        if self.pair_count < 1:
            raise ValueError("pair_count must be >= 1")
        if not 0.0 <= self.avg_word_overlap <= 100.0:
            raise ValueError("avg_word_overlap must lie in [0, 100]")


@dataclass(frozen=True)
class PairDetail:
    doc_id: str
    overlap: float
    sim: float


@dataclass
class EvaluationReport:
    rows: list[MetricRow]
    details: list[PairDetail] = field(default_factory=list)


def evaluate_run(
    records: Sequence[GenerationRecord],
    provider: EmbeddingProvider,
    model_id: str | None = None,
    k: int = 0,
    data_source: str = "original",
    direction: str = "recall",
) -> EvaluationReport:
    """Per-pair metrics and their arithmetic means for one run.

    Empty generations contribute 0 to both metrics and still count toward the
    averages.
    """
    if not records:
        raise MissingData("no generation records to evaluate")
    run_ids = {r.run_id for r in records}
    if len(run_ids) != 1:
        raise ValueError(f"records mix run_ids: {sorted(run_ids)}")

    details = []
    for record in records:
        if not record.generated_argument.strip():
            details.append(PairDetail(doc_id=record.doc_id, overlap=0.0, sim=0.0))
            continue
        details.append(
            PairDetail(
                doc_id=record.doc_id,
                overlap=word_overlap(record.generated_argument, record.reference_argument, direction),
                sim=semantic_similarity(record.generated_argument, record.reference_argument, provider),
            )
        )

    row = MetricRow(
        model_id=model_id or run_ids.pop(),
        k=k,
        data_source=data_source,
        avg_word_overlap=float(np.mean([d.overlap for d in details])),
        avg_semantic_sim=float(np.mean([d.sim for d in details])),
        pair_count=len(details),
    )
    return EvaluationReport(rows=[row], details=details)


# --- rendering ------------------------------------------------------------------

_COLUMNS = ("LLM", "#Sent", "Source", "Avg Word Overlap", "Avg Semantic Sim")
_SOURCE_LABELS = {"original": "Original", "rewritten": "Rewritten"}


def _source_label(value: str) -> str:
    return _SOURCE_LABELS.get(value, value)


def render_table(reports: Iterable[EvaluationReport]) -> str:
    """Fixed-width comparison table over runs.

    One row per run in the order given; the best value of each metric column is
    wrapped in ** markers. Overlap prints with two decimals and a percent sign,
    similarity with three decimals.
    """
    rows = [row for report in reports for row in report.rows]
    if not rows:
        raise MissingData("no metric rows to render")

    best_overlap = max(r.avg_word_overlap for r in rows)
    best_sim = max(r.avg_semantic_sim for r in rows)

    cells = [list(_COLUMNS)]
    for r in rows:
        overlap = f"{r.avg_word_overlap:.2f}%"
        if r.avg_word_overlap == best_overlap:
            overlap = f"**{overlap}**"
        sim = f"{r.avg_semantic_sim:.3f}"
        if r.avg_semantic_sim == best_sim:
            sim = f"**{sim}**"
        cells.append([r.model_id, str(r.k), _source_label(r.data_source), overlap, sim])

    widths = [max(len(line[col]) for line in cells) for col in range(len(_COLUMNS))]
    separator = "-+-".join("-" * w for w in widths)
    lines = []
    for line_number, line in enumerate(cells):
        lines.append(" | ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
        if line_number == 0:
            lines.append(separator)
    return "\n".join(lines) + "\n"


def render_csv(reports: Iterable[EvaluationReport]) -> str:
    """CSV with columns model_id,k,source,pair_count,avg_word_overlap,avg_semantic_sim."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["model_id", "k", "source", "pair_count", "avg_word_overlap", "avg_semantic_sim"])
    for report in reports:
        for r in report.rows:
            writer.writerow(
                [r.model_id, r.k, r.data_source, r.pair_count, f"{r.avg_word_overlap:.2f}", f"{r.avg_semantic_sim:.3f}"]
            )
    return buffer.getvalue()


# --- persistence ------------------------------------------------------------------


def save_report(report: EvaluationReport, row_path, detail_path) -> None:
    row = report.rows[0]
    Path(row_path).write_text(
        json.dumps(
            {
                "model_id": row.model_id,
                "k": row.k,
                "data_source": row.data_source,
                "avg_word_overlap": row.avg_word_overlap,
                "avg_semantic_sim": row.avg_semantic_sim,
                "pair_count": row.pair_count,
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    with Path(detail_path).open("w", encoding="utf-8") as fh:
        for detail in report.details:
            fh.write(json.dumps({"doc_id": detail.doc_id, "overlap": detail.overlap, "sim": detail.sim}))
            fh.write("\n")


def load_report(row_path, detail_path=None) -> EvaluationReport:
    obj = json.loads(Path(row_path).read_text(encoding="utf-8"))
    row = MetricRow(
        model_id=obj["model_id"],
        k=obj["k"],
        data_source=obj["data_source"],
        avg_word_overlap=obj["avg_word_overlap"],
        avg_semantic_sim=obj["avg_semantic_sim"],
        pair_count=obj["pair_count"],
    )
    details = []
    if detail_path is not None and Path(detail_path).exists():
        with Path(detail_path).open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    details.append(PairDetail(doc_id=d["doc_id"], overlap=d["overlap"], sim=d["sim"]))
    return EvaluationReport(rows=[row], details=details)
