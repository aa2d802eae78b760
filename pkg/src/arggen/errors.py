"""Exception types raised across the pipeline.

Every error callers are expected to handle derives from ArgGenError so the
CLI can map any pipeline failure to a single-line diagnostic.
"""

from __future__ import annotations


class ArgGenError(Exception):
    """Base class for all pipeline errors."""


# corpus
class EmptyDocument(ArgGenError):
    """Raised for empty or whitespace-only document text."""


class ParseError(ArgGenError):
    """A malformed record in a line-delimited input file."""

    def __init__(self, message: str, line_number: int | None = None):
        super().__init__(message)
        self.line_number = line_number


class DuplicateId(ArgGenError):
    """Two documents share a doc_id."""


class SplitArity(ArgGenError):
    """Requested split counts do not sum to the corpus size."""


class InsufficientGold(ArgGenError):
    """Fewer gold-annotated documents than the requested test count."""


# role labeler
class InvalidLabel(ArgGenError):
    """A label code outside the valid range."""


class MissingGoldLabel(ArgGenError):
    """A training sentence without a gold label."""


class MissingData(ArgGenError):
    """An operation that needs at least one record received none."""


# summarizer
class TooFewItems(ArgGenError):
    """Fewer vectors than requested clusters."""


class EmptyInput(ArgGenError):
    """Summarization called on an empty sentence list."""


# pair builder
class UnlabeledSentence(ArgGenError):
    """A sentence without any label where one is required."""


class MissingRole(ArgGenError):
    """A document lacks sentences for a required rhetorical role."""

    def __init__(self, role: str, doc_id: str | None = None):
        detail = f" in document {doc_id!r}" if doc_id else ""
        super().__init__(f"no {role} sentences{detail}")
        self.role = role
        self.doc_id = doc_id


class SpecialTokenCollision(ArgGenError):
    """Input text contains a reserved marker string."""


class BudgetTooSmall(ArgGenError):
    """Token budget cannot hold even the marker tokens."""


# rewriter
class BackendUnavailable(ArgGenError):
    """Rewrite backend failed after exhausting retries."""


class InvalidRewrite(ArgGenError):
    """Backend returned empty text."""


class AlreadyReviewed(ArgGenError):
    """A review decision was already recorded for this record."""


# generation harness
class BudgetViolation(ArgGenError):
    """A training example exceeds the adapter token budget."""


# evaluator
class EmptyReference(ArgGenError):
    """Reference text tokenizes to nothing."""


class EmptyText(ArgGenError):
    """Similarity requested for empty text."""


# cli
class StageDependencyError(ArgGenError):
    """A pipeline stage is missing its predecessor's artifact."""

    def __init__(self, missing_path, stage: str | None = None):
        hint = f"; run '{stage}' first" if stage else ""
        super().__init__(f"missing artifact {missing_path}{hint}")
        self.missing_path = str(missing_path)
