"""Legal argument generation pipeline.

Extracts facts and reasoning sentences from case documents via rhetorical-role
labeling, summarizes them to fit model token budgets, fine-tunes generative
adapters on marker-token examples, and evaluates generations with word-overlap
and embedding-similarity metrics.
"""

from .corpus import (
    CaseDocument,
    CorpusStats,
    RhetoricalLabel,
    SentenceRecord,
    corpus_stats,
    load_corpus,
    save_corpus,
    segment_sentences,
    split_corpus,
)
from .crf import CrfParameters, log_partition, nll_and_gradient, score_sequence, viterbi_decode
from .embeddings import EmbeddingProvider, FixedVectorProvider, HashingEmbeddingProvider
from .errors import ArgGenError
from .evaluator import (
    EvaluationReport,
    MetricRow,
    evaluate_run,
    render_csv,
    render_table,
    semantic_similarity,
    word_overlap,
)
from .generation import (
    FineTuneConfig,
    GenerationRecord,
    RunManifest,
    fine_tune_run,
    generate_for_test,
)
from .pair_builder import (
    FactArgumentPair,
    SerializedExample,
    TokenBudget,
    build_pair,
    enforce_budget,
    extract_role_sentences,
    parse_causal_example,
    serialize_example,
)
from .rewriter import RewriteRecord, apply_review, diff_report, rewrite_pair
from .role_labeler import (
    LabelerModel,
    LabelerTrainConfig,
    SentenceEncoder,
    keyword_baseline_labeler,
    label_document,
    train_labeler,
)
from .summarizer import SummaryConfig, kmeans_cluster, summarize

__version__ = "0.1.0"
