"""Locate and code engaging teacher messages in lesson transcript corpora.

The pipeline: ingest transcripts, score message-vs-background keywords,
cut fixed-size candidate lists, filter the corpus, evaluate recall and
retention per candidate, and select the smallest list that keeps every
gold message. Coding workflow, reliability, and descriptive analytics
live in their own modules; an HTTP service serves segments to coders.
"""

from .codebook import (
    ALL_CATEGORIES,
    Appeal,
    Category,
    Decision,
    Frame,
    MessageAnnotation,
    category_from_label,
    category_of,
    validate_annotation,
)
from .corpus import (
    Corpus,
    CorpusStats,
    Segment,
    Transcript,
    corpus_stats,
    ingest_transcript,
    load_corpus,
)
from .errors import LessonMinerError
from .filtering import (
    FilteredTranscript,
    filter_corpus,
    filter_transcript,
    recall_report,
    reduction_report,
)
from .keyness import (
    ContrastTable,
    KeywordList,
    NormalizationConfig,
    build_contrast_table,
    candidate_lists,
    normalize,
    score_keywords,
)
from .reliability import (
    AgreementReport,
    AlignedPairs,
    agreement_report,
    align_annotations,
    category_agreement,
    percent_agreement,
)
from .selection import EvaluationTable, SelectionPolicy, evaluate_lists, select_list
from .synthesis import SynthesisParams, SyntheticCorpus, generate_synthetic_corpus

__all__ = [
    "ALL_CATEGORIES",
    "AgreementReport",
    "AlignedPairs",
    "Appeal",
    "Category",
    "ContrastTable",
    "Corpus",
    "CorpusStats",
    "Decision",
    "EvaluationTable",
    "FilteredTranscript",
    "Frame",
    "KeywordList",
    "LessonMinerError",
    "MessageAnnotation",
    "NormalizationConfig",
    "Segment",
    "SelectionPolicy",
    "SynthesisParams",
    "SyntheticCorpus",
    "Transcript",
    "agreement_report",
    "align_annotations",
    "build_contrast_table",
    "candidate_lists",
    "category_agreement",
    "category_from_label",
    "category_of",
    "corpus_stats",
    "evaluate_lists",
    "filter_corpus",
    "filter_transcript",
    "generate_synthetic_corpus",
    "ingest_transcript",
    "load_corpus",
    "normalize",
    "percent_agreement",
    "recall_report",
    "reduction_report",
    "score_keywords",
    "select_list",
    "validate_annotation",
]
