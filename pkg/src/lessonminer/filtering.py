"""Keyword filtering of transcripts plus reduction and recall reporting.

A segment is retained when its normalized tokens intersect the keyword
list; an optional window drags neighboring segments along for context.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .codebook import MessageAnnotation
from .corpus import Corpus, DEFAULT_WORDS_PER_PAGE, Transcript, corpus_stats
from .errors import LessonMinerError
from .keyness import KeywordList, NormalizationConfig, normalize


class EmptyKeywordList(LessonMinerError):
    code = "EmptyKeywordList"


class OrphanAnnotation(LessonMinerError):
    code = "OrphanAnnotation"


class DegenerateGoldSpan(LessonMinerError):
    code = "DegenerateGoldSpan"


@dataclass(frozen=True)
class FilteredTranscript:
    """Retention result for one transcript.

    ``matches`` only holds keyword-matched indices; window-expanded
    neighbors appear in ``retained`` alone. ``token_counts`` snapshots the
    source transcript's per-segment token counts so reports stay
    self-contained.
    """

    transcript_id: str
    retained: frozenset[int]
    matches: Mapping[int, frozenset[str]]
    token_counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "retained", frozenset(self.retained))
        object.__setattr__(
            self, "matches", {k: frozenset(v) for k, v in dict(self.matches).items()}
        )
        for index in self.matches:
            if index not in self.retained:
                raise ValueError(f"matched index {index} not retained")
        for index in self.retained:
            if not 0 <= index < len(self.token_counts):
                raise ValueError(f"retained index {index} out of bounds")

    def retained_tokens(self) -> int:
        return sum(self.token_counts[i] for i in self.retained)


@dataclass(frozen=True)
class ReductionReport:
    total_tokens: int
    retained_tokens: int
    retained_fraction: float
    total_pages: float
    retained_pages: float


@dataclass(frozen=True)
class MessageCoverage:
    annotation_id: str
    retained: bool
    coverage: float


@dataclass(frozen=True)
class RecallReport:
    gold_total: int
    gold_retained: int
    recall: float
    missed: tuple[str, ...]
    coverage: tuple[MessageCoverage, ...]


def tokenize_transcript(
    transcript: Transcript, config: NormalizationConfig | None = None
) -> tuple[frozenset[str], ...]:
    """Per-segment normalized token sets, cacheable across repeated filters."""
    config = config or NormalizationConfig()
    return tuple(frozenset(normalize(s.text, config)) for s in transcript.segments)


def filter_transcript(
    transcript: Transcript,
    keyword_list: KeywordList,
    window: int = 0,
    config: NormalizationConfig | None = None,
    token_sets: Sequence[frozenset[str]] | None = None,
) -> FilteredTranscript:
    """Retain segments sharing at least one normalized token with the list.

    ``token_sets`` may carry a precomputed ``tokenize_transcript`` result to
    avoid re-normalizing when many lists are evaluated over one corpus.
    """
    if len(keyword_list) == 0:
        raise EmptyKeywordList("keyword list is empty", list_name=keyword_list.name)
    if window < 0:
        raise ValueError("window must be nonnegative")
    if token_sets is None:
        token_sets = tokenize_transcript(transcript, config)
    keywords = keyword_list.as_set()
    matches: dict[int, frozenset[str]] = {}
    for segment in transcript.segments:
        hit = token_sets[segment.index] & keywords
        if hit:
            matches[segment.index] = hit
    retained = set(matches)
    if window:
        n = len(transcript.segments)
        for index in matches:
            lo = max(0, index - window)
            hi = min(n - 1, index + window)
            retained.update(range(lo, hi + 1))
    return FilteredTranscript(
        transcript_id=transcript.id,
        retained=frozenset(retained),
        matches=matches,
        token_counts=tuple(s.token_count for s in transcript.segments),
    )


def filter_corpus(
    corpus: Corpus,
    keyword_list: KeywordList,
    window: int = 0,
    config: NormalizationConfig | None = None,
    corpus_tokens: Mapping[str, Sequence[frozenset[str]]] | None = None,
) -> list[FilteredTranscript]:
    """Filter every transcript, keeping corpus order."""
    return [
        filter_transcript(
            t,
            keyword_list,
            window,
            config,
            token_sets=corpus_tokens.get(t.id) if corpus_tokens else None,
        )
        for t in corpus.transcripts
    ]


def tokenize_corpus(
    corpus: Corpus, config: NormalizationConfig | None = None
) -> dict[str, tuple[frozenset[str], ...]]:
    return {t.id: tokenize_transcript(t, config) for t in corpus.transcripts}


def reduction_report(
    corpus: Corpus,
    filtered: Iterable[FilteredTranscript],
    words_per_page: int = DEFAULT_WORDS_PER_PAGE,
) -> ReductionReport:
    """Token-weighted retention against the whole corpus."""
    stats = corpus_stats(corpus, words_per_page)
    retained_tokens = sum(f.retained_tokens() for f in filtered)
    total = stats.token_count
    fraction = retained_tokens / total if total else 0.0
    return ReductionReport(
        total_tokens=total,
        retained_tokens=retained_tokens,
        retained_fraction=fraction,
        total_pages=stats.page_equivalents,
        retained_pages=retained_tokens / words_per_page,
    )


def recall_report(
    filtered: Iterable[FilteredTranscript],
    gold: Iterable[MessageAnnotation],
) -> RecallReport:
    """A gold message counts as retained iff any span segment is retained."""
    by_transcript = {f.transcript_id: f for f in filtered}
    coverage: list[MessageCoverage] = []
    missed: list[str] = []
    retained_count = 0
    gold = list(gold)
    for ann in gold:
        ft = by_transcript.get(ann.transcript_id)
        if ft is None:
            raise OrphanAnnotation(
                f"gold annotation {ann.id!r} references transcript "
                f"{ann.transcript_id!r} absent from the filtered set",
                annotation_id=ann.id,
            )
        span = list(ann.segment_indices())
        span_tokens = sum(ft.token_counts[i] for i in span)
        retained_span_tokens = sum(ft.token_counts[i] for i in span if i in ft.retained)
        hit = any(i in ft.retained for i in span)
        if hit:
            retained_count += 1
        else:
            missed.append(ann.id)
        coverage.append(
            MessageCoverage(
                annotation_id=ann.id,
                retained=hit,
                coverage=(retained_span_tokens / span_tokens) if span_tokens else 0.0,
            )
        )
    total = len(gold)
    return RecallReport(
        gold_total=total,
        gold_retained=retained_count,
        recall=(retained_count / total) if total else 0.0,
        missed=tuple(missed),
        coverage=tuple(coverage),
    )


def completeness_list(
    corpus: Corpus,
    gold: Iterable[MessageAnnotation],
    config: NormalizationConfig | None = None,
    name: str = "gold-union",
) -> KeywordList:
    """Union of all tokens inside gold spans; guarantees recall 1.0.

    Raises DegenerateGoldSpan when a gold span has no token surviving
    normalization, since no keyword list can retain such a span.
    """
    config = config or NormalizationConfig()
    transcripts = {t.id: t for t in corpus.transcripts}
    tokens: list[str] = []
    seen: set[str] = set()
    for ann in gold:
        transcript = transcripts[ann.transcript_id]
        span_tokens: list[str] = []
        for index in ann.segment_indices():
            span_tokens.extend(normalize(transcript.segments[index].text, config))
        if not span_tokens:
            raise DegenerateGoldSpan(
                f"gold annotation {ann.id!r} has no token surviving normalization",
                annotation_id=ann.id,
            )
        for token in span_tokens:
            if token not in seen:
                seen.add(token)
                tokens.append(token)
    return KeywordList(name=name, keywords=tuple(tokens))


def filtered_to_dict(
    filtered: Sequence[FilteredTranscript],
    corpus: Corpus,
    keyword_list_name: str,
    config_hash: str,
    window: int,
) -> dict:
    """Render the coder-facing filtered output document."""
    transcripts = {t.id: t for t in corpus.transcripts}
    out_transcripts = []
    for ft in filtered:
        transcript = transcripts[ft.transcript_id]
        segments = []
        for index in sorted(ft.retained):
            segments.append(
                {
                    "index": index,
                    "text": transcript.segments[index].text,
                    "matched": sorted(ft.matches.get(index, ())),
                }
            )
        out_transcripts.append({"transcript_id": ft.transcript_id, "segments": segments})
    return {
        "keyword_list": keyword_list_name,
        "config_hash": config_hash,
        "window": window,
        "transcripts": out_transcripts,
    }


def write_filtered(document: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(document, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def filtered_from_document(document: Mapping, corpus: Corpus) -> list[FilteredTranscript]:
    """Rebuild FilteredTranscript values from a filtered output document."""
    transcripts = {t.id: t for t in corpus.transcripts}
    out = []
    for entry in document["transcripts"]:
        transcript = transcripts[entry["transcript_id"]]
        retained = set()
        matches = {}
        for seg in entry["segments"]:
            retained.add(seg["index"])
            if seg["matched"]:
                matches[seg["index"]] = frozenset(seg["matched"])
        out.append(
            FilteredTranscript(
                transcript_id=transcript.id,
                retained=frozenset(retained),
                matches=matches,
                token_counts=tuple(s.token_count for s in transcript.segments),
            )
        )
    return out
