"""Pairwise inter-coder agreement over span annotations.

Two coders' annotation sets are aligned greedily by span overlap (Jaccard
on segment index sets), then percent agreement is computed treating every
unmatched annotation as a disagreement: locating a message is part of the
coding task, not just labeling it. Chance-corrected coefficients are out
of scope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .codebook import (
    ALL_CATEGORIES,
    Category,
    MessageAnnotation,
    validate_annotation,
)
from .corpus import Corpus
from .errors import LessonMinerError


class CorpusMismatch(LessonMinerError):
    code = "CorpusMismatch"


class NoUnits(LessonMinerError):
    code = "NoUnits"


@dataclass(frozen=True)
class AlignedPairs:
    """Greedy matching of two annotation sets.

    ``matched`` holds (a, b, overlap) triples; every annotation appears in
    at most one pair, and all overlaps meet the alignment threshold.
    """

    matched: tuple[tuple[MessageAnnotation, MessageAnnotation, float], ...]
    unmatched_a: tuple[MessageAnnotation, ...]
    unmatched_b: tuple[MessageAnnotation, ...]

    @property
    def total_units(self) -> int:
        return len(self.matched) + len(self.unmatched_a) + len(self.unmatched_b)


@dataclass(frozen=True)
class AgreementReport:
    """Overall and per-category percent agreement plus the unit counts.

    Categories whose denominator is zero are simply absent from
    ``per_category`` rather than carrying a sentinel value.
    """

    overall_percent: float
    per_category: dict[Category, float]
    agreeing: int
    disagreeing: int
    unmatched_a: int
    unmatched_b: int


def _jaccard(a: MessageAnnotation, b: MessageAnnotation) -> float:
    sa = set(a.segment_indices())
    sb = set(b.segment_indices())
    union = len(sa | sb)
    return len(sa & sb) / union if union else 0.0


def _check_against_corpus(annotations: Sequence[MessageAnnotation], corpus: Corpus, side: str):
    for ann in annotations:
        try:
            transcript = corpus.transcript(ann.transcript_id)
        except KeyError:
            raise CorpusMismatch(
                "annotation references a transcript outside the corpus",
                annotation_id=ann.id,
                transcript_id=ann.transcript_id,
                side=side,
            )
        report = validate_annotation(ann, transcript)
        if not report.is_valid:
            raise CorpusMismatch(
                "annotation is invalid for its transcript",
                annotation_id=ann.id,
                violations=[v.code for v in report.violations],
                side=side,
            )


def align_annotations(
    a: Iterable[MessageAnnotation],
    b: Iterable[MessageAnnotation],
    threshold: float = 0.5,
    corpus: Corpus | None = None,
) -> AlignedPairs:
    """Greedily match annotations by descending span overlap.

    Ties break on earlier span start, then annotation ids, computed
    symmetrically so swapping the two coders mirrors the result exactly.
    When ``corpus`` is given, both sets are checked against it first.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError("threshold must lie in (0, 1]")
    a = list(a)
    b = list(b)
    if corpus is not None:
        _check_against_corpus(a, corpus, "a")
        _check_against_corpus(b, corpus, "b")

    b_by_transcript: dict[str, list[int]] = {}
    for j, ann in enumerate(b):
        b_by_transcript.setdefault(ann.transcript_id, []).append(j)

    candidates = []
    for i, ann_a in enumerate(a):
        for j in b_by_transcript.get(ann_a.transcript_id, ()):
            ann_b = b[j]
            overlap = _jaccard(ann_a, ann_b)
            if overlap >= threshold:
                key = (
                    -overlap,
                    ann_a.transcript_id,
                    min(ann_a.start, ann_b.start),
                    max(ann_a.start, ann_b.start),
                    tuple(sorted((ann_a.id, ann_b.id))),
                )
                candidates.append((key, i, j))
    candidates.sort(key=lambda item: item[0])

    used_a: set[int] = set()
    used_b: set[int] = set()
    matched = []
    for key, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        matched.append((a[i], b[j], -key[0]))
    return AlignedPairs(
        matched=tuple(matched),
        unmatched_a=tuple(ann for i, ann in enumerate(a) if i not in used_a),
        unmatched_b=tuple(ann for j, ann in enumerate(b) if j not in used_b),
    )


def percent_agreement(pairs: AlignedPairs) -> float:
    """Overall percent agreement; unmatched units count against it."""
    if pairs.total_units == 0:
        raise NoUnits("no annotation units to compare")
    agreeing = sum(1 for x, y, _ in pairs.matched if x.decision == y.decision)
    return 100.0 * agreeing / pairs.total_units


def category_agreement(pairs: AlignedPairs, category: Category) -> float | None:
    """Occurrence agreement for one category; None when it never occurs.

    Counts pairs where both coders used the category as agreements and any
    unit where exactly one side used it as a disagreement.
    """
    both = 0
    one_sided = 0
    for x, y, _ in pairs.matched:
        x_is = x.decision.category == category
        y_is = y.decision.category == category
        if x_is and y_is:
            both += 1
        elif x_is or y_is:
            one_sided += 1
    for ann in pairs.unmatched_a + pairs.unmatched_b:
        if ann.decision.category == category:
            one_sided += 1
    if both + one_sided == 0:
        return None
    return 100.0 * both / (both + one_sided)


def agreement_report(pairs: AlignedPairs) -> AgreementReport:
    agreeing = sum(1 for x, y, _ in pairs.matched if x.decision == y.decision)
    per_category = {}
    for category in ALL_CATEGORIES:
        value = category_agreement(pairs, category)
        if value is not None:
            per_category[category] = value
    return AgreementReport(
        overall_percent=percent_agreement(pairs),
        per_category=per_category,
        agreeing=agreeing,
        disagreeing=len(pairs.matched) - agreeing,
        unmatched_a=len(pairs.unmatched_a),
        unmatched_b=len(pairs.unmatched_b),
    )


def report_to_dict(report: AgreementReport) -> dict:
    return {
        "overall_percent": report.overall_percent,
        "per_category": {
            category.label: report.per_category[category]
            for category in ALL_CATEGORIES
            if category in report.per_category
        },
        "units": {
            "agreeing": report.agreeing,
            "disagreeing": report.disagreeing,
            "unmatched_a": report.unmatched_a,
            "unmatched_b": report.unmatched_b,
        },
    }


def write_agreement_report(report: AgreementReport, path: str | Path):
    payload = json.dumps(report_to_dict(report), indent=2, sort_keys=True)
    Path(path).write_text(payload + "\n", encoding="utf-8")
