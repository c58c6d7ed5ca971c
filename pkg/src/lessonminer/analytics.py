"""Descriptive tables over adjudicated message annotations.

Counts per category, optionally grouped by grade or trimester; per-grade
ratios dividing counts by the number of class groups at that grade; and
percentage tables normalized over the whole table so grouping marginals
read as shares of the total. Arithmetic stays at full precision; rounding
happens only at export (percents 2 decimals, ratios 4).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Union

from .codebook import (
    ALL_CATEGORIES,
    Category,
    MessageAnnotation,
    category_sort_key,
    validate_annotation,
)
from .corpus import VALID_TRIMESTERS, Corpus
from .errors import LessonMinerError
from .keyness import UnvalidatedAnnotation

GROUPINGS = ("overall", "by_grade", "by_trimester")


class UnresolvedDuplicates(LessonMinerError):
    code = "UnresolvedDuplicates"


class MissingRegistryEntry(LessonMinerError):
    code = "MissingRegistryEntry"


class ZeroGroups(LessonMinerError):
    code = "ZeroGroups"


class ZeroTotal(LessonMinerError):
    code = "ZeroTotal"


class IoFailure(LessonMinerError):
    code = "IoFailure"


# Group key is None for the overall grouping, a grade or trimester otherwise.
GroupKey = Union[int, None]


@dataclass(frozen=True)
class CountTable:
    grouping: str
    cells: Mapping[tuple[Category, GroupKey], int]
    total: int

    def __post_init__(self):
        if self.grouping not in GROUPINGS:
            raise ValueError(f"unknown grouping: {self.grouping!r}")
        if any(v < 0 for v in self.cells.values()):
            raise ValueError("counts must be nonnegative")
        if self.total != sum(self.cells.values()):
            raise ValueError("total does not match cell sum")


@dataclass(frozen=True)
class RatioTable:
    """Counts divided by the number of class groups at each grade."""

    cells: Mapping[tuple[Category, GroupKey], float]


@dataclass(frozen=True)
class PercentTable:
    """Cells as percent of the whole table; sums to 100 up to roundoff."""

    cells: Mapping[tuple[Category, GroupKey], float]
    basis: str

    def __post_init__(self):
        if self.basis not in ("counts", "ratios"):
            raise ValueError(f"unknown basis: {self.basis!r}")


AnyTable = Union[CountTable, RatioTable, PercentTable]


def _group_keys(table: AnyTable) -> list[GroupKey]:
    keys = {group for _, group in table.cells}
    return sorted(keys, key=lambda g: (g is not None, g))


def category_counts(
    annotations: Iterable[MessageAnnotation],
    corpus: Corpus,
    grouping: str = "overall",
) -> CountTable:
    """Count message annotations per category and group key.

    The input must be an adjudicated set: identical spans from two coders
    are a sign the merge step was skipped and raise UnresolvedDuplicates.
    """
    if grouping not in GROUPINGS:
        raise ValueError(f"unknown grouping: {grouping!r}")
    annotations = list(annotations)

    coders_by_span: dict[tuple[str, int, int], set[str]] = {}
    for ann in annotations:
        coders_by_span.setdefault((ann.transcript_id, ann.start, ann.end), set()).add(
            ann.coder_id
        )
    for span, coders in coders_by_span.items():
        if len(coders) > 1:
            raise UnresolvedDuplicates(
                "identical span annotated by multiple coders",
                transcript_id=span[0],
                start=span[1],
                end=span[2],
                coders=sorted(coders),
            )

    if grouping == "overall":
        groups: tuple[GroupKey, ...] = (None,)
    elif grouping == "by_grade":
        groups = tuple(sorted(corpus.group_registry))
    else:
        groups = VALID_TRIMESTERS

    cells = {(category, group): 0 for category in ALL_CATEGORIES for group in groups}
    for ann in annotations:
        try:
            transcript = corpus.transcript(ann.transcript_id)
        except KeyError:
            raise UnvalidatedAnnotation(
                "annotation references unknown transcript",
                annotation_id=ann.id,
                transcript_id=ann.transcript_id,
            )
        report = validate_annotation(ann, transcript)
        if not report.is_valid or not ann.decision.is_message:
            raise UnvalidatedAnnotation(
                "annotation is not a valid message",
                annotation_id=ann.id,
                violations=[v.code for v in report.violations],
            )
        if grouping == "overall":
            group: GroupKey = None
        elif grouping == "by_grade":
            group = transcript.grade
        else:
            group = transcript.trimester
        cells[(ann.decision.category, group)] += 1
    return CountTable(grouping=grouping, cells=cells, total=len(annotations))


def level_ratios(counts: CountTable, registry: Mapping[int, int]) -> RatioTable:
    """Divide per-grade counts by the number of groups at that grade."""
    if counts.grouping != "by_grade":
        raise ValueError("ratios are defined for by_grade tables only")
    cells = {}
    for (category, grade), count in counts.cells.items():
        if grade not in registry:
            raise MissingRegistryEntry("grade missing from registry", grade=grade)
        groups = registry[grade]
        if groups < 1:
            raise ZeroGroups("registry lists no groups for grade", grade=grade)
        cells[(category, grade)] = count / groups
    return RatioTable(cells=cells)


def percentages(table: CountTable | RatioTable) -> PercentTable:
    """Express every cell as a percent of the whole table."""
    total = sum(table.cells.values())
    if total <= 0:
        raise ZeroTotal("table sums to zero")
    basis = "counts" if isinstance(table, CountTable) else "ratios"
    cells = {key: 100.0 * value / total for key, value in table.cells.items()}
    return PercentTable(cells=cells, basis=basis)


def group_totals(table: AnyTable) -> dict[GroupKey, float]:
    """Sum cells per group key (e.g. trimester shares of a percent table)."""
    totals: dict[GroupKey, float] = {}
    for (_, group), value in table.cells.items():
        totals[group] = totals.get(group, 0.0) + value
    return dict(sorted(totals.items(), key=lambda kv: (kv[0] is not None, kv[0])))


def _render(table: AnyTable, value: float):
    if isinstance(table, CountTable):
        return int(value)
    if isinstance(table, PercentTable):
        return round(value, 2)
    return round(value, 4)


def _table_rows(table: AnyTable) -> tuple[list[str], list[list]]:
    groups = _group_keys(table)
    header = ["category"] + ["value" if g is None else str(g) for g in groups]
    rows = []
    categories = sorted({c for c, _ in table.cells}, key=category_sort_key)
    for category in categories:
        rows.append(
            [category.label]
            + [_render(table, table.cells.get((category, g), 0)) for g in groups]
        )
    return header, rows


def export_table(
    table: AnyTable, fmt: str, destination: str | Path, config_hash: str | None = None
):
    """Write a table as CSV or JSON with a fixed row and column order.

    Rows follow category order (gain before loss; appeals extrinsic,
    introjected, identified, intrinsic); columns are group keys ascending.
    Byte-identical across runs for equal input.
    """
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format: {fmt!r}")
    header, rows = _table_rows(table)
    try:
        if fmt == "csv":
            with open(destination, "w", encoding="utf-8", newline="") as fh:
                if config_hash:
                    fh.write(f"# config: {config_hash}\n")
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(header)
                writer.writerows(rows)
        else:
            payload = {
                "columns": header,
                "rows": [dict(zip(header, row)) for row in rows],
            }
            if isinstance(table, CountTable):
                payload["grouping"] = table.grouping
                payload["total"] = table.total
            if isinstance(table, PercentTable):
                payload["basis"] = table.basis
            if config_hash:
                payload["config_hash"] = config_hash
            text = json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
            Path(destination).write_text(text + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure("could not write table", destination=str(destination)) from exc


def figure_data(
    annotations: Iterable[MessageAnnotation], corpus: Corpus
) -> dict:
    """Per-figure percent series: category x grade (ratio basis) and
    category x trimester (count basis), with grouping share totals."""
    annotations = list(annotations)
    out: dict = {}

    by_grade = category_counts(annotations, corpus, "by_grade")
    ratios = level_ratios(by_grade, corpus.group_registry)
    grade_pct = percentages(ratios)
    grades = _group_keys(by_grade)
    out["by_grade"] = {
        "basis": "ratios",
        "groups": grades,
        "series": [
            {
                "category": category.label,
                "percents": [
                    round(grade_pct.cells[(category, g)], 2) for g in grades
                ],
            }
            for category in ALL_CATEGORIES
        ],
    }

    by_trimester = category_counts(annotations, corpus, "by_trimester")
    tri_pct = percentages(by_trimester)
    trimesters = _group_keys(by_trimester)
    out["by_trimester"] = {
        "basis": "counts",
        "groups": trimesters,
        "series": [
            {
                "category": category.label,
                "percents": [
                    round(tri_pct.cells[(category, t)], 2) for t in trimesters
                ],
            }
            for category in ALL_CATEGORIES
        ],
        "group_shares": [
            round(v, 2) for v in group_totals(tri_pct).values()
        ],
    }
    return out
