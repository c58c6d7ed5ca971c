"""Candidate keyword-list evaluation and policy-driven selection."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .codebook import MessageAnnotation
from .corpus import Corpus
from .errors import LessonMinerError
from .filtering import filter_corpus, recall_report, reduction_report, tokenize_corpus
from .keyness import KeywordList, NormalizationConfig


class NoFeasibleList(LessonMinerError):
    code = "NoFeasibleList"


@dataclass(frozen=True)
class EvaluationRow:
    list_name: str
    size: int
    recall: float
    retained_fraction: float
    missed: tuple[str, ...] = ()
    failed: bool = False
    error: str = ""


@dataclass(frozen=True)
class EvaluationTable:
    rows: tuple[EvaluationRow, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))


@dataclass(frozen=True)
class SelectionPolicy:
    """Hard recall constraint, then minimize retention; ties prefer the
    smaller list, then the lexicographically earlier name."""

    recall_threshold: float = 1.0

    def __post_init__(self):
        if not 0 < self.recall_threshold <= 1:
            raise ValueError("recall_threshold must be in (0, 1]")


@dataclass(frozen=True)
class SelectionRecord:
    list_name: str
    size: int
    recall: float
    retained_fraction: float
    recall_threshold: float
    candidates_considered: int
    candidates_feasible: int

    def to_dict(self) -> dict:
        return {
            "list": self.list_name,
            "size": self.size,
            "recall": self.recall,
            "retained_fraction": self.retained_fraction,
            "recall_threshold": self.recall_threshold,
            "candidates_considered": self.candidates_considered,
            "candidates_feasible": self.candidates_feasible,
        }


def evaluate_lists(
    corpus: Corpus,
    gold: Iterable[MessageAnnotation],
    candidates: Sequence[KeywordList],
    window: int = 0,
    config: NormalizationConfig | None = None,
    words_per_page: int = 300,
) -> EvaluationTable:
    """Filter the corpus once per candidate and tabulate (recall, retention).

    Rows whose filtering raises are kept, marked failed, so one bad
    candidate cannot sink a whole evaluation run.
    """
    if not candidates:
        raise ValueError("candidates must be nonempty")
    gold = list(gold)
    corpus_tokens = tokenize_corpus(corpus, config)
    rows = []
    for candidate in candidates:
        try:
            filtered = filter_corpus(corpus, candidate, window, config, corpus_tokens)
            recall = recall_report(filtered, gold)
            reduction = reduction_report(corpus, filtered, words_per_page)
        except LessonMinerError as exc:
            rows.append(
                EvaluationRow(
                    list_name=candidate.name,
                    size=len(candidate),
                    recall=0.0,
                    retained_fraction=0.0,
                    failed=True,
                    error=f"{exc.code}: {exc}",
                )
            )
            continue
        rows.append(
            EvaluationRow(
                list_name=candidate.name,
                size=len(candidate),
                recall=recall.recall,
                retained_fraction=reduction.retained_fraction,
                missed=recall.missed,
            )
        )
    rows.sort(key=lambda r: (r.retained_fraction, r.size, r.list_name))
    return EvaluationTable(rows=tuple(rows))


def select_list(table: EvaluationTable, policy: SelectionPolicy | None = None) -> SelectionRecord:
    """Pick the feasible row with minimal retention; order-independent."""
    policy = policy or SelectionPolicy()
    if not table.rows:
        raise ValueError("evaluation table is empty")
    feasible = [
        r for r in table.rows if not r.failed and r.recall >= policy.recall_threshold
    ]
    if not feasible:
        raise NoFeasibleList(
            f"no candidate reaches recall {policy.recall_threshold}",
            recall_threshold=policy.recall_threshold,
        )
    best = min(feasible, key=lambda r: (r.retained_fraction, r.size, r.list_name))
    return SelectionRecord(
        list_name=best.list_name,
        size=best.size,
        recall=best.recall,
        retained_fraction=best.retained_fraction,
        recall_threshold=policy.recall_threshold,
        candidates_considered=len(table.rows),
        candidates_feasible=len(feasible),
    )


EVALUATION_COLUMNS = ("list", "size", "recall", "retained_fraction", "missed_count")


def write_evaluation_table(
    table: EvaluationTable,
    path,
    selection: SelectionRecord | None = None,
    config_hash: str | None = None,
) -> None:
    """CSV export; config stamp and selection travel as `#` comment lines."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if config_hash:
            fh.write(f"# config: {config_hash}\n")
        writer.writerow(EVALUATION_COLUMNS)
        for row in table.rows:
            writer.writerow(
                [
                    row.list_name,
                    row.size,
                    f"{row.recall:.6f}",
                    f"{row.retained_fraction:.6f}",
                    len(row.missed) if not row.failed else f"failed:{row.error}",
                ]
            )
        if selection is not None:
            fh.write("# selection: " + json.dumps(selection.to_dict(), sort_keys=True) + "\n")


def read_evaluation_table(path) -> EvaluationTable:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        while header and header[0].startswith("#"):
            header = next(reader)
        if tuple(header) != EVALUATION_COLUMNS:
            raise ValueError(f"unexpected evaluation table header: {header}")
        for raw in reader:
            if not raw or raw[0].startswith("#"):
                continue
            name, size, recall, fraction, missed = raw
            failed = str(missed).startswith("failed:")
            rows.append(
                EvaluationRow(
                    list_name=name,
                    size=int(size),
                    recall=float(recall),
                    retained_fraction=float(fraction),
                    missed=(),
                    failed=failed,
                    error=str(missed)[7:] if failed else "",
                )
            )
    return EvaluationTable(rows=tuple(rows))
