"""Frame x appeal taxonomy, the annotation model, and structural validation.

Whether a span is genuinely aimed at engaging students is a human judgment:
the tool records it but only machine-checks the structural rules (span
bounds, category presence, contiguity).
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Transcript
from .errors import LessonMinerError


class TranscriptMismatch(LessonMinerError):
    code = "TranscriptMismatch"


class AnnotationFormatError(LessonMinerError):
    code = "AnnotationFormatError"


class Frame(enum.Enum):
    GAIN = "gain"
    LOSS = "loss"


class Appeal(enum.Enum):
    EXTRINSIC = "extrinsic"
    INTROJECTED = "introjected"
    IDENTIFIED = "identified"
    INTRINSIC = "intrinsic"


@dataclass(frozen=True)
class Category:
    """One of the eight frame x appeal message categories."""

    frame: Frame
    appeal: Appeal

    @property
    def label(self) -> str:
        return f"{self.frame.value}_{self.appeal.value}"


def category_of(frame: Frame, appeal: Appeal) -> Category:
    return Category(frame=frame, appeal=appeal)


def decompose(category: Category) -> tuple[Frame, Appeal]:
    return category.frame, category.appeal


# Fixed codebook order: gain row before loss row, appeals from external to
# internal incentive. Keyboard digits 1-8 in the coder UI follow this order.
ALL_CATEGORIES: tuple[Category, ...] = tuple(
    category_of(frame, appeal) for frame in Frame for appeal in Appeal
)

_CATEGORY_BY_LABEL = {c.label: c for c in ALL_CATEGORIES}

# Sort key for exports: gain before loss, appeals in codebook order.
CATEGORY_ORDER = {c: i for i, c in enumerate(ALL_CATEGORIES)}


def category_sort_key(category: Category) -> int:
    return CATEGORY_ORDER[category]


def category_from_label(label: str) -> Category:
    try:
        return _CATEGORY_BY_LABEL[label]
    except KeyError:
        raise AnnotationFormatError(f"unknown category label {label!r}", label=label)


@dataclass(frozen=True)
class Decision:
    """Either a Message carrying a category, or an explicit NotAMessage."""

    category: Category | None

    @property
    def is_message(self) -> bool:
        return self.category is not None

    @classmethod
    def message(cls, category: Category) -> "Decision":
        if category is None:
            raise AnnotationFormatError("Message decision requires a category")
        return cls(category=category)

    @classmethod
    def not_a_message(cls) -> "Decision":
        return cls(category=None)


NOT_A_MESSAGE = Decision.not_a_message()


@dataclass(frozen=True)
class MessageAnnotation:
    """A coder's labeled span over contiguous segments, ends inclusive."""

    id: str
    coder_id: str
    transcript_id: str
    start: int
    end: int
    decision: Decision
    note: str = ""
    created_at: int = 0

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def segment_indices(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    annotation_id: str
    violations: tuple[Violation, ...]

    @property
    def is_valid(self) -> bool:
        return not self.violations


def validate_annotation(annotation: MessageAnnotation, transcript: Transcript) -> ValidationReport:
    """Check the structural codebook rules; pure and deterministic."""
    if annotation.transcript_id != transcript.id:
        raise TranscriptMismatch(
            f"annotation {annotation.id!r} targets {annotation.transcript_id!r}, "
            f"got transcript {transcript.id!r}",
            annotation_id=annotation.id,
        )
    violations: list[Violation] = []
    n = len(transcript.segments)
    if annotation.start < 0 or annotation.end >= n or annotation.start > annotation.end:
        violations.append(
            Violation(
                "InvalidSpan",
                f"span [{annotation.start}, {annotation.end}] invalid for "
                f"{n}-segment transcript",
            )
        )
    if annotation.decision.is_message and annotation.decision.category is None:
        violations.append(Violation("MissingCategory", "Message decision lacks a category"))
    return ValidationReport(annotation_id=annotation.id, violations=tuple(violations))


EXPORT_COLUMNS = (
    "annotation_id",
    "coder_id",
    "transcript_id",
    "start",
    "end",
    "frame",
    "appeal",
    "decision",
    "note",
)


def annotation_to_row(annotation: MessageAnnotation) -> dict:
    category = annotation.decision.category
    return {
        "annotation_id": annotation.id,
        "coder_id": annotation.coder_id,
        "transcript_id": annotation.transcript_id,
        "start": str(annotation.start),
        "end": str(annotation.end),
        "frame": category.frame.value if category else "",
        "appeal": category.appeal.value if category else "",
        "decision": "message" if annotation.decision.is_message else "not_a_message",
        "note": annotation.note,
    }


def annotation_from_row(row: dict, created_at: int = 0) -> MessageAnnotation:
    decision_field = row.get("decision", "").strip()
    if decision_field == "message":
        frame_label = row.get("frame", "").strip()
        appeal_label = row.get("appeal", "").strip()
        if not frame_label or not appeal_label:
            raise AnnotationFormatError(
                f"annotation {row.get('annotation_id')!r}: MissingCategory "
                "(message decision without frame/appeal)",
                violation="MissingCategory",
            )
        try:
            decision = Decision.message(
                category_of(Frame(frame_label), Appeal(appeal_label))
            )
        except ValueError:
            raise AnnotationFormatError(
                f"annotation {row.get('annotation_id')!r}: unknown frame/appeal "
                f"{frame_label!r}/{appeal_label!r}"
            )
    elif decision_field == "not_a_message":
        decision = NOT_A_MESSAGE
    else:
        raise AnnotationFormatError(
            f"annotation {row.get('annotation_id')!r}: unknown decision {decision_field!r}"
        )
    try:
        start = int(row["start"])
        end = int(row["end"])
    except (KeyError, ValueError):
        raise AnnotationFormatError(
            f"annotation {row.get('annotation_id')!r}: non-integer span bounds"
        )
    return MessageAnnotation(
        id=row["annotation_id"],
        coder_id=row["coder_id"],
        transcript_id=row["transcript_id"],
        start=start,
        end=end,
        decision=decision,
        note=row.get("note", ""),
        created_at=created_at,
    )


def write_annotations(annotations: Iterable[MessageAnnotation], path) -> None:
    """Export annotations as CSV with a stable column order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=EXPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for annotation in annotations:
            writer.writerow(annotation_to_row(annotation))


def read_annotations(path) -> list[MessageAnnotation]:
    annotations = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for seq, row in enumerate(reader):
            annotations.append(annotation_from_row(row, created_at=seq))
    return annotations


def annotations_to_rows(annotations: Sequence[MessageAnnotation]) -> list[dict]:
    return [annotation_to_row(a) for a in annotations]
