"""Transcript and corpus ingestion plus corpus-level size statistics.

Input contract: transcripts arrive pre-segmented (one utterance record per
line); a corpus manifest lists transcript files, per-transcript metadata,
and the per-grade group registry.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import IO, Iterable, Mapping

from .errors import LessonMinerError
from .keyness import NormalizationConfig, normalize

VALID_GRADES = (9, 10, 11, 12)
VALID_TRIMESTERS = (1, 2, 3)
DEFAULT_WORDS_PER_PAGE = 300


class EmptyTranscript(LessonMinerError):
    code = "EmptyTranscript"


class DuplicateSegmentId(LessonMinerError):
    code = "DuplicateSegmentId"


class InvalidGrade(LessonMinerError):
    code = "InvalidGrade"


class InvalidTrimester(LessonMinerError):
    code = "InvalidTrimester"


class MalformedRecord(LessonMinerError):
    code = "MalformedRecord"


class MissingFile(LessonMinerError):
    code = "MissingFile"


class RegistryGap(LessonMinerError):
    code = "RegistryGap"


@dataclass(frozen=True)
class Segment:
    """One pause-delimited utterance of a transcript."""

    id: str
    index: int
    text: str
    token_count: int
    silence: bool = False


@dataclass(frozen=True)
class Transcript:
    id: str
    teacher_id: str
    group_id: str
    grade: int
    trimester: int
    academic_year: str
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def __len__(self) -> int:
        return len(self.segments)

    def token_count(self) -> int:
        return sum(s.token_count for s in self.segments)


@dataclass(frozen=True)
class Corpus:
    transcripts: tuple[Transcript, ...]
    group_registry: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "transcripts", tuple(self.transcripts))
        object.__setattr__(self, "group_registry", dict(self.group_registry))
        for grade, count in self.group_registry.items():
            if count < 1:
                raise RegistryGap(f"group registry count for grade {grade} must be >= 1")
        for t in self.transcripts:
            if t.grade not in self.group_registry:
                raise RegistryGap(
                    f"transcript {t.id!r} has grade {t.grade} absent from group registry",
                    transcript_id=t.id,
                    grade=t.grade,
                )

    def transcript(self, transcript_id: str) -> Transcript:
        for t in self.transcripts:
            if t.id == transcript_id:
                return t
        raise KeyError(transcript_id)


@dataclass(frozen=True)
class CorpusStats:
    transcript_count: int
    segment_count: int
    token_count: int
    page_equivalents: float


@dataclass(frozen=True)
class TranscriptMetadata:
    """Manifest header for one transcript file."""

    id: str
    teacher_id: str
    group_id: str
    grade: int
    trimester: int
    academic_year: str


def _parse_record(line: str, line_no: int) -> dict:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"line {line_no}: invalid JSON ({exc.msg})", line=line_no)
    if not isinstance(record, dict):
        raise MalformedRecord(f"line {line_no}: record is not an object", line=line_no)
    for key in ("id", "index", "text"):
        if key not in record:
            raise MalformedRecord(f"line {line_no}: missing field {key!r}", line=line_no)
    return record


def ingest_transcript(
    record_stream: IO[str] | Iterable[str],
    metadata: TranscriptMetadata,
    config: NormalizationConfig | None = None,
) -> Transcript:
    """Parse a line-delimited transcript stream into a Transcript.

    Order-preserving and deterministic; segment token counts are computed
    with the keyness normalizer so that every later token-weighted metric
    shares one tokenization.
    """
    if metadata.grade not in VALID_GRADES:
        raise InvalidGrade(
            f"grade {metadata.grade} outside {VALID_GRADES}", transcript_id=metadata.id
        )
    if metadata.trimester not in VALID_TRIMESTERS:
        raise InvalidTrimester(
            f"trimester {metadata.trimester} outside {VALID_TRIMESTERS}",
            transcript_id=metadata.id,
        )
    config = config or NormalizationConfig()
    segments: list[Segment] = []
    seen_ids: set[str] = set()
    line_no = 0
    for raw_line in record_stream:
        line_no += 1
        line = raw_line.strip()
        if not line:
            continue
        record = _parse_record(line, line_no)
        seg_id = str(record["id"])
        if seg_id in seen_ids:
            raise DuplicateSegmentId(
                f"line {line_no}: duplicate segment id {seg_id!r}",
                transcript_id=metadata.id,
                segment_id=seg_id,
            )
        seen_ids.add(seg_id)
        index = record["index"]
        if index != len(segments):
            raise MalformedRecord(
                f"line {line_no}: index {index} breaks contiguity (expected {len(segments)})",
                line=line_no,
            )
        text = record["text"]
        if not isinstance(text, str):
            raise MalformedRecord(f"line {line_no}: text is not a string", line=line_no)
        silence = bool(record.get("silence", False))
        if text == "" and not silence:
            raise MalformedRecord(
                f"line {line_no}: empty text without silence flag", line=line_no
            )
        segments.append(
            Segment(
                id=seg_id,
                index=index,
                text=text,
                token_count=len(normalize(text, config)),
                silence=silence,
            )
        )
    if not segments:
        raise EmptyTranscript(f"transcript {metadata.id!r} has no segments", transcript_id=metadata.id)
    return Transcript(
        id=metadata.id,
        teacher_id=metadata.teacher_id,
        group_id=metadata.group_id,
        grade=metadata.grade,
        trimester=metadata.trimester,
        academic_year=metadata.academic_year,
        segments=tuple(segments),
    )


def load_corpus(manifest_path, config: NormalizationConfig | None = None) -> Corpus:
    """Load every transcript named by a manifest, preserving manifest order."""
    manifest_path = str(manifest_path)
    if not os.path.exists(manifest_path):
        raise MissingFile(f"manifest not found: {manifest_path}", path=manifest_path)
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    registry = {int(k): int(v) for k, v in manifest.get("group_registry", {}).items()}
    base = os.path.dirname(os.path.abspath(manifest_path))
    transcripts = []
    for entry in manifest.get("transcripts", []):
        path = entry["path"]
        if not os.path.isabs(path):
            path = os.path.join(base, path)
        if not os.path.exists(path):
            raise MissingFile(f"transcript file not found: {path}", path=path)
        metadata = TranscriptMetadata(
            id=entry["id"],
            teacher_id=entry["teacher_id"],
            group_id=entry["group_id"],
            grade=int(entry["grade"]),
            trimester=int(entry["trimester"]),
            academic_year=entry["academic_year"],
        )
        with open(path, "r", encoding="utf-8") as fh:
            transcripts.append(ingest_transcript(fh, metadata, config))
    return Corpus(transcripts=tuple(transcripts), group_registry=registry)


def corpus_stats(corpus: Corpus, words_per_page: int = DEFAULT_WORDS_PER_PAGE) -> CorpusStats:
    """Exact size counts plus the tokens-per-page operationalization."""
    if words_per_page < 1:
        raise ValueError("words_per_page must be >= 1")
    segment_count = sum(len(t) for t in corpus.transcripts)
    token_count = sum(t.token_count() for t in corpus.transcripts)
    return CorpusStats(
        transcript_count=len(corpus.transcripts),
        segment_count=segment_count,
        token_count=token_count,
        page_equivalents=token_count / words_per_page,
    )


def transcript_to_dict(transcript: Transcript) -> dict:
    return {
        "id": transcript.id,
        "teacher_id": transcript.teacher_id,
        "group_id": transcript.group_id,
        "grade": transcript.grade,
        "trimester": transcript.trimester,
        "academic_year": transcript.academic_year,
        "segments": [
            {
                "id": s.id,
                "index": s.index,
                "text": s.text,
                "token_count": s.token_count,
                "silence": s.silence,
            }
            for s in transcript.segments
        ],
    }


def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "group_registry": {str(k): v for k, v in sorted(corpus.group_registry.items())},
        "transcripts": [transcript_to_dict(t) for t in corpus.transcripts],
    }


def corpus_from_dict(data: Mapping) -> Corpus:
    transcripts = []
    for t in data["transcripts"]:
        segments = tuple(
            Segment(
                id=s["id"],
                index=s["index"],
                text=s["text"],
                token_count=s["token_count"],
                silence=s.get("silence", False),
            )
            for s in t["segments"]
        )
        transcripts.append(
            Transcript(
                id=t["id"],
                teacher_id=t["teacher_id"],
                group_id=t["group_id"],
                grade=t["grade"],
                trimester=t["trimester"],
                academic_year=t["academic_year"],
                segments=segments,
            )
        )
    registry = {int(k): int(v) for k, v in data["group_registry"].items()}
    return Corpus(transcripts=tuple(transcripts), group_registry=registry)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(corpus_to_dict(corpus), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_corpus_document(path) -> Corpus:
    if not os.path.exists(str(path)):
        raise MissingFile(f"corpus document not found: {path}", path=str(path))
    with open(path, "r", encoding="utf-8") as fh:
        return corpus_from_dict(json.load(fh))


def export_transcript_records(transcript: Transcript) -> list[str]:
    """Render a transcript back to its line-delimited record form."""
    lines = []
    for s in transcript.segments:
        record = {"id": s.id, "index": s.index, "text": s.text}
        if s.silence:
            record["silence"] = True
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    return lines
