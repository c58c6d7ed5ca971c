"""Synthetic lesson corpora with planted message spans.

The generator builds transcripts from two disjoint vocabularies: background
words everywhere, message words injected only inside planted spans. Because
ground truth is known exactly, the output doubles as an oracle for the full
keyword pipeline: the true discriminative tokens are the message vocabulary
itself, and every planted span is guaranteed at least one of them.
"""

from __future__ import annotations

import random
import string
from dataclasses import dataclass

from .codebook import ALL_CATEGORIES, Decision, MessageAnnotation
from .corpus import VALID_GRADES, VALID_TRIMESTERS, Corpus, Segment, Transcript
from .errors import LessonMinerError
from .keyness import normalize

_SUFFIX_WIDTH = 4
_MAX_VOCABULARY = 26**_SUFFIX_WIDTH


class PlacementOverflow(LessonMinerError):
    """Raised when planted spans cannot all be placed without overlap.

    A silent shortfall would skew the planted-count distribution, so the
    generator refuses to return a corpus that does not match its own draw.
    """

    code = "PlacementOverflow"


@dataclass(frozen=True)
class SynthesisParams:
    """Knobs for one synthetic corpus.

    The number of planted spans is drawn once from
    Binomial(total segments, message_rate); spans are then placed without
    overlap, each fully inside one transcript. ``injection_probability``
    may be 1.0 to make spans read as pure message text.
    """

    transcript_count: int = 25
    segments_per_transcript: int = 240
    background_vocabulary: int = 4000
    message_vocabulary: int = 100
    message_rate: float = 0.035
    injection_probability: float = 0.4
    min_span_segments: int = 1
    max_span_segments: int = 3
    min_segment_tokens: int = 8
    max_segment_tokens: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.transcript_count < 1 or self.segments_per_transcript < 1:
            raise ValueError("corpus dimensions must be positive")
        if not 1 <= self.background_vocabulary <= _MAX_VOCABULARY:
            raise ValueError("background_vocabulary out of range")
        if not 1 <= self.message_vocabulary <= _MAX_VOCABULARY:
            raise ValueError("message_vocabulary out of range")
        if not 0.0 < self.message_rate < 1.0:
            raise ValueError("message_rate must lie in (0, 1)")
        if not 0.0 < self.injection_probability <= 1.0:
            raise ValueError("injection_probability must lie in (0, 1]")
        if not 1 <= self.min_span_segments <= self.max_span_segments:
            raise ValueError("span length bounds are inconsistent")
        if self.max_span_segments > self.segments_per_transcript:
            raise ValueError("spans cannot exceed a transcript")
        if not 1 <= self.min_segment_tokens <= self.max_segment_tokens:
            raise ValueError("segment length bounds are inconsistent")


@dataclass(frozen=True)
class SyntheticCorpus:
    """A generated corpus with its exact ground truth.

    ``message_tokens`` is the full message vocabulary; round-robin
    guaranteed placement means every one of them occurs in some span, so
    their union is a complete keyword list by construction.
    """

    corpus: Corpus
    gold: tuple[MessageAnnotation, ...]
    message_tokens: tuple[str, ...]
    background_tokens: tuple[str, ...]
    planted_count: int


def _word(prefix: str, ordinal: int) -> str:
    digits = []
    for _ in range(_SUFFIX_WIDTH):
        ordinal, rem = divmod(ordinal, 26)
        digits.append(string.ascii_lowercase[rem])
    return prefix + "".join(reversed(digits))


def _place_spans(
    rng: random.Random, params: SynthesisParams, target: int
) -> list[tuple[int, int, int]]:
    """Pick ``target`` non-overlapping (transcript, start, end) triples."""
    candidates = [
        (t, i)
        for t in range(params.transcript_count)
        for i in range(params.segments_per_transcript)
    ]
    rng.shuffle(candidates)
    occupied: dict[int, set[int]] = {t: set() for t in range(params.transcript_count)}
    spans: list[tuple[int, int, int]] = []
    for t, start in candidates:
        if len(spans) == target:
            break
        length = rng.randint(params.min_span_segments, params.max_span_segments)
        end = start + length - 1
        if end >= params.segments_per_transcript:
            continue
        taken = occupied[t]
        if any(i in taken for i in range(start, end + 1)):
            continue
        taken.update(range(start, end + 1))
        spans.append((t, start, end))
    if len(spans) < target:
        raise PlacementOverflow(
            "could not place all planted spans without overlap",
            requested=target,
            placed=len(spans),
        )
    spans.sort()
    return spans


def generate_synthetic_corpus(params: SynthesisParams) -> SyntheticCorpus:
    """Generate a corpus deterministically from ``params.seed``."""
    rng = random.Random(params.seed)
    background = tuple(_word("w", i) for i in range(params.background_vocabulary))
    message = tuple(_word("q", i) for i in range(params.message_vocabulary))

    total = params.transcript_count * params.segments_per_transcript
    planted = sum(1 for _ in range(total) if rng.random() < params.message_rate)
    spans = _place_spans(rng, params, planted)
    spans_by_transcript: dict[int, list[tuple[int, int, int]]] = {}
    for k, (t, start, end) in enumerate(spans):
        spans_by_transcript.setdefault(t, []).append((start, end, k))

    transcripts = []
    gold = []
    for t in range(params.transcript_count):
        in_span = set()
        for start, end, _ in spans_by_transcript.get(t, ()):
            in_span.update(range(start, end + 1))
        rows: list[list[str]] = []
        for i in range(params.segments_per_transcript):
            length = rng.randint(params.min_segment_tokens, params.max_segment_tokens)
            if i in in_span:
                rows.append(
                    [
                        message[rng.randrange(len(message))]
                        if rng.random() < params.injection_probability
                        else background[rng.randrange(len(background))]
                        for _ in range(length)
                    ]
                )
            else:
                rows.append(
                    [background[rng.randrange(len(background))] for _ in range(length)]
                )
        # Round-robin guarantee: span k always carries message word k mod V,
        # so every message token is attested and no span is token-free.
        for start, end, k in spans_by_transcript.get(t, ()):
            seg = rng.randint(start, end)
            pos = rng.randrange(len(rows[seg]))
            rows[seg][pos] = message[k % len(message)]

        segments = tuple(
            Segment(
                id=f"synthetic-{t:02d}-s{i:04d}",
                index=i,
                text=" ".join(row),
                token_count=len(normalize(" ".join(row))),
            )
            for i, row in enumerate(rows)
        )
        transcripts.append(
            Transcript(
                id=f"synthetic-{t:02d}",
                teacher_id=f"teacher-{t:02d}",
                group_id=f"group-{t:02d}",
                grade=VALID_GRADES[t % len(VALID_GRADES)],
                trimester=VALID_TRIMESTERS[t % len(VALID_TRIMESTERS)],
                academic_year="synthetic",
                segments=segments,
            )
        )
        for start, end, k in spans_by_transcript.get(t, ()):
            gold.append(
                MessageAnnotation(
                    id=f"gold-{k:04d}",
                    coder_id="synthetic",
                    transcript_id=f"synthetic-{t:02d}",
                    start=start,
                    end=end,
                    decision=Decision.message(rng.choice(ALL_CATEGORIES)),
                    created_at=k,
                )
            )

    registry: dict[int, int] = {}
    for transcript in transcripts:
        registry[transcript.grade] = registry.get(transcript.grade, 0) + 1
    corpus = Corpus(transcripts=tuple(transcripts), group_registry=registry)
    gold.sort(key=lambda a: a.created_at)
    return SyntheticCorpus(
        corpus=corpus,
        gold=tuple(gold),
        message_tokens=message,
        background_tokens=background,
        planted_count=len(spans),
    )
