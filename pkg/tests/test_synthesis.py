"""Synthetic corpus generation and its ground-truth guarantees."""

from __future__ import annotations

import random

import pytest
from scipy.stats import binom

from lessonminer.corpus import corpus_to_dict
from lessonminer.codebook import annotation_to_row
from lessonminer.synthesis import (
    PlacementOverflow,
    SynthesisParams,
    generate_synthetic_corpus,
)


SMALL = SynthesisParams(
    transcript_count=4,
    segments_per_transcript=60,
    background_vocabulary=200,
    message_vocabulary=12,
    message_rate=0.05,
    injection_probability=0.5,
    seed=11,
)


@pytest.fixture(scope="module")
def generated():
    return generate_synthetic_corpus(SMALL)


def spans_of(generated):
    return [
        (a.transcript_id, a.start, a.end) for a in generated.gold
    ]


class TestDeterminism:
    def test_same_seed_same_output(self):
        a = generate_synthetic_corpus(SMALL)
        b = generate_synthetic_corpus(SMALL)
        assert corpus_to_dict(a.corpus) == corpus_to_dict(b.corpus)
        assert [annotation_to_row(x) for x in a.gold] == [
            annotation_to_row(x) for x in b.gold
        ]

    def test_different_seed_different_output(self):
        a = generate_synthetic_corpus(SMALL)
        b = generate_synthetic_corpus(
            SynthesisParams(**{**SMALL.__dict__, "seed": SMALL.seed + 1})
        )
        assert corpus_to_dict(a.corpus) != corpus_to_dict(b.corpus)


class TestGroundTruth:
    def test_planted_count_matches_gold(self, generated):
        assert generated.planted_count == len(generated.gold)

    def test_planted_count_replays_the_rate_draw(self, generated):
        # The generator commits to the Binomial draw before any placement,
        # so replaying the RNG prefix must reproduce the count exactly.
        rng = random.Random(SMALL.seed)
        total = SMALL.transcript_count * SMALL.segments_per_transcript
        expected = sum(1 for _ in range(total) if rng.random() < SMALL.message_rate)
        assert generated.planted_count == expected

    def test_planted_count_is_binomially_plausible(self):
        total = SMALL.transcript_count * SMALL.segments_per_transcript
        lo, hi = binom.interval(1 - 1e-9, total, SMALL.message_rate)
        for seed in range(5):
            params = SynthesisParams(**{**SMALL.__dict__, "seed": seed})
            planted = generate_synthetic_corpus(params).planted_count
            assert lo <= planted <= hi

    def test_spans_in_bounds_and_disjoint_per_transcript(self, generated):
        by_transcript: dict[str, list[tuple[int, int]]] = {}
        for a in generated.gold:
            n = len(generated.corpus.transcript(a.transcript_id).segments)
            assert 0 <= a.start <= a.end < n
            length = a.end - a.start + 1
            assert SMALL.min_span_segments <= length <= SMALL.max_span_segments
            by_transcript.setdefault(a.transcript_id, []).append((a.start, a.end))
        for spans in by_transcript.values():
            spans.sort()
            for (s1, e1), (s2, _) in zip(spans, spans[1:]):
                assert e1 < s2

    def test_message_tokens_only_inside_spans(self, generated):
        message = set(generated.message_tokens)
        in_span: dict[str, set[int]] = {}
        for a in generated.gold:
            in_span.setdefault(a.transcript_id, set()).update(a.segment_indices())
        for transcript in generated.corpus.transcripts:
            spanned = in_span.get(transcript.id, set())
            for segment in transcript.segments:
                hits = set(segment.text.split()) & message
                if segment.index not in spanned:
                    assert not hits

    def test_every_span_carries_a_message_token(self, generated):
        message = set(generated.message_tokens)
        for a in generated.gold:
            transcript = generated.corpus.transcript(a.transcript_id)
            tokens = set()
            for i in a.segment_indices():
                tokens.update(transcript.segments[i].text.split())
            assert tokens & message

    def test_every_message_token_is_attested(self, generated):
        seen = set()
        for transcript in generated.corpus.transcripts:
            for segment in transcript.segments:
                seen.update(segment.text.split())
        assert set(generated.message_tokens) <= seen

    def test_vocabularies_are_disjoint(self, generated):
        assert not set(generated.message_tokens) & set(generated.background_tokens)
        assert len(generated.message_tokens) == SMALL.message_vocabulary
        assert len(generated.background_tokens) == SMALL.background_vocabulary


class TestCorpusShape:
    def test_dimensions_and_ids(self, generated):
        assert len(generated.corpus.transcripts) == SMALL.transcript_count
        for t, transcript in enumerate(generated.corpus.transcripts):
            assert transcript.id == f"synthetic-{t:02d}"
            assert len(transcript.segments) == SMALL.segments_per_transcript

    def test_token_counts_consistent_with_text(self, generated):
        from lessonminer.keyness import normalize

        for transcript in generated.corpus.transcripts:
            for segment in transcript.segments[:10]:
                assert segment.token_count == len(normalize(segment.text))
                assert (
                    SMALL.min_segment_tokens
                    <= len(segment.text.split())
                    <= SMALL.max_segment_tokens
                )

    def test_registry_counts_transcripts_per_grade(self, generated):
        registry = generated.corpus.group_registry
        per_grade: dict[int, int] = {}
        for transcript in generated.corpus.transcripts:
            per_grade[transcript.grade] = per_grade.get(transcript.grade, 0) + 1
        assert registry == per_grade

    def test_gold_ids_are_ordinal(self, generated):
        assert [a.id for a in generated.gold] == [
            f"gold-{k:04d}" for k in range(len(generated.gold))
        ]


class TestFailureModes:
    def test_placement_overflow_when_corpus_too_dense(self):
        params = SynthesisParams(
            transcript_count=1,
            segments_per_transcript=8,
            background_vocabulary=50,
            message_vocabulary=5,
            message_rate=0.99,
            min_span_segments=3,
            max_span_segments=3,
            seed=0,
        )
        with pytest.raises(PlacementOverflow):
            generate_synthetic_corpus(params)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"transcript_count": 0},
            {"message_rate": 0.0},
            {"message_rate": 1.0},
            {"injection_probability": 0.0},
            {"injection_probability": 1.5},
            {"min_span_segments": 0},
            {"min_span_segments": 3, "max_span_segments": 2},
            {"max_span_segments": 100, "segments_per_transcript": 50},
            {"background_vocabulary": 0},
            {"message_vocabulary": 26**4 + 1},
            {"min_segment_tokens": 0},
        ],
    )
    def test_parameter_validation(self, overrides):
        with pytest.raises(ValueError):
            SynthesisParams(**{**SMALL.__dict__, **overrides})
