"""Transcript ingestion, corpus assembly, and document round-trips."""

from __future__ import annotations

import json

import pytest

from lessonminer.corpus import (
    Corpus,
    CorpusStats,
    DuplicateSegmentId,
    EmptyTranscript,
    InvalidGrade,
    InvalidTrimester,
    MalformedRecord,
    MissingFile,
    RegistryGap,
    TranscriptMetadata,
    VALID_GRADES,
    VALID_TRIMESTERS,
    corpus_from_dict,
    corpus_stats,
    corpus_to_dict,
    export_transcript_records,
    ingest_transcript,
    load_corpus,
    load_corpus_document,
    save_corpus,
)

from conftest import make_corpus, make_transcript


def _metadata(**overrides) -> TranscriptMetadata:
    fields = dict(
        id="lesson-01",
        teacher_id="t-01",
        group_id="g-01",
        grade=9,
        trimester=1,
        academic_year="2022-2023",
    )
    fields.update(overrides)
    return TranscriptMetadata(**fields)


def _records(*rows) -> list[str]:
    return [json.dumps(row) for row in rows]


class TestIngestTranscript:
    def test_happy_path_counts_tokens(self):
        lines = _records(
            {"id": "a", "index": 0, "text": "buenos dias chicos"},
            {"id": "b", "index": 1, "text": "abrid el libro"},
        )
        transcript = ingest_transcript(lines, _metadata())
        assert len(transcript) == 2
        assert transcript.segments[0].token_count == 3
        assert transcript.segments[1].index == 1
        assert transcript.token_count() == 6

    def test_silence_segment_allows_empty_text(self):
        lines = _records({"id": "a", "index": 0, "text": "", "silence": True})
        transcript = ingest_transcript(lines, _metadata())
        assert transcript.segments[0].silence
        assert transcript.segments[0].token_count == 0

    def test_empty_text_without_silence_flag_rejected(self):
        lines = _records({"id": "a", "index": 0, "text": ""})
        with pytest.raises(MalformedRecord):
            ingest_transcript(lines, _metadata())

    def test_blank_lines_are_skipped(self):
        lines = ["", json.dumps({"id": "a", "index": 0, "text": "hola"}), "   "]
        transcript = ingest_transcript(lines, _metadata())
        assert len(transcript) == 1

    def test_duplicate_segment_id_rejected(self):
        lines = _records(
            {"id": "a", "index": 0, "text": "uno"},
            {"id": "a", "index": 1, "text": "dos"},
        )
        with pytest.raises(DuplicateSegmentId):
            ingest_transcript(lines, _metadata())

    def test_noncontiguous_index_rejected(self):
        lines = _records(
            {"id": "a", "index": 0, "text": "uno"},
            {"id": "b", "index": 2, "text": "dos"},
        )
        with pytest.raises(MalformedRecord):
            ingest_transcript(lines, _metadata())

    def test_invalid_json_names_the_line(self):
        lines = [json.dumps({"id": "a", "index": 0, "text": "uno"}), "{broken"]
        with pytest.raises(MalformedRecord) as excinfo:
            ingest_transcript(lines, _metadata())
        assert excinfo.value.details["line"] == 2

    def test_missing_field_rejected(self):
        lines = [json.dumps({"id": "a", "index": 0})]
        with pytest.raises(MalformedRecord):
            ingest_transcript(lines, _metadata())

    def test_empty_stream_rejected(self):
        with pytest.raises(EmptyTranscript):
            ingest_transcript([], _metadata())

    def test_grade_and_trimester_validated(self):
        lines = _records({"id": "a", "index": 0, "text": "uno"})
        with pytest.raises(InvalidGrade):
            ingest_transcript(lines, _metadata(grade=8))
        with pytest.raises(InvalidTrimester):
            ingest_transcript(lines, _metadata(trimester=4))

    def test_valid_ranges_are_fixed(self):
        assert VALID_GRADES == (9, 10, 11, 12)
        assert VALID_TRIMESTERS == (1, 2, 3)


class TestCorpusModel:
    def test_registry_must_cover_every_grade(self):
        transcript = make_transcript("t1", ["uno dos"], grade=10)
        with pytest.raises(RegistryGap):
            Corpus(transcripts=(transcript,), group_registry={9: 3})

    def test_registry_counts_must_be_positive(self):
        transcript = make_transcript("t1", ["uno dos"], grade=9)
        with pytest.raises(RegistryGap):
            Corpus(transcripts=(transcript,), group_registry={9: 0})

    def test_transcript_lookup(self):
        corpus = make_corpus([make_transcript("t1", ["uno"])])
        assert corpus.transcript("t1").id == "t1"
        with pytest.raises(KeyError):
            corpus.transcript("missing")


class TestCorpusStats:
    def test_exact_counts_and_page_equivalents(self):
        corpus = make_corpus(
            [
                make_transcript("t1", ["uno dos tres", "cuatro cinco"]),
                make_transcript("t2", ["seis"]),
            ]
        )
        stats = corpus_stats(corpus, words_per_page=3)
        assert stats == CorpusStats(
            transcript_count=2, segment_count=3, token_count=6, page_equivalents=2.0
        )

    def test_rejects_nonpositive_words_per_page(self):
        corpus = make_corpus([make_transcript("t1", ["uno"])])
        with pytest.raises(ValueError):
            corpus_stats(corpus, words_per_page=0)


class TestManifestLoading:
    def _write_corpus_files(self, tmp_path):
        lines = "\n".join(
            _records(
                {"id": "a", "index": 0, "text": "buenos dias"},
                {"id": "b", "index": 1, "text": "abrid el libro"},
            )
        )
        (tmp_path / "lesson-01.jsonl").write_text(lines, encoding="utf-8")
        manifest = {
            "group_registry": {"9": 2},
            "transcripts": [
                {
                    "id": "lesson-01",
                    "path": "lesson-01.jsonl",
                    "teacher_id": "t-01",
                    "group_id": "g-01",
                    "grade": 9,
                    "trimester": 1,
                    "academic_year": "2022-2023",
                }
            ],
        }
        manifest_path = tmp_path / "manifest.json"
        manifest_path.write_text(json.dumps(manifest), encoding="utf-8")
        return manifest_path

    def test_loads_relative_paths(self, tmp_path):
        corpus = load_corpus(self._write_corpus_files(tmp_path))
        assert [t.id for t in corpus.transcripts] == ["lesson-01"]
        assert corpus.group_registry == {9: 2}

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(MissingFile):
            load_corpus(tmp_path / "nope.json")

    def test_missing_transcript_file(self, tmp_path):
        manifest_path = self._write_corpus_files(tmp_path)
        (tmp_path / "lesson-01.jsonl").unlink()
        with pytest.raises(MissingFile):
            load_corpus(manifest_path)


class TestRoundTrips:
    def test_dict_round_trip_is_lossless(self):
        corpus = make_corpus(
            [
                make_transcript("t1", ["uno dos", "tres"], grade=9, trimester=1),
                make_transcript("t2", ["cuatro"], grade=12, trimester=3),
            ]
        )
        assert corpus_from_dict(corpus_to_dict(corpus)) == corpus

    def test_save_and_load_document(self, tmp_path):
        corpus = make_corpus([make_transcript("t1", ["uno dos"])])
        path = tmp_path / "corpus.json"
        save_corpus(corpus, path)
        assert load_corpus_document(path) == corpus

    def test_export_records_reingest_identically(self):
        transcript = make_transcript("t1", ["uno dos", "tres cuatro"])
        lines = export_transcript_records(transcript)
        metadata = _metadata(id="t1")
        assert ingest_transcript(lines, metadata) == transcript
