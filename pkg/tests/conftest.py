"""Shared factories for building small corpora and annotations in tests."""

from __future__ import annotations

import json

import pytest

from lessonminer.codebook import (
    ALL_CATEGORIES,
    Category,
    Decision,
    MessageAnnotation,
)
from lessonminer.corpus import Corpus, Segment, Transcript
from lessonminer.keyness import normalize


def make_segment(index: int, text: str, silence: bool = False) -> Segment:
    return Segment(
        id=f"s{index:04d}",
        index=index,
        text=text,
        token_count=len(normalize(text)),
        silence=silence,
    )


def make_transcript(
    transcript_id: str,
    texts,
    grade: int = 9,
    trimester: int = 1,
    teacher_id: str = "t-01",
    group_id: str = "g-01",
) -> Transcript:
    return Transcript(
        id=transcript_id,
        teacher_id=teacher_id,
        group_id=group_id,
        grade=grade,
        trimester=trimester,
        academic_year="2022-2023",
        segments=tuple(make_segment(i, text) for i, text in enumerate(texts)),
    )


def make_corpus(transcripts, registry=None) -> Corpus:
    if registry is None:
        registry = {}
        for t in transcripts:
            registry[t.grade] = registry.get(t.grade, 0) + 1
    return Corpus(transcripts=tuple(transcripts), group_registry=registry)


def make_annotation(
    transcript_id: str,
    start: int,
    end: int,
    category: Category | None = ALL_CATEGORIES[0],
    coder_id: str = "coder-a",
    annotation_id: str | None = None,
    created_at: int = 0,
) -> MessageAnnotation:
    if annotation_id is None:
        annotation_id = f"{coder_id}:{transcript_id}:{start}-{end}"
    decision = Decision.message(category) if category else Decision.not_a_message()
    return MessageAnnotation(
        id=annotation_id,
        coder_id=coder_id,
        transcript_id=transcript_id,
        start=start,
        end=end,
        decision=decision,
        created_at=created_at,
    )


@pytest.fixture
def small_corpus() -> Corpus:
    """Two short transcripts whose middle segments carry recognizable messages."""
    t1 = make_transcript(
        "lesson-01",
        [
            "buenos dias vamos a empezar la clase",
            "abrid el libro por la pagina doce",
            "si estudias cada dia aprobaras el examen sin problema",
            "esto es importante para vuestro futuro profesional",
            "seguimos con el siguiente ejercicio de la lista",
            "el ejercicio tres se parece mucho al anterior",
        ],
        grade=9,
        trimester=1,
    )
    t2 = make_transcript(
        "lesson-02",
        [
            "hoy toca repasar los verbos irregulares",
            "quien quiere salir a la pizarra ahora",
            "si no entregais el trabajo perdereis un punto entero",
            "la nota del trimestre depende de este trabajo",
            "muy bien seguid asi que vais muy bien",
        ],
        grade=10,
        trimester=2,
    )
    return make_corpus([t1, t2])


@pytest.fixture
def small_gold(small_corpus):
    """Hand-placed message spans for small_corpus."""
    return [
        make_annotation("lesson-01", 2, 3, ALL_CATEGORIES[2], coder_id="gold"),
        make_annotation("lesson-02", 2, 3, ALL_CATEGORIES[4], coder_id="gold"),
    ]


CLI_LESSON_1 = [
    "buenos dias vamos a pasar lista",
    "el examen del viernes entra todo el tema",
    "abrid el cuaderno de ejercicios",
    "quien apruebe el examen sube medio punto",
    "seguimos con la siguiente actividad",
    "recoged todo que ya terminamos",
]
CLI_LESSON_2 = [
    "el examen de recuperacion es manana",
    "sacad el libro de lectura",
    "la pizarra nueva llega el lunes",
    "repasad los apuntes en casa",
    "nos vemos el jueves chicos",
]


def make_cli_workspace(root):
    """Manifest, transcript files, and gold annotations for CLI runs."""
    from lessonminer.codebook import write_annotations

    root.mkdir(parents=True, exist_ok=True)
    for name, texts in (("lesson-01", CLI_LESSON_1), ("lesson-02", CLI_LESSON_2)):
        records = [
            json.dumps({"id": f"{name}-s{i}", "index": i, "text": text})
            for i, text in enumerate(texts)
        ]
        (root / f"{name}.jsonl").write_text("\n".join(records) + "\n", encoding="utf-8")
    manifest = {
        "group_registry": {"9": 1, "10": 1},
        "transcripts": [
            {
                "id": "lesson-01",
                "path": "lesson-01.jsonl",
                "teacher_id": "t-01",
                "group_id": "g-01",
                "grade": 9,
                "trimester": 1,
                "academic_year": "2022-2023",
            },
            {
                "id": "lesson-02",
                "path": "lesson-02.jsonl",
                "teacher_id": "t-02",
                "group_id": "g-02",
                "grade": 10,
                "trimester": 2,
                "academic_year": "2022-2023",
            },
        ],
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    gold = [
        make_annotation("lesson-01", 1, 1, ALL_CATEGORIES[0], coder_id="gold",
                        annotation_id="g1"),
        make_annotation("lesson-01", 3, 3, ALL_CATEGORIES[2], coder_id="gold",
                        annotation_id="g2"),
        make_annotation("lesson-02", 0, 0, ALL_CATEGORIES[4], coder_id="gold",
                        annotation_id="g3"),
    ]
    gold_path = root / "gold.csv"
    write_annotations(gold, gold_path)
    return {"root": root, "manifest": manifest_path, "gold": gold_path, "gold_set": gold}


ANALYTICS_JOINT = {
    (9, 1): 302,
    (10, 1): 51,
    (10, 2): 125,
    (11, 2): 157,
    (12, 2): 49,
    (12, 3): 172,
}
ANALYTICS_REGISTRY = {9: 41, 10: 30, 11: 18, 12: 37}


def make_analytics_fixture():
    """An adjudicated annotation set with known marginal totals.

    856 single-segment messages spread over one transcript per
    (grade, trimester) cell. Grade totals come out 302/176/157/221,
    trimester totals 353/331/172.
    """
    transcripts = []
    annotations = []
    k = 0
    for (grade, trimester), count in sorted(ANALYTICS_JOINT.items()):
        transcript_id = f"cell-{grade}-{trimester}"
        transcripts.append(
            make_transcript(transcript_id, ["palabra"] * count, grade, trimester)
        )
        for i in range(count):
            annotations.append(
                make_annotation(
                    transcript_id,
                    i,
                    i,
                    ALL_CATEGORIES[k % 8],
                    coder_id="adjudicated",
                    annotation_id=f"ann-{k:04d}",
                )
            )
            k += 1
    corpus = Corpus(transcripts=tuple(transcripts), group_registry=ANALYTICS_REGISTRY)
    return corpus, annotations


def make_agreement_fixture():
    """Two coders' annotation sets with known aggregate agreement.

    2,480 aligned units over 40 transcripts: 93 pairs agree on
    gain_identified, 54 on gain_intrinsic, 2,301 on gain_extrinsic, 31
    split identified-vs-extrinsic, 1 splits identified-vs-intrinsic.
    Overall agreement is 2448/2480 = 98.7097%; occurrence agreement is
    74.40% for gain_identified and 98.18% for gain_intrinsic.
    """
    gain_extrinsic, _, gain_identified, gain_intrinsic = ALL_CATEGORIES[:4]
    pair_categories = (
        [(gain_identified, gain_identified)] * 93
        + [(gain_intrinsic, gain_intrinsic)] * 54
        + [(gain_extrinsic, gain_extrinsic)] * 2301
        + [(gain_identified, gain_extrinsic)] * 31
        + [(gain_identified, gain_intrinsic)] * 1
    )
    assert len(pair_categories) == 2480
    coder_a = []
    coder_b = []
    per_transcript = 62
    for k, (cat_a, cat_b) in enumerate(pair_categories):
        transcript_id = f"lesson-{k // per_transcript:02d}"
        start = (k % per_transcript) * 3
        coder_a.append(
            make_annotation(
                transcript_id, start, start + 1, cat_a, coder_id="a", annotation_id=f"a{k}"
            )
        )
        coder_b.append(
            make_annotation(
                transcript_id, start, start + 1, cat_b, coder_id="b", annotation_id=f"b{k}"
            )
        )
    return coder_a, coder_b


# ---------------------------------------------------------------------------
# Acceptance reporting: one visible pass/fail line per criterion.

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call":
        _ACCEPTANCE_RESULTS[report.nodeid] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.failed:
        _ACCEPTANCE_RESULTS[report.nodeid] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid in sorted(_ACCEPTANCE_RESULTS):
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{_ACCEPTANCE_RESULTS[nodeid]:4s}  {name}")
