"""Text normalization and contrastive keyword scoring.

Tokens inside gold message spans are contrasted against the rest of the
corpus with a smoothed log relative-frequency ratio, producing a keyword
ranking from which fixed-size candidate lists are cut.
"""

from __future__ import annotations

import logging
import math
import re
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .errors import LessonMinerError

logger = logging.getLogger(__name__)

# Word runs: letters/digits/marks, optionally joined by a single apostrophe
# or hyphen. Combining marks are included so decomposed text survives
# segmentation when diacritic stripping is off.
_WORD_RE = re.compile(r"[\w\u0300-\u036f]+(?:['\u2019-][\w\u0300-\u036f]+)*")
_PUNCT_RE = re.compile(r"['’\-_]")


class UnvalidatedAnnotation(LessonMinerError):
    code = "UnvalidatedAnnotation"


class EmptyMessageSide(LessonMinerError):
    code = "EmptyMessageSide"


class EmptyBackground(LessonMinerError):
    code = "EmptyBackground"


@dataclass(frozen=True)
class NormalizationConfig:
    """Switches for the deterministic token pipeline.

    Steps always run in the same order: word segmentation, lowercasing,
    diacritic stripping, punctuation stripping, numeric-token drop,
    stoplist drop, short-token drop.
    """

    lowercase: bool = True
    strip_diacritics: bool = True
    strip_punctuation: bool = True
    drop_numeric_tokens: bool = True
    stoplist: frozenset[str] = frozenset()
    min_token_length: int = 2

    def __post_init__(self):
        if self.min_token_length < 1:
            raise ValueError("min_token_length must be >= 1")
        object.__setattr__(self, "stoplist", frozenset(self.stoplist))

    def to_dict(self) -> dict:
        return {
            "lowercase": self.lowercase,
            "strip_diacritics": self.strip_diacritics,
            "strip_punctuation": self.strip_punctuation,
            "drop_numeric_tokens": self.drop_numeric_tokens,
            "stoplist": sorted(self.stoplist),
            "min_token_length": self.min_token_length,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "NormalizationConfig":
        return cls(
            lowercase=data.get("lowercase", True),
            strip_diacritics=data.get("strip_diacritics", True),
            strip_punctuation=data.get("strip_punctuation", True),
            drop_numeric_tokens=data.get("drop_numeric_tokens", True),
            stoplist=frozenset(data.get("stoplist", ())),
            min_token_length=data.get("min_token_length", 2),
        )


def _strip_diacritics(token: str) -> str:
    if token.isascii():
        return token
    decomposed = unicodedata.normalize("NFD", token)
    kept = "".join(ch for ch in decomposed if unicodedata.category(ch) != "Mn")
    return unicodedata.normalize("NFC", kept)


def normalize(text: str, config: NormalizationConfig | None = None) -> list[str]:
    """Split ``text`` into normalized tokens.

    Deterministic and idempotent: normalizing the space-joined output
    yields the same token list.
    """
    config = config or NormalizationConfig()
    tokens = _WORD_RE.findall(unicodedata.normalize("NFKC", text))
    out: list[str] = []
    for token in tokens:
        if config.lowercase:
            token = token.casefold()
        if config.strip_diacritics:
            token = _strip_diacritics(token)
        if config.strip_punctuation:
            token = _PUNCT_RE.sub("", token)
        if not token:
            continue
        if config.drop_numeric_tokens and token.isdigit():
            continue
        if token in config.stoplist:
            continue
        if len(token) < config.min_token_length:
            continue
        out.append(token)
    return out


@dataclass(frozen=True)
class ContrastTable:
    """Token counts inside gold message spans vs. the background corpus."""

    c_m: Mapping[str, int]
    c_b: Mapping[str, int]
    n_m: int
    n_b: int

    @property
    def vocabulary(self) -> set[str]:
        return set(self.c_m) | set(self.c_b)

    @property
    def v(self) -> int:
        return len(self.vocabulary)

    def __post_init__(self):
        if sum(self.c_m.values()) != self.n_m:
            raise ValueError("message counts do not sum to n_m")
        if sum(self.c_b.values()) != self.n_b:
            raise ValueError("background counts do not sum to n_b")


@dataclass(frozen=True)
class KeywordScore:
    token: str
    score: float
    c_m: int
    c_b: int


@dataclass(frozen=True)
class KeywordList:
    """Ordered, duplicate-free set of normalized keywords."""

    name: str
    keywords: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.keywords)) != len(self.keywords):
            raise ValueError(f"keyword list {self.name!r} contains duplicates")
        if any(not keyword for keyword in self.keywords):
            raise ValueError(f"keyword list {self.name!r} contains an empty keyword")
        object.__setattr__(self, "keywords", tuple(self.keywords))

    def __len__(self) -> int:
        return len(self.keywords)

    def as_set(self) -> frozenset[str]:
        return frozenset(self.keywords)


def build_contrast_table(corpus, gold, config: NormalizationConfig | None = None) -> ContrastTable:
    """Count every token occurrence as either message-side or background.

    A segment belongs to the message side iff it lies inside any gold span.
    Gold annotations must validate against their transcripts and carry
    Message decisions.
    """
    from .codebook import validate_annotation

    config = config or NormalizationConfig()
    gold = list(gold)
    by_transcript: dict[str, set[int]] = {}
    transcripts = {t.id: t for t in corpus.transcripts}
    for ann in gold:
        if not ann.decision.is_message:
            raise UnvalidatedAnnotation(
                f"gold annotation {ann.id!r} is not a Message decision", annotation_id=ann.id
            )
        transcript = transcripts.get(ann.transcript_id)
        if transcript is None:
            raise UnvalidatedAnnotation(
                f"gold annotation {ann.id!r} references unknown transcript {ann.transcript_id!r}",
                annotation_id=ann.id,
            )
        report = validate_annotation(ann, transcript)
        if not report.is_valid:
            raise UnvalidatedAnnotation(
                f"gold annotation {ann.id!r} fails validation: {report.violations}",
                annotation_id=ann.id,
            )
        indices = by_transcript.setdefault(ann.transcript_id, set())
        indices.update(range(ann.start, ann.end + 1))

    c_m: dict[str, int] = {}
    c_b: dict[str, int] = {}
    n_m = 0
    n_b = 0
    for transcript in corpus.transcripts:
        message_indices = by_transcript.get(transcript.id, set())
        for segment in transcript.segments:
            tokens = normalize(segment.text, config)
            if segment.index in message_indices:
                for token in tokens:
                    c_m[token] = c_m.get(token, 0) + 1
                n_m += len(tokens)
            else:
                for token in tokens:
                    c_b[token] = c_b.get(token, 0) + 1
                n_b += len(tokens)
    return ContrastTable(c_m=c_m, c_b=c_b, n_m=n_m, n_b=n_b)


def score_keywords(table: ContrastTable, alpha: float = 0.5) -> list[KeywordScore]:
    """Rank the vocabulary by smoothed log relative-frequency ratio.

    score(w) = ln((c_m(w)+a)/(N_m+aV)) - ln((c_b(w)+a)/(N_b+aV)).
    Ties break by higher message count, then token order.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if table.n_m == 0:
        raise EmptyMessageSide("contrast table has an empty message side")
    if table.n_b == 0:
        raise EmptyBackground("contrast table has an empty background")
    v = table.v
    denom_m = math.log(table.n_m + alpha * v)
    denom_b = math.log(table.n_b + alpha * v)
    scores = []
    for token in table.vocabulary:
        cm = table.c_m.get(token, 0)
        cb = table.c_b.get(token, 0)
        score = (math.log(cm + alpha) - denom_m) - (math.log(cb + alpha) - denom_b)
        scores.append(KeywordScore(token=token, score=score, c_m=cm, c_b=cb))
    scores.sort(key=lambda s: (-s.score, -s.c_m, s.token))
    return scores


DEFAULT_SIZE_GRID = tuple(range(100, 151, 5))


def candidate_lists(ranked: Sequence[KeywordScore], sizes: Iterable[int]) -> list[KeywordList]:
    """Cut top-k prefix lists from a ranking; smaller lists prefix larger ones.

    Sizes beyond the vocabulary are clamped with a logged warning.
    """
    sizes = sorted(set(sizes))
    if not sizes:
        raise ValueError("sizes must be nonempty")
    if any(k < 1 for k in sizes):
        raise ValueError("every size must be >= 1")
    lists = []
    for k in sizes:
        if k > len(ranked):
            logger.warning(
                "candidate list size %d clamped to vocabulary size %d", k, len(ranked)
            )
        prefix = ranked[: min(k, len(ranked))]
        lists.append(KeywordList(name=f"top{k}", keywords=tuple(s.token for s in prefix)))
    return lists


def write_keyword_list(klist: KeywordList, path, config_hash: str | None = None) -> None:
    """Write one keyword per line; name and config stamp travel in comments."""
    lines = [f"# keyword list: {klist.name}", f"# size: {len(klist)}"]
    if config_hash:
        lines.append(f"# config: {config_hash}")
    lines.extend(klist.keywords)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_keyword_list(path, name: str | None = None) -> KeywordList:
    """Read a plain-text keyword file; ``#`` lines are comments, order kept."""
    keywords: list[str] = []
    seen = set()
    list_name = name
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if list_name is None and line.startswith("# keyword list:"):
                    list_name = line.split(":", 1)[1].strip()
                continue
            if line in seen:
                continue
            seen.add(line)
            keywords.append(line)
    if list_name is None:
        import os

        list_name = os.path.splitext(os.path.basename(str(path)))[0]
    return KeywordList(name=list_name, keywords=tuple(keywords))
