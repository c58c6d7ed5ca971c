"""One config document for the whole pipeline.

Every run-affecting knob lives here so a single hash can stamp every
output file; two artifacts with the same stamp came from the same
settings. The hash covers the canonical JSON form, so key order and
whitespace never matter.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from .corpus import DEFAULT_WORDS_PER_PAGE
from .keyness import DEFAULT_SIZE_GRID, NormalizationConfig


@dataclass(frozen=True)
class PipelineConfig:
    normalization: NormalizationConfig = field(default_factory=NormalizationConfig)
    alpha: float = 0.5
    size_grid: tuple[int, ...] = DEFAULT_SIZE_GRID
    window: int = 0
    words_per_page: int = DEFAULT_WORDS_PER_PAGE
    recall_threshold: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not self.size_grid or any(int(s) < 1 for s in self.size_grid):
            raise ValueError("size_grid must be nonempty positive integers")
        object.__setattr__(self, "size_grid", tuple(int(s) for s in self.size_grid))
        if self.window < 0:
            raise ValueError("window must be nonnegative")
        if self.words_per_page < 1:
            raise ValueError("words_per_page must be positive")
        if not 0.0 < self.recall_threshold <= 1.0:
            raise ValueError("recall_threshold must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "normalization": self.normalization.to_dict(),
            "alpha": self.alpha,
            "size_grid": list(self.size_grid),
            "window": self.window,
            "words_per_page": self.words_per_page,
            "recall_threshold": self.recall_threshold,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "PipelineConfig":
        return cls(
            normalization=NormalizationConfig.from_dict(data.get("normalization", {})),
            alpha=data.get("alpha", 0.5),
            size_grid=tuple(data.get("size_grid", DEFAULT_SIZE_GRID)),
            window=data.get("window", 0),
            words_per_page=data.get("words_per_page", DEFAULT_WORDS_PER_PAGE),
            recall_threshold=data.get("recall_threshold", 1.0),
            seed=data.get("seed", 0),
        )

    def hash(self) -> str:
        canonical = json.dumps(
            self.to_dict(), sort_keys=True, separators=(",", ":"), ensure_ascii=False
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def override(self, **changes) -> "PipelineConfig":
        """New config with the given fields replaced; None values ignored."""
        actual = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **actual) if actual else self


def load_config(path: str | Path) -> PipelineConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return PipelineConfig.from_dict(data)


def save_config(config: PipelineConfig, path: str | Path):
    text = json.dumps(config.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
