"""Run configuration: JSON file, then command-line overrides."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from linkpulse.counters import DEFAULT_BUCKET_WIDTH, DEFAULT_WINDOW
from linkpulse.errors import InvalidConfig
from linkpulse.popularity import DEFAULT_K
from linkpulse.ranker import BETA, DAMPING, EPSILON, LAMBDA, MAX_ITER
from linkpulse.simulator import ZIPF_S
from linkpulse.summarize import REDUNDANCY_CAP, SIMILARITY_THRESHOLD

ENV_VAR = "LINKPULSE_CONFIG"


@dataclass(frozen=True)
class Config:
    window_length: int = DEFAULT_WINDOW
    bucket_width: int = DEFAULT_BUCKET_WIDTH
    k: int = DEFAULT_K
    damping: float = DAMPING
    epsilon: float = EPSILON
    max_iter: int = MAX_ITER
    lam: float = LAMBDA
    beta: float = BETA
    zipf_s: float = ZIPF_S
    similarity_threshold: float = SIMILARITY_THRESHOLD
    redundancy_cap: float = REDUNDANCY_CAP
    slack: int = 0

    def __post_init__(self):
        problems = []
        if self.bucket_width < 1 or self.window_length < 1:
            problems.append("window_length and bucket_width must be >= 1")
        elif self.window_length % self.bucket_width:
            problems.append("window_length must be a multiple of bucket_width")
        if self.k < 1:
            problems.append("k must be >= 1")
        if not 0.0 < self.damping < 1.0:
            problems.append("damping must lie in (0, 1)")
        if not self.epsilon > 0:
            problems.append("epsilon must be > 0")
        if self.max_iter < 1:
            problems.append("max_iter must be >= 1")
        if self.lam < 0 or self.beta < 0:
            problems.append("lambda and beta must be >= 0")
        if not self.zipf_s > 0:
            problems.append("zipf_s must be > 0")
        if not 0.0 <= self.similarity_threshold <= 1.0:
            problems.append("similarity_threshold must lie in [0, 1]")
        if not 0.0 <= self.redundancy_cap <= 1.0:
            problems.append("redundancy_cap must lie in [0, 1]")
        if self.slack < 0:
            problems.append("slack must be >= 0")
        if problems:
            raise InvalidConfig("; ".join(problems))

    @classmethod
    def from_dict(cls, obj: dict) -> "Config":
        known = {f.name for f in fields(cls)}
        obj = dict(obj)
        # accept the spelled-out name too
        if "lambda" in obj:
            obj["lam"] = obj.pop("lambda")
        unknown = set(obj) - known
        if unknown:
            raise InvalidConfig(f"unknown config key(s): {', '.join(sorted(unknown))}")
        try:
            return cls(**obj)
        except TypeError as exc:
            raise InvalidConfig(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    def override(self, **values) -> "Config":
        return replace(self, **{k: v for k, v in values.items() if v is not None})


def load_config(path: str | Path | None = None) -> Config:
    """Load from ``path``, else from $LINKPULSE_CONFIG, else defaults."""
    path = path or os.environ.get(ENV_VAR)
    if not path:
        return Config()
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidConfig(f"{path}: {exc}") from None
    if not isinstance(obj, dict):
        raise InvalidConfig(f"{path}: config must be a JSON object")
    return Config.from_dict(obj)
