"""Run configuration: dataset profiles and model parameters.

A config is a flat JSON object; anything omitted falls back to the
dataset profile defaults ("tac"-style or "cl"-style).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

from citectx.facets import DEFAULT_FACET_LABELS

DATASET_PROFILES = {
    # biomedical-style plaintext corpora: 4 annotators, longer summaries
    "tac": {"idf_lo": 1.9, "budget_words": 235, "k": 10},
    # computational-linguistics-style corpora with sentence boundaries
    "cl": {"idf_lo": 2.2, "budget_words": 134, "k": 3},
}


@dataclass
class PipelineConfig:
    corpus_dir: str = ""
    embeddings_path: str = ""
    lexicon_path: str = ""
    domain_lexicon_path: str = ""
    ranker_path: str = ""
    facet_model_path: str = ""
    out_dir: str = "out"

    dataset: str = "tac"
    model: str = "lmd"  # vsm | bm25 | lmd | embedding | interpolated | supervised
    query_method: str = "full"  # full | kw | np | domain
    k: int = 3
    mu: float = 2000.0
    tau: float | str = "auto"
    tau_sample_size: int = 1000
    lambda_: float = 0.5
    gamma: float = 0.8
    idf_lo: float = 1.9
    idf_hi: float = math.inf
    max_n: int = 3
    negatives_per_positive: int = 5
    strategy: str = "greedy"  # greedy | iterative
    lambda_mmr: float = 0.5
    budget_words: int = 235
    facet_labels: tuple[str, ...] = DEFAULT_FACET_LABELS
    facet_algorithm: str = "SVM"
    seed: int = 0
    workers: int = 1

    @classmethod
    def from_json(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        profile = DATASET_PROFILES.get(data.get("dataset", "tac"), {})
        merged = {**profile, **data}
        if "lambda" in merged:
            merged["lambda_"] = merged.pop("lambda")
        if "facet_labels" in merged:
            merged["facet_labels"] = tuple(merged["facet_labels"])
        if merged.get("idf_hi") in (None, "inf"):
            merged["idf_hi"] = math.inf
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(merged) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**merged)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["facet_labels"] = list(self.facet_labels)
        if math.isinf(self.idf_hi):
            data["idf_hi"] = "inf"
        return data

    def config_hash(self) -> str:
        # out_dir only decides where artifacts land, not what gets computed
        data = self.to_dict()
        data.pop("out_dir")
        blob = json.dumps(data, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:12]

    def validate_paths(self, require: tuple[str, ...]) -> None:
        for attr in require:
            value = getattr(self, attr)
            if not value:
                raise FileNotFoundError(f"config field {attr!r} is not set")
            if not Path(value).exists():
                raise FileNotFoundError(f"{attr}: no such path: {value}")
