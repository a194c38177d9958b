"""Word vector loading, thresholded term similarity, and retrofitting.

Vectors come from a plain text file ("word v1 ... vd" per line, optional
"count dim" header) and are unit-normalized at load time, so term
relatedness is just a dot product.  Raw dot products below a threshold
tau are squashed to zero and the survivors are passed through a logit
transform so that only strongly related terms contribute to retrieval.
"""

from __future__ import annotations

import math
import random
import warnings
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

EPSILON_CLAMP = 1e-6
# logit(1 - 1e-3), used as the exact-match similarity cap in the
# translation model; the transform is undefined at x = 1.
EXACT_MATCH_SIMILARITY = 6.9


class EmbeddingFormatError(ValueError):
    pass


@dataclass(frozen=True)
class SimilarityParams:
    tau: float
    epsilon_clamp: float = EPSILON_CLAMP
    floor_negative: bool = True

    def __post_init__(self) -> None:
        if not (0.0 < self.tau < 1.0 - self.epsilon_clamp):
            raise ValueError(f"tau must lie in (0, 1 - epsilon), got {self.tau}")


class EmbeddingTable:
    """Immutable word -> unit vector mapping."""

    def __init__(self, dimension: int, vectors: dict[str, np.ndarray]):
        self.dimension = dimension
        self._vectors = vectors

    def __contains__(self, word: str) -> bool:
        return word in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def get(self, word: str) -> np.ndarray | None:
        return self._vectors.get(word)

    def words(self) -> list[str]:
        return sorted(self._vectors)

    def dot(self, a: str, b: str) -> float:
        """Raw cosine between two words; 0 if either is out of vocabulary."""
        va, vb = self._vectors.get(a), self._vectors.get(b)
        if va is None or vb is None:
            return 0.0
        return float(va @ vb)


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    return vec / norm if norm > 0 else vec


def load_embeddings(reader: IO[str] | Iterable[str]) -> EmbeddingTable:
    """Parse a text-format vector stream into a normalized table.

    Duplicate words keep the first occurrence (with a warning); malformed
    lines raise :class:`EmbeddingFormatError` naming the line number.
    """
    vectors: dict[str, np.ndarray] = {}
    dimension: int | None = None
    for lineno, line in enumerate(reader, start=1):
        parts = line.split()
        if not parts:
            continue
        if lineno == 1 and len(parts) == 2:
            try:
                int(parts[0]), int(parts[1])
            except ValueError:
                pass
            else:
                dimension = int(parts[1])
                continue
        word, comps = parts[0], parts[1:]
        try:
            vec = np.array([float(x) for x in comps], dtype=np.float64)
        except ValueError as exc:
            raise EmbeddingFormatError(
                f"line {lineno}: non-numeric vector component for {word!r}"
            ) from exc
        if dimension is None:
            dimension = len(vec)
        if len(vec) != dimension:
            raise EmbeddingFormatError(
                f"line {lineno}: expected {dimension} components, got {len(vec)}"
            )
        if word in vectors:
            warnings.warn(f"duplicate embedding for {word!r}; keeping first occurrence")
            continue
        vectors[word] = _normalize(vec)
    if dimension is None:
        raise EmbeddingFormatError("empty embedding stream")
    return EmbeddingTable(dimension=dimension, vectors=vectors)


def logit(x: float) -> float:
    return math.log(x / (1.0 - x))


def term_similarity(a: str, b: str, table: EmbeddingTable, params: SimilarityParams) -> float:
    """Thresholded, dampened similarity between two terms.

    Dot products at or below tau are squashed to zero; the rest pass
    through a clamped logit, floored at zero by default so the value can
    feed a probability numerator.
    """
    x = table.dot(a, b)
    if x <= params.tau:
        return 0.0
    eps = params.epsilon_clamp
    value = logit(min(max(x, eps), 1.0 - eps))
    if params.floor_negative:
        return max(0.0, value)
    return value


def estimate_tau(table: EmbeddingTable, sample_size: int = 1000, rng_seed: int = 0) -> float:
    """Mean + 2*stddev of absolute pairwise similarities on a random word sample."""
    words = table.words()
    if len(words) < 2:
        raise ValueError("need at least 2 words to estimate tau")
    if sample_size < 2:
        raise ValueError("sample_size must be >= 2")
    rng = random.Random(rng_seed)
    sample = words if sample_size >= len(words) else rng.sample(words, sample_size)
    mat = np.stack([table.get(w) for w in sample])
    sims = np.abs(mat @ mat.T)
    iu = np.triu_indices(len(sample), k=1)
    values = sims[iu]
    return float(values.mean() + 2.0 * values.std())


class Lexicon:
    """Symmetric word relatedness graph (synonym or related-term edges)."""

    def __init__(self, relations: dict[str, set[str]] | None = None, kind: str = "synonym"):
        self.kind = kind
        self._relations: dict[str, set[str]] = {}
        if relations:
            for a, bs in relations.items():
                for b in bs:
                    self.add(a, b)

    def add(self, a: str, b: str) -> None:
        if a == b:
            return
        self._relations.setdefault(a, set()).add(b)
        self._relations.setdefault(b, set()).add(a)

    def neighbors(self, word: str) -> set[str]:
        return self._relations.get(word, set())

    def related(self, a: str, b: str) -> bool:
        return b in self._relations.get(a, ())

    def __contains__(self, word: str) -> bool:
        return word in self._relations

    def __len__(self) -> int:
        return len(self._relations)

    def words(self) -> list[str]:
        return sorted(self._relations)

    @classmethod
    def load(cls, reader: IO[str] | Iterable[str], kind: str = "synonym") -> "Lexicon":
        """One relation per line: "word1 word2". Symmetry is enforced.

        Tab-separated lines allow multi-word concepts ("tumor suppressor\tlats2").
        """
        lex = cls(kind=kind)
        for line in reader:
            if "\t" in line:
                parts = [p.strip() for p in line.rstrip("\n").split("\t") if p.strip()]
            else:
                parts = line.split()
            if len(parts) >= 2:
                lex.add(parts[0].lower(), parts[1].lower())
        return lex


def retrofit(
    table: EmbeddingTable,
    lexicon: Lexicon,
    iterations: int = 10,
    alpha: float = 1.0,
    beta_mode: str = "inverse_degree",
) -> EmbeddingTable:
    """Pull vectors of lexicon-related words toward each other.

    Iterative update q_i <- (alpha*q̂_i + Σ_j beta_ij*q_j) / (alpha + Σ_j beta_ij)
    over lexicon neighbors j present in the table, with q̂ the original
    vector.  beta_mode "inverse_degree" uses beta_ij = 1/degree(i),
    "uniform" uses beta_ij = 1.  Output vectors are re-unit-normalized;
    words without in-vocabulary neighbors are unchanged.
    """
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if beta_mode not in ("inverse_degree", "uniform"):
        raise ValueError(f"unknown beta_mode {beta_mode!r}")

    original = {w: table.get(w).copy() for w in table.words()}
    current = {w: v.copy() for w, v in original.items()}
    touched = [
        w for w in original if any(n in original for n in lexicon.neighbors(w))
    ]
    for _ in range(iterations):
        for w in touched:
            neigh = [n for n in sorted(lexicon.neighbors(w)) if n in current]
            beta = 1.0 / len(neigh) if beta_mode == "inverse_degree" else 1.0
            num = alpha * original[w]
            denom = alpha
            for n in neigh:
                num = num + beta * current[n]
                denom += beta
            current[w] = num / denom

    vectors = {w: _normalize(v) for w, v in current.items()}
    return EmbeddingTable(dimension=table.dimension, vectors=vectors)
