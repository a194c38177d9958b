"""Discourse facet classification for (citance, context) pairs.

Features are hashed into a fixed-size signed sparse vector: character
n-grams (n = 2..4) of the citance and of the retrieved context, verb
tokens of the context, and the relative section position of the context
within the reference paper.  A one-vs-rest linear model (hinge or
logistic loss) predicts the facet; ties break by label lexical order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from citectx.corpus import Citance, Document, Span, tokenize
from citectx.contextualizer import looks_like_verb

DEFAULT_HASH_BITS = 18
DEFAULT_FACET_LABELS = ("Aim", "Hypothesis", "Implication", "Method", "Results")
_CHAR_NGRAM_SIZES = (2, 3, 4)


def _hash_feature(key: str, dim: int) -> tuple[int, float]:
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    h = int.from_bytes(digest, "big")
    sign = 1.0 if (h >> 1) & 1 else -1.0
    return h % dim, sign


@dataclass(frozen=True)
class FacetFeatures:
    indices: tuple[int, ...]
    values: tuple[float, ...]
    dimension: int

    def as_sparse_row(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            (self.values, (np.zeros(len(self.indices), dtype=np.int64), self.indices)),
            shape=(1, self.dimension),
        )


def _char_ngram_keys(prefix: str, text: str) -> list[str]:
    text = text.lower()
    keys = []
    for n in _CHAR_NGRAM_SIZES:
        for i in range(max(0, len(text) - n + 1)):
            keys.append(f"{prefix}:{text[i:i + n]}")
    return keys


def extract_facet_features(
    citance: Citance,
    context_span: Span,
    doc: Document,
    hash_bits: int = DEFAULT_HASH_BITS,
) -> FacetFeatures:
    """Hashed features for one (citance, context) pair.

    The relative section position is section_index / section_count; with a
    single section it is 0.
    """
    if context_span.doc_id != doc.id:
        raise ValueError(
            f"span belongs to {context_span.doc_id!r}, not document {doc.id!r}"
        )
    dim = 1 << hash_bits
    accum: dict[int, float] = {}

    context_text = doc.raw_text[context_span.char_start : context_span.char_end]
    keys = _char_ngram_keys("c", citance.cleaned_text)
    keys += _char_ngram_keys("r", context_text)
    keys += [f"v:{t}" for t in tokenize(context_text) if looks_like_verb(t)]
    for key in keys:
        idx, sign = _hash_feature(key, dim)
        accum[idx] = accum.get(idx, 0.0) + sign

    n_sections = max(1, len(doc.sections))
    section_index = doc.sentences[context_span.first_sentence].section_index
    position = section_index / n_sections
    idx, _ = _hash_feature("pos:relative_section", dim)
    accum[idx] = accum.get(idx, 0.0) + position

    items = sorted(accum.items())
    return FacetFeatures(
        indices=tuple(i for i, _ in items),
        values=tuple(v for _, v in items),
        dimension=dim,
    )


@dataclass
class FacetModel:
    labels: tuple[str, ...]  # lexically sorted
    weights: np.ndarray  # shape (n_labels, dimension)
    biases: np.ndarray  # shape (n_labels,)

    @property
    def dimension(self) -> int:
        return self.weights.shape[1]

    def save(self, path) -> None:
        np.savez_compressed(
            path, labels=np.array(self.labels), weights=self.weights, biases=self.biases
        )

    @classmethod
    def load(cls, path) -> "FacetModel":
        data = np.load(path, allow_pickle=False)
        return cls(
            labels=tuple(str(x) for x in data["labels"]),
            weights=data["weights"],
            biases=data["biases"],
        )


def train_facet_model(
    examples: list[tuple[FacetFeatures, str]],
    algorithm: str = "SVM",
    seed: int = 0,
) -> FacetModel:
    """One-vs-rest linear facet classifier (SVM hinge loss or logistic)."""
    from sklearn.linear_model import LogisticRegression
    from sklearn.svm import LinearSVC

    if not examples:
        raise ValueError("no training examples")
    labels = sorted({label for _, label in examples})
    if len(labels) < 2:
        raise ValueError("facet training needs at least 2 distinct labels")
    dim = examples[0][0].dimension
    x = sparse.vstack([f.as_sparse_row() for f, _ in examples])
    label_to_i = {lab: i for i, lab in enumerate(labels)}
    y = np.array([label_to_i[lab] for _, lab in examples])

    algorithm = algorithm.upper()
    if algorithm == "SVM":
        clf = LinearSVC(random_state=seed)
    elif algorithm == "LR":
        clf = LogisticRegression(solver="liblinear", random_state=seed)
    else:
        raise ValueError(f"unknown facet learning algorithm {algorithm!r}")
    clf.fit(x, y)

    coef = np.asarray(clf.coef_)
    intercept = np.asarray(clf.intercept_)
    if coef.shape[0] == 1:
        # binary sklearn models score class 1; expand to one row per label
        coef = np.vstack([-coef[0], coef[0]])
        intercept = np.array([-intercept[0], intercept[0]])
    weights = np.zeros((len(labels), dim))
    weights[:, : coef.shape[1]] = coef
    return FacetModel(labels=tuple(labels), weights=weights, biases=intercept)


def predict_facet(model: FacetModel, features: FacetFeatures) -> str:
    """Argmax facet; ties break toward the lexically first label."""
    if features.dimension != model.dimension:
        raise ValueError(
            f"feature dimension {features.dimension} != model dimension {model.dimension}"
        )
    idx = np.array(features.indices, dtype=np.int64)
    vals = np.array(features.values)
    scores = model.weights[:, idx] @ vals + model.biases
    return model.labels[int(np.argmax(scores))]
