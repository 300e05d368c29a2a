"""Scikit-learn style front end for the word-aligned attention classifier.

``MWAClassifier`` follows the estimator protocol (``fit`` / ``predict`` /
``predict_proba`` / ``get_params`` / ``set_params``, hyperparameters stored
verbatim, fitted state in trailing-underscore attributes) without importing
scikit-learn, so it composes with ``sklearn.clone`` and pipelines when that
ecosystem is present.
"""

from __future__ import annotations

import inspect

import numpy as np

from .config import parse_source_spec
from .errors import InputError
from .model import ModelConfig, init_model, predict_logits
from .segmentation import CharSequence
from .synth import Example
from .train import TrainSettings, prepare_examples, run_training


def check_text_array(X, max_len: int | None = None) -> list[str]:
    """Validate a 1-D collection of nonempty strings."""
    if isinstance(X, str):
        raise InputError("X must be a sequence of strings, not a single string")
    texts = list(X)
    if not texts:
        raise InputError("X is empty")
    for i, t in enumerate(texts):
        if not isinstance(t, str):
            raise InputError(f"X[{i}] is {type(t).__name__}, expected str")
        if len(t) < 1:
            raise InputError(f"X[{i}] is an empty string")
        if max_len is not None and len(t) > max_len:
            raise InputError(f"X[{i}] has length {len(t)} > max_len {max_len}")
    return texts


def check_labels(y, n: int) -> list:
    labels = list(y)
    if len(labels) != n:
        raise InputError(f"X has {n} samples but y has {len(labels)}")
    return labels


class MWAClassifier:
    """Character-sequence classifier built on word-aligned attention.

    Parameters mirror the toy training harness: ``dim`` (embedding width),
    ``n_heads`` (must divide dim), ``sources`` (segmenter objects or source
    spec strings such as ``"fmm:lexicon.txt"``; the string ``"char"`` is the
    singleton, no-word-information source), plus the optimizer settings.
    The vocabulary is built from the characters seen in ``fit``.
    """

    def __init__(
        self,
        dim: int = 32,
        n_heads: int = 4,
        sources=("char",),
        epochs: int = 3,
        batch_size: int = 8,
        learning_rate: float = 0.05,
        weight_decay: float = 0.01,
        warmup_ratio: float = 0.1,
        max_len: int = 64,
        orientation: str = "kq",
        seed: int = 0,
    ):
        self.dim = dim
        self.n_heads = n_heads
        self.sources = sources
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.warmup_ratio = warmup_ratio
        self.max_len = max_len
        self.orientation = orientation
        self.seed = seed

    # -- estimator protocol --------------------------------------------------

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [p for p in sig.parameters if p != "self"]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params) -> "MWAClassifier":
        valid = set(self._param_names())
        for k, v in params.items():
            if k not in valid:
                raise InputError(f"unknown parameter {k!r} for MWAClassifier")
            setattr(self, k, v)
        return self

    # -- fitting ---------------------------------------------------------------

    def _resolve_sources(self) -> list:
        resolved = []
        for s in self.sources:
            if isinstance(s, str):
                if s == "char":
                    from .segmentation import SingletonSegmenter

                    resolved.append(SingletonSegmenter())
                else:
                    resolved.append(parse_source_spec(s))
            else:
                resolved.append(s)
        if not resolved:
            raise InputError("sources must list at least one segmenter")
        return resolved

    def fit(self, X, y) -> "MWAClassifier":
        texts = check_text_array(X, self.max_len)
        labels = check_labels(y, len(texts))
        self.classes_ = sorted(set(labels))
        if len(self.classes_) < 2:
            raise InputError("fit needs at least two distinct classes")
        class_index = {c: i for i, c in enumerate(self.classes_)}
        self.vocab_ = {c: i for i, c in enumerate(sorted({c for t in texts for c in t}))}

        sources = self._resolve_sources()
        config = ModelConfig(
            dim=self.dim,
            n_heads=self.n_heads,
            vocab_size=len(self.vocab_),
            max_len=self.max_len,
            n_classes=len(self.classes_),
            n_sources=len(sources),
            orientation=self.orientation,
        )
        examples = [
            Example(
                ids=tuple(self.vocab_[c] for c in t),
                text=t,
                label=class_index[lab],
            )
            for t, lab in zip(texts, labels)
        ]
        prepared = prepare_examples(examples, sources, len(self.vocab_))
        self.model_ = init_model(config, sources, self.seed)
        settings = TrainSettings(
            lr0=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            weight_decay=self.weight_decay,
            warmup_ratio=self.warmup_ratio,
        )
        result = run_training(self.model_, prepared, settings, self.seed)
        self.loss_curve_ = result.loss_curve
        self.diverged_ = result.diverged
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "model_"):
            raise InputError("this MWAClassifier instance is not fitted yet")

    def _prepare(self, X) -> list:
        texts = check_text_array(X, self.max_len)
        unseen = sorted({c for t in texts for c in t} - set(self.vocab_))
        if unseen:
            raise InputError(f"characters not seen during fit: {unseen[:8]}")
        sources = self.model_.mwa.sources
        prepared = []
        for t in texts:
            seq = CharSequence.from_text(t, self.vocab_)
            prepared.append((seq.ids, [s.segment(seq) for s in sources]))
        return prepared

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        rows = []
        for ids, parts in self._prepare(X):
            logits = predict_logits(ids, parts, self.model_)
            e = np.exp(logits - logits.max())
            rows.append(e / e.sum())
        return np.array(rows)

    def predict(self, X) -> list:
        self._check_fitted()
        out = []
        for ids, parts in self._prepare(X):
            logits = predict_logits(ids, parts, self.model_)
            out.append(self.classes_[int(np.argmax(logits))])
        return out

    def score(self, X, y) -> float:
        preds = self.predict(X)
        labels = check_labels(y, len(preds))
        return sum(p == t for p, t in zip(preds, labels)) / len(preds)
