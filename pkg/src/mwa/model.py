"""Toy character encoder, classifier head, and full-model assembly.

The encoder is deliberately small: a trainable embedding table plus a fixed
sinusoidal position table, summed per character. It stands in for a large
contextual encoder, which the attention layer treats as a black box anyway.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import MWALayerParams, ORIENTATIONS, POOLING_MODES
from .errors import ConfigError, InputError
from .fusion import FusionParams, MWAModel
from .matrix import Matrix, Parameter, uniform_init
from .segmentation import CharSequence, WordPartition
from .tape import Node, Tape


def sinusoidal_positions(max_n: int, dim: int, amplitude: float = 1.0) -> Matrix:
    """Fixed sin/cos position table, max_n x dim.

    ``amplitude`` rescales the table. Embeddings here are initialized at
    1/sqrt(d) (there is no sqrt(d) embedding multiplier), so a unit-amplitude
    table would drown the content signal; the model default keeps the two
    at comparable magnitude.
    """
    pos = np.arange(max_n)[:, None]
    j = np.arange(dim)[None, :]
    angle = pos / np.power(10000.0, (2 * (j // 2)) / dim)
    table = np.where(j % 2 == 0, np.sin(angle), np.cos(angle))
    return Matrix(table * amplitude)


@dataclass
class EncoderParams:
    embedding: Parameter  # V x d, trainable
    positional: Matrix  # max_n x d, fixed

    @property
    def vocab_size(self) -> int:
        return self.embedding.value.rows

    @property
    def max_n(self) -> int:
        return self.positional.rows

    @classmethod
    def create(
        cls, rng: np.random.Generator, vocab_size: int, dim: int, max_n: int,
        pos_amplitude: float = 1.0,
    ) -> "EncoderParams":
        emb = Parameter(uniform_init(rng, vocab_size, dim, 1.0 / np.sqrt(dim)), "embedding")
        return cls(embedding=emb, positional=sinusoidal_positions(max_n, dim, pos_amplitude))


def encode_t(t: Tape, ids, enc: EncoderParams) -> Node:
    """H[i] = embedding[ids[i]] + positional[i]."""
    ids = list(ids)
    if not ids:
        raise InputError("cannot encode an empty sequence")
    n = len(ids)
    if n > enc.max_n:
        raise InputError(f"sequence length {n} exceeds max length {enc.max_n}")
    for i in ids:
        if not 0 <= int(i) < enc.vocab_size:
            raise InputError(f"character id {i} outside vocabulary of {enc.vocab_size}")
    rows = t.embed_rows(t.param(enc.embedding), ids)
    return t.add(rows, t.constant(Matrix._wrap(enc.positional.data[:n].copy())))


def encode(seq: CharSequence, enc: EncoderParams) -> Matrix:
    """Encoder output as a plain matrix."""
    t = Tape(record=False)
    return encode_t(t, seq.ids, enc).matrix()


@dataclass
class ClassifierHead:
    """Mean-pools the fused representation and maps it to class logits."""

    w: Parameter  # d x C
    b: Parameter  # 1 x C

    @property
    def n_classes(self) -> int:
        return self.w.value.cols

    @classmethod
    def create(cls, rng: np.random.Generator, dim: int, n_classes: int) -> "ClassifierHead":
        return cls(
            w=Parameter(uniform_init(rng, dim, n_classes, 1.0 / np.sqrt(dim)), "classifier.w"),
            b=Parameter(Matrix.zeros(1, n_classes), "classifier.b"),
        )


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters shared by training, checkpointing, and the CLI."""

    dim: int = 32
    n_heads: int = 4
    vocab_size: int = 12
    max_len: int = 32
    n_classes: int = 2
    n_sources: int = 1
    orientation: str = "kq"
    per_source_params: bool = False
    pos_amplitude: float = 0.15
    pooling: str = "mixed"

    def validate(self) -> None:
        if not self.pos_amplitude >= 0.0:
            raise ConfigError("pos_amplitude must be nonnegative")
        if self.pooling not in POOLING_MODES:
            raise ConfigError(f"unknown pooling mode {self.pooling!r}")
        if self.dim < 1 or self.n_heads < 1 or self.dim % self.n_heads != 0:
            raise ConfigError(f"head count {self.n_heads} must divide width {self.dim}")
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be positive")
        if self.max_len < 1:
            raise ConfigError("max_len must be positive")
        if self.n_classes < 2:
            raise ConfigError("need at least two classes")
        if self.n_sources < 1:
            raise ConfigError("need at least one segmentation source")
        if self.orientation not in ORIENTATIONS:
            raise ConfigError(f"unknown score orientation {self.orientation!r}")


@dataclass
class FullModel:
    """Encoder + word-aligned attention + fusion + classifier."""

    config: ModelConfig
    encoder: EncoderParams
    mwa: MWAModel
    head: ClassifierHead

    def parameters(self) -> list[Parameter]:
        return [self.encoder.embedding, *self.mwa.parameters(), self.head.w, self.head.b]


def init_model(config: ModelConfig, sources: list, seed: int) -> FullModel:
    """Deterministic initialization: uniform(-1/sqrt(d), 1/sqrt(d)) weights,
    zero pooling balances, zero classifier bias. Draw order is fixed."""
    config.validate()
    if len(sources) != config.n_sources:
        raise ConfigError(f"config declares {config.n_sources} sources, got {len(sources)}")
    rng = np.random.default_rng(seed)
    encoder = EncoderParams.create(
        rng, config.vocab_size, config.dim, config.max_len, config.pos_amplitude
    )
    layer = MWALayerParams.create(rng, config.dim, config.n_heads)
    per_source = None
    if config.per_source_params:
        per_source = [
            MWALayerParams.create(rng, config.dim, config.n_heads, tag=f"src{i}.")
            for i in range(config.n_sources)
        ]
    fusion = FusionParams.create(rng, config.dim)
    mwa = MWAModel(
        layer=layer,
        fusion=fusion,
        sources=list(sources),
        per_source_layers=per_source,
        orientation=config.orientation,
        pooling=config.pooling,
    )
    head = ClassifierHead.create(rng, config.dim, config.n_classes)
    return FullModel(config=config, encoder=encoder, mwa=mwa, head=head)


def init_check_model(config: ModelConfig, sources: list, seed: int) -> FullModel:
    """A gradient-verification instance of the model.

    Identical architecture to :func:`init_model`, but weights are drawn wider
    (uniform +-0.8) and pooling balances randomized away from 0.5, so every
    gradient entry sits well above finite-difference rounding noise. Training
    never uses this init; it exists so the verifier measures backward
    correctness rather than the conditioning of the training init point.
    """
    fm = init_model(config, sources, seed)
    rng = np.random.default_rng(seed + 0x5EED)
    for p in fm.parameters():
        if p.name.endswith("mix_raw"):
            p.value.data[...] = rng.uniform(-1.0, 1.0, size=p.value.shape)
        else:
            p.value.data[...] = rng.uniform(-0.8, 0.8, size=p.value.shape)
    return fm


def logits_t(t: Tape, ids, partitions: list[WordPartition], fm: FullModel) -> Node:
    from .fusion import mwa_forward_t

    h = encode_t(t, ids, fm.encoder)
    fused = mwa_forward_t(t, h, partitions, fm.mwa)
    pooled = t.mean_rows(fused)
    return t.add(t.matmul(pooled, t.param(fm.head.w)), t.param(fm.head.b))


def loss_t(t: Tape, ids, partitions: list[WordPartition], label: int, fm: FullModel) -> Node:
    return t.cross_entropy(logits_t(t, ids, partitions, fm), label)


def predict_logits(ids, partitions: list[WordPartition], fm: FullModel) -> np.ndarray:
    """Forward-only class logits as a flat float array."""
    t = Tape(record=False)
    return logits_t(t, ids, partitions, fm).val[0].copy()


def segment_for_model(seq: CharSequence, fm: FullModel) -> list[WordPartition]:
    """Run every source segmenter of the model on one sequence."""
    return [src.segment(seq) for src in fm.mwa.sources]
