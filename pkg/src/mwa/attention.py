"""Word-aligned multi-head self-attention.

The mechanism: compute character-level attention scores, cut the score rows
into word blocks given a partition, pool each block to a single row with a
trainable max/mean balance, replicate the pooled row back over the block, and
mix values with the aligned scores. Heads are concatenated and projected.

Score orientation: the default "kq" computes softmax((H Wk)(H Wq)^T / sqrt(dh));
"qk" is the conventional transpose. Scaling uses the per-head width, so a
single head recovers the full-width scaling exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .matrix import Matrix, Parameter, uniform_init
from .segmentation import WordPartition, require_valid, singleton_partition
from .tape import Node, Tape

ORIENTATIONS = ("kq", "qk")
POOLING_MODES = ("mixed", "mean", "max")


@dataclass
class AttentionHeadParams:
    """Per-head projections plus the raw (pre-logistic) pooling balance."""

    w_key: Parameter
    w_query: Parameter
    w_value: Parameter
    mix_raw: Parameter  # 1x1; effective balance = logistic(mix_raw) in (0, 1)

    @property
    def head_dim(self) -> int:
        return self.w_key.value.cols

    def mix_weight(self) -> float:
        """Effective pooling balance lambda = logistic(mix_raw)."""
        x = float(self.mix_raw.value.data[0, 0])
        return float(0.5 * (1.0 + np.tanh(0.5 * x)))


@dataclass
class MWALayerParams:
    """K attention heads plus the output projection."""

    heads: list[AttentionHeadParams]
    w_out: Parameter

    @property
    def n_heads(self) -> int:
        return len(self.heads)

    @property
    def dim(self) -> int:
        return self.w_out.value.rows

    @property
    def head_dim(self) -> int:
        return self.heads[0].head_dim

    @classmethod
    def create(cls, rng: np.random.Generator, dim: int, n_heads: int, tag: str = "") -> "MWALayerParams":
        """Uniform(-1/sqrt(dim), 1/sqrt(dim)) projections, mix_raw = 0."""
        if n_heads < 1 or dim % n_heads != 0:
            raise ConfigError(f"head count {n_heads} must divide width {dim}")
        head_dim = dim // n_heads
        bound = 1.0 / np.sqrt(dim)
        heads = []
        for k in range(n_heads):
            heads.append(
                AttentionHeadParams(
                    w_key=Parameter(uniform_init(rng, dim, head_dim, bound), f"{tag}head{k}.w_key"),
                    w_query=Parameter(uniform_init(rng, dim, head_dim, bound), f"{tag}head{k}.w_query"),
                    w_value=Parameter(uniform_init(rng, dim, head_dim, bound), f"{tag}head{k}.w_value"),
                    mix_raw=Parameter(Matrix.zeros(1, 1), f"{tag}head{k}.mix_raw"),
                )
            )
        w_out = Parameter(uniform_init(rng, dim, dim, bound), f"{tag}w_out")
        return cls(heads=heads, w_out=w_out)

    def parameters(self) -> list[Parameter]:
        out = []
        for h in self.heads:
            out.extend([h.w_key, h.w_query, h.w_value, h.mix_raw])
        out.append(self.w_out)
        return out


@dataclass(frozen=True)
class AlignedAttention:
    """An aligned score matrix together with the partition that shaped it."""

    matrix: Matrix
    partition: WordPartition


# ---------------------------------------------------------------------------
# Tape-level builders. All model math flows through these; the Matrix-level
# functions below run the same code on a throwaway tape.
# ---------------------------------------------------------------------------


def attention_scores_t(
    t: Tape, h: Node, w_key: Node, w_query: Node, orientation: str = "kq"
) -> Node:
    """Row-stochastic n x n character attention scores for one head."""
    if orientation not in ORIENTATIONS:
        raise ConfigError(f"unknown score orientation {orientation!r}")
    head_dim = w_key.val.shape[1]
    k_proj = t.matmul(h, w_key)
    q_proj = t.matmul(h, w_query)
    if orientation == "kq":
        logits = t.matmul(k_proj, t.transpose(q_proj))
    else:
        logits = t.matmul(q_proj, t.transpose(k_proj))
    return t.softmax_rows(t.scale(logits, 1.0 / np.sqrt(head_dim)))


def align_t(t: Tape, scores: Node, partition: WordPartition, lam) -> Node:
    """Pool each block of score rows and replicate back; single-character
    blocks pass through untouched so an all-singleton partition is the
    bitwise identity."""
    n = scores.val.shape[0]
    require_valid(partition, n)
    pieces = []
    for s, l in partition.blocks:
        if l == 1:
            pieces.append(t.slice_rows(scores, s, s + 1))
        else:
            pooled = t.mixed_pool(t.slice_rows(scores, s, s + l), lam)
            pieces.append(t.repeat_rows(pooled, l))
    if len(pieces) == 1:
        return pieces[0]
    return t.concat_rows(pieces)


def head_mix_t(t: Tape, head: AttentionHeadParams, pooling: str = "mixed"):
    """The head's pooling balance: trainable logistic(mix_raw) in mixed mode,
    or the fixed endpoint for the non-trainable pure-mean / pure-max modes."""
    if pooling == "mixed":
        return t.logistic(t.param(head.mix_raw))
    if pooling == "mean":
        return 0.0
    if pooling == "max":
        return 1.0
    raise ConfigError(f"unknown pooling mode {pooling!r}")


def multi_head_t(
    t: Tape,
    h: Node,
    partition: WordPartition,
    layer: MWALayerParams,
    orientation: str = "kq",
    pooling: str = "mixed",
) -> Node:
    """Full word-aligned layer for one segmentation source: per-head scores,
    alignment, value mixing, concat, output projection."""
    outs = []
    for head in layer.heads:
        scores = attention_scores_t(t, h, t.param(head.w_key), t.param(head.w_query), orientation)
        aligned = align_t(t, scores, partition, head_mix_t(t, head, pooling))
        values = t.matmul(h, t.param(head.w_value))
        outs.append(t.matmul(aligned, values))
    return t.matmul(t.concat_columns(outs), t.param(layer.w_out))


# ---------------------------------------------------------------------------
# Matrix-level operations (inspection, CLI dumps, tests)
# ---------------------------------------------------------------------------


def char_attention_scores(
    h: Matrix, w_key: Matrix, w_query: Matrix, orientation: str = "kq"
) -> Matrix:
    """n x n attention scores from plain matrices; rows sum to 1."""
    if w_key.shape != w_query.shape or h.cols != w_key.rows:
        raise ShapeError(
            f"attention scores: H {h.shape} with projections {w_key.shape}/{w_query.shape}"
        )
    t = Tape(record=False)
    return attention_scores_t(
        t, t.constant(h), t.constant(w_key), t.constant(w_query), orientation
    ).matrix()


def partition_rows(m: Matrix, partition: WordPartition) -> list[Matrix]:
    """Cut a matrix into per-block row groups; concatenating them restores it."""
    require_valid(partition, m.rows)
    return [Matrix._wrap(m.data[s : s + l].copy()) for s, l in partition.blocks]


def mixed_pool(block: Matrix, lam: float) -> Matrix:
    """Pool an l x n block to 1 x n: lam * columnwise max + (1 - lam) * mean."""
    t = Tape(record=False)
    return t.mixed_pool(t.constant(block), float(lam)).matrix()


def upsample(row: Matrix, length: int) -> Matrix:
    """Stack ``length`` copies of a single pooled row."""
    t = Tape(record=False)
    return t.repeat_rows(t.constant(row), length).matrix()


def align(scores: Matrix, partition: WordPartition, lam: float) -> AlignedAttention:
    """Word-align an attention matrix at a fixed pooling balance."""
    t = Tape(record=False)
    aligned = align_t(t, t.constant(scores), partition, float(lam))
    return AlignedAttention(matrix=aligned.matrix(), partition=partition)


def head_output(aligned: AlignedAttention, h: Matrix, w_value: Matrix) -> Matrix:
    """Aligned scores times projected values: aligned @ (h @ w_value)."""
    t = Tape(record=False)
    return t.matmul(
        t.constant(aligned.matrix), t.matmul(t.constant(h), t.constant(w_value))
    ).matrix()


def multi_head(
    h: Matrix,
    partition: WordPartition,
    layer: MWALayerParams,
    orientation: str = "kq",
    pooling: str = "mixed",
) -> Matrix:
    """One source's word-aligned multi-head output as a plain matrix."""
    t = Tape(record=False)
    return multi_head_t(t, t.constant(h), partition, layer, orientation, pooling).matrix()


def plain_attention_output(h: Matrix, layer: MWALayerParams, orientation: str = "kq") -> Matrix:
    """Unaligned multi-head self-attention (the all-singleton special case)."""
    return multi_head(h, singleton_partition(h.rows), layer, orientation)
