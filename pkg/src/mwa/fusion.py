"""Multi-source fusion: sum of tanh-projected per-source representations.

Summation over sources is fixed left-to-right in declared source order, so
outputs are reproducible; reordering sources changes results only by float
addition reordering (within 1e-12).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attention import MWALayerParams, align_t, attention_scores_t, head_mix_t
from .errors import ConfigError, ShapeError
from .matrix import Matrix, Parameter, uniform_init
from .segmentation import WordPartition, require_valid
from .tape import Node, Tape


@dataclass
class FusionParams:
    w_fuse: Parameter  # square, layer width

    @classmethod
    def create(cls, rng: np.random.Generator, dim: int) -> "FusionParams":
        return cls(w_fuse=Parameter(uniform_init(rng, dim, dim, 1.0 / np.sqrt(dim)), "w_fuse"))


@dataclass
class MWAModel:
    """Shared attention layer + fusion over an ordered list of sources.

    ``per_source_layers`` optionally gives each source its own attention
    parameters; by default one layer is shared across all sources.
    """

    layer: MWALayerParams
    fusion: FusionParams
    sources: list = field(default_factory=list)
    per_source_layers: list[MWALayerParams] | None = None
    orientation: str = "kq"
    pooling: str = "mixed"

    def __post_init__(self):
        if len(self.sources) < 1:
            raise ConfigError("a model needs at least one segmentation source")
        if self.per_source_layers is not None and len(self.per_source_layers) != len(self.sources):
            raise ConfigError(
                f"{len(self.per_source_layers)} per-source layers for {len(self.sources)} sources"
            )

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    def layer_for(self, source_index: int) -> MWALayerParams:
        if self.per_source_layers is not None:
            return self.per_source_layers[source_index]
        return self.layer

    def parameters(self) -> list[Parameter]:
        out = []
        if self.per_source_layers is not None:
            for layer in self.per_source_layers:
                out.extend(layer.parameters())
        else:
            out.extend(self.layer.parameters())
        out.append(self.fusion.w_fuse)
        return out


def fuse_t(t: Tape, reps: list[Node], w_fuse: Node) -> Node:
    """Left-to-right sum of tanh(rep @ w_fuse) over sources."""
    if not reps:
        raise ShapeError("fuse: empty representation list")
    shape = reps[0].val.shape
    for i, r in enumerate(reps):
        if r.val.shape != shape:
            raise ShapeError(f"fuse: source 0 has shape {shape}, source {i} has {r.val.shape}")
    acc = t.tanh_map(t.matmul(reps[0], w_fuse))
    for r in reps[1:]:
        acc = t.add(acc, t.tanh_map(t.matmul(r, w_fuse)))
    return acc


def mwa_forward_t(
    t: Tape, h: Node, partitions: list[WordPartition], model: MWAModel
) -> Node:
    """Full forward pass: one word-aligned representation per source, fused.

    With a shared layer the per-head scores and projected values do not
    depend on the partition, so they are computed once and reused across
    sources; the result is identical to running each source independently.
    """
    if len(partitions) != model.n_sources:
        raise ConfigError(
            f"model declares {model.n_sources} sources but got {len(partitions)} partitions"
        )
    n = h.val.shape[0]
    for p in partitions:
        require_valid(p, n)

    w_fuse = t.param(model.fusion.w_fuse)
    if model.per_source_layers is not None:
        reps = [
            _source_rep(t, h, part, model.layer_for(i), model.orientation, model.pooling)
            for i, part in enumerate(partitions)
        ]
        return fuse_t(t, reps, w_fuse)

    layer = model.layer
    shared = []
    for head in layer.heads:
        scores = attention_scores_t(
            t, h, t.param(head.w_key), t.param(head.w_query), model.orientation
        )
        values = t.matmul(h, t.param(head.w_value))
        shared.append((scores, values, head_mix_t(t, head, model.pooling)))
    reps = []
    for part in partitions:
        outs = [
            t.matmul(align_t(t, scores, part, mix), values)
            for scores, values, mix in shared
        ]
        reps.append(t.matmul(t.concat_columns(outs), t.param(layer.w_out)))
    return fuse_t(t, reps, w_fuse)


def _source_rep(t, h, partition, layer, orientation, pooling):
    outs = []
    for head in layer.heads:
        scores = attention_scores_t(t, h, t.param(head.w_key), t.param(head.w_query), orientation)
        aligned = align_t(t, scores, partition, head_mix_t(t, head, pooling))
        outs.append(t.matmul(aligned, t.matmul(h, t.param(head.w_value))))
    return t.matmul(t.concat_columns(outs), t.param(layer.w_out))


# ---------------------------------------------------------------------------
# Matrix-level wrappers
# ---------------------------------------------------------------------------


def fuse(reps: list[Matrix], w_fuse: Matrix) -> Matrix:
    """Sum of tanh(rep @ w_fuse); every entry lies strictly in (-M, M)."""
    t = Tape(record=False)
    return fuse_t(t, [t.constant(r) for r in reps], t.constant(w_fuse)).matrix()


def mwa_forward(h: Matrix, partitions: list[WordPartition], model: MWAModel) -> Matrix:
    """Forward pass on plain matrices (no gradient recording)."""
    t = Tape(record=False)
    return mwa_forward_t(t, t.constant(h), partitions, model).matrix()
