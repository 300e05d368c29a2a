"""Single-run training and evaluation for the toy classifier."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .matrix import zero_grads
from .model import FullModel, loss_t, predict_logits
from .optim import AdamState, adam_step
from .segmentation import CharSequence, WordPartition
from .synth import Example
from .tape import Tape


@dataclass(frozen=True)
class TrainSettings:
    lr0: float = 0.05
    epochs: int = 3
    batch_size: int = 8
    weight_decay: float = 0.01
    warmup_ratio: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = 1.0  # global gradient-norm cap; None disables


def clip_gradients(params, max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most max_norm."""
    total = 0.0
    for p in params:
        total += float((p.grad.data * p.grad.data).sum())
    norm = math.sqrt(total)
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        for p in params:
            p.grad.data *= factor
    return norm


@dataclass(frozen=True)
class PreparedExample:
    ids: tuple[int, ...]
    partitions: tuple[WordPartition, ...]
    label: int


@dataclass
class TrainResult:
    loss_curve: list[float] = field(default_factory=list)  # mean train loss per epoch
    diverged: bool = False
    steps: int = 0


def prepare_examples(examples: list[Example], sources, vocab_size: int) -> list[PreparedExample]:
    """Segment every example once per source up front; segmentation is
    deterministic, so this is pure precomputation."""
    prepared = []
    for e in examples:
        for i in e.ids:
            if not 0 <= i < vocab_size:
                raise InputError(f"dataset id {i} outside vocabulary of {vocab_size}")
        seq = CharSequence(chars=tuple(e.text), ids=e.ids)
        parts = tuple(src.segment(seq) for src in sources)
        prepared.append(PreparedExample(ids=e.ids, partitions=parts, label=e.label))
    return prepared


def run_training(fm: FullModel, data: list[PreparedExample], settings: TrainSettings, seed: int) -> TrainResult:
    """Train in place. Deterministic in (model init, data, settings, seed);
    a non-finite loss marks the run diverged and stops it."""
    params = fm.parameters()
    n_batches = math.ceil(len(data) / settings.batch_size)
    total_steps = max(1, settings.epochs * n_batches)
    state = AdamState(
        params,
        lr0=settings.lr0,
        beta1=settings.beta1,
        beta2=settings.beta2,
        eps=settings.eps,
        weight_decay=settings.weight_decay,
        warmup_ratio=settings.warmup_ratio,
        total_steps=total_steps,
    )
    order_rng = random.Random(seed)
    result = TrainResult()
    index = list(range(len(data)))
    for _ in range(settings.epochs):
        order_rng.shuffle(index)
        epoch_loss = 0.0
        for b in range(n_batches):
            batch = index[b * settings.batch_size : (b + 1) * settings.batch_size]
            zero_grads(params)
            batch_loss = 0.0
            for j in batch:
                ex = data[j]
                t = Tape()
                node = loss_t(t, ex.ids, list(ex.partitions), ex.label, fm)
                loss = float(node.val[0, 0])
                if not math.isfinite(loss):
                    result.diverged = True
                    return result
                batch_loss += loss
                t.backward(node)
            inv = 1.0 / len(batch)
            for p in params:
                p.grad.data *= inv
            if settings.clip_norm is not None:
                clip_gradients(params, settings.clip_norm)
            adam_step(params, state)
            result.steps += 1
            epoch_loss += batch_loss
        result.loss_curve.append(epoch_loss / len(data))
    return result


def evaluate(fm: FullModel, data: list[PreparedExample]) -> float:
    """Accuracy under argmax with ties resolved to the lowest class index."""
    if not data:
        raise InputError("cannot evaluate on an empty split")
    hits = 0
    for ex in data:
        logits = predict_logits(ex.ids, list(ex.partitions), fm)
        if int(np.argmax(logits)) == ex.label:
            hits += 1
    return hits / len(data)


def mean_loss(fm: FullModel, data: list[PreparedExample]) -> float:
    """Average cross-entropy over a split, forward only."""
    if not data:
        raise InputError("cannot evaluate on an empty split")
    total = 0.0
    for ex in data:
        t = Tape(record=False)
        total += float(loss_t(t, ex.ids, list(ex.partitions), ex.label, fm).val[0, 0])
    return total / len(data)
