"""JSON checkpoints with explicit per-tensor shape headers.

Floats are serialized with Python's shortest round-trip representation, so a
save/load cycle reproduces every 64-bit value exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ConfigError, InputError
from .model import FullModel, ModelConfig, init_model

CKPT_VERSION = 1


def model_state(fm: FullModel) -> dict[str, dict]:
    """Named tensors: {"rows", "cols", "data" (flat row-major)} per parameter."""
    state = {}
    for p in fm.parameters():
        if not p.name:
            raise ConfigError("cannot checkpoint an unnamed parameter")
        if p.name in state:
            raise ConfigError(f"duplicate parameter name {p.name!r}")
        state[p.name] = {
            "rows": p.value.rows,
            "cols": p.value.cols,
            "data": p.value.data.reshape(-1).tolist(),
        }
    return state


def save_checkpoint(path, fm: FullModel, source_specs: list[str], state: dict | None = None) -> None:
    doc = {
        "ckpt_version": CKPT_VERSION,
        "model_config": {
            "dim": fm.config.dim,
            "n_heads": fm.config.n_heads,
            "vocab_size": fm.config.vocab_size,
            "max_len": fm.config.max_len,
            "n_classes": fm.config.n_classes,
            "n_sources": fm.config.n_sources,
            "orientation": fm.config.orientation,
            "per_source_params": fm.config.per_source_params,
            "pos_amplitude": fm.config.pos_amplitude,
            "pooling": fm.config.pooling,
        },
        "sources": list(source_specs),
        "tensors": state if state is not None else model_state(fm),
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def load_state(fm: FullModel, tensors: dict[str, dict]) -> None:
    """Copy checkpoint tensors into an initialized model, validating shapes."""
    params = {p.name: p for p in fm.parameters()}
    missing = set(params) - set(tensors)
    extra = set(tensors) - set(params)
    if missing or extra:
        raise InputError(
            f"checkpoint tensor mismatch: missing {sorted(missing)}, unexpected {sorted(extra)}"
        )
    for name, rec in tensors.items():
        p = params[name]
        shape = (int(rec["rows"]), int(rec["cols"]))
        if shape != p.value.shape:
            raise InputError(
                f"checkpoint tensor {name!r} has shape {shape}, expected {p.value.shape}"
            )
        data = np.asarray(rec["data"], dtype=np.float64)
        if data.size != shape[0] * shape[1]:
            raise InputError(f"checkpoint tensor {name!r} has wrong element count")
        p.value.data[...] = data.reshape(shape)


def load_checkpoint(path, sources: list | None = None, base_dir=None) -> FullModel:
    """Rebuild a model from a checkpoint; segmenters are reconstructed from
    the stored source specs unless given explicitly."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read checkpoint {path}: {e}") from e
    if doc.get("ckpt_version") != CKPT_VERSION:
        raise InputError(f"unsupported ckpt_version {doc.get('ckpt_version')!r}")
    mc = doc["model_config"]
    config = ModelConfig(
        dim=mc["dim"],
        n_heads=mc["n_heads"],
        vocab_size=mc["vocab_size"],
        max_len=mc["max_len"],
        n_classes=mc["n_classes"],
        n_sources=mc["n_sources"],
        orientation=mc.get("orientation", "kq"),
        per_source_params=mc.get("per_source_params", False),
        pos_amplitude=mc.get("pos_amplitude", 0.15),
        pooling=mc.get("pooling", "mixed"),
    )
    if sources is None:
        from .config import parse_source_spec

        sources = [parse_source_spec(s, base_dir) for s in doc.get("sources", [])]
    fm = init_model(config, sources, seed=0)
    load_state(fm, doc["tensors"])
    return fm
