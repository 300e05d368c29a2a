"""Multi-seed experiment runner and the ablation matrix.

Variants all share one code path and differ only in which segmentation
sources feed the model:

  baseline      one all-singleton source (plain multi-head attention)
  wa_single:<i> the i-th configured source alone
  wa_random     a random segmenter (parameter-matched control)
  mwa_multi     all configured sources fused

Runs are deterministic per (config, seed); seeds may execute in parallel
processes and are merged in declared order.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .config import ExperimentConfig, parse_source_spec
from .errors import ConfigError
from .model import init_model
from .segmentation import SingletonSegmenter
from .synth import Example
from .train import evaluate, prepare_examples, run_training

REPORT_VERSION = 1

# Reference toy experiment: the documented, tuned configuration for the
# five-seed ablation. The two source dictionaries deliberately cover
# complementary subsets of the task lexicon, so each single source misses
# positives that only the fused model can see.
REFERENCE_LEXICON = ("abc", "acd", "bdc", "cad", "dab")
REFERENCE_DICT_A = REFERENCE_LEXICON[:3]
REFERENCE_DICT_B = REFERENCE_LEXICON[2:]
REFERENCE_TASK = {
    "alphabet_size": 12,
    "min_len": 4,
    "max_len": 8,
}
REFERENCE_SPLITS = {"n_train": 2000, "n_dev": 800, "n_test": 800, "seed": 1}


def reference_task_spec(n_samples: int = 2000):
    from .synth import SyntheticTaskSpec

    return SyntheticTaskSpec(
        alphabet_size=REFERENCE_TASK["alphabet_size"],
        lexicon=REFERENCE_LEXICON,
        min_len=REFERENCE_TASK["min_len"],
        max_len=REFERENCE_TASK["max_len"],
        n_samples=n_samples,
    )


def reference_config(base_dir) -> ExperimentConfig:
    """The tuned five-seed reference configuration. ``base_dir`` must contain
    dict_a.txt and dict_b.txt (see :func:`write_reference_dictionaries`)."""
    cfg = ExperimentConfig(
        dim=32,
        heads=4,
        vocab_size=REFERENCE_TASK["alphabet_size"],
        max_len=16,
        classes=2,
        sources=["fmm:dict_a.txt", "bmm:dict_b.txt"],
        random_source="rand:7:2.0",
        pos_amplitude=0.15,
        lr=0.2,
        batch_size=8,
        epochs=3,
        seeds=[1, 2, 3, 4, 5],
        weight_decay=0.01,
        warmup_ratio=0.1,
        clip_norm=1.0,
        workers=2,
    )
    cfg.base_dir = Path(base_dir)
    return cfg


def write_reference_dictionaries(base_dir) -> None:
    base = Path(base_dir)
    (base / "dict_a.txt").write_text("\n".join(REFERENCE_DICT_A) + "\n", encoding="utf-8")
    (base / "dict_b.txt").write_text("\n".join(REFERENCE_DICT_B) + "\n", encoding="utf-8")


def variant_names(cfg: ExperimentConfig) -> list[str]:
    """The full ablation matrix for a config, in report order."""
    return ["baseline"] + [f"wa_single:{i}" for i in range(len(cfg.sources))] + [
        "wa_random",
        "mwa_multi",
    ]


def resolve_variant_sources(variant: str, cfg: ExperimentConfig) -> tuple[list, list[str]]:
    """Segmenters and their labels for one variant name."""
    if variant == "baseline":
        return [SingletonSegmenter()], ["char"]
    if variant == "mwa_multi":
        return cfg.build_sources(), list(cfg.sources)
    if variant == "wa_random":
        return [parse_source_spec(cfg.random_source, cfg.base_dir)], [cfg.random_source]
    if variant.startswith("wa_single:"):
        try:
            i = int(variant.split(":", 1)[1])
        except ValueError as e:
            raise ConfigError(f"bad variant name {variant!r}") from e
        if not 0 <= i < len(cfg.sources):
            raise ConfigError(f"variant {variant!r}: source index out of range")
        return [parse_source_spec(cfg.sources[i], cfg.base_dir)], [cfg.sources[i]]
    raise ConfigError(f"unknown variant {variant!r}")


@dataclass
class SeedRun:
    seed: int
    dev_accuracy: float
    loss_curve: list[float]
    wall_clock_s: float
    diverged: bool

    def metrics(self) -> dict:
        # Everything except wall clock, which legitimately varies across runs.
        return {
            "seed": self.seed,
            "dev_accuracy": self.dev_accuracy,
            "loss_curve": list(self.loss_curve),
            "diverged": self.diverged,
        }


@dataclass
class RunReport:
    variant: str
    source_labels: list[str]
    seed_runs: list[SeedRun]
    config_fingerprint: str
    report_version: int = REPORT_VERSION

    @property
    def mean_dev_accuracy(self) -> float:
        accs = [r.dev_accuracy for r in self.seed_runs]
        return sum(accs) / len(accs)

    @property
    def std_dev_accuracy(self) -> float:
        accs = [r.dev_accuracy for r in self.seed_runs]
        m = sum(accs) / len(accs)
        return (sum((a - m) ** 2 for a in accs) / len(accs)) ** 0.5

    def to_dict(self) -> dict:
        return {
            "report_version": self.report_version,
            "variant": self.variant,
            "sources": list(self.source_labels),
            "per_seed": [
                {**r.metrics(), "wall_clock_s": r.wall_clock_s} for r in self.seed_runs
            ],
            "mean_dev_accuracy": self.mean_dev_accuracy,
            "std_dev_accuracy": self.std_dev_accuracy,
            "config_fingerprint": self.config_fingerprint,
        }

    def metrics_dict(self) -> dict:
        """The deterministic part of the report (no timings)."""
        d = self.to_dict()
        d["per_seed"] = [r.metrics() for r in self.seed_runs]
        return d


def _run_one_seed(args) -> tuple[int, SeedRun, dict | None]:
    """Worker: train one (variant, seed) and evaluate on dev. Top level so it
    can cross a process boundary."""
    index, variant, seed, cfg, train_examples, dev_examples, keep_model = args
    sources, _ = resolve_variant_sources(variant, cfg)
    model_cfg = cfg.model_config(n_sources=len(sources))
    fm = init_model(model_cfg, sources, seed)
    train_prep = prepare_examples(train_examples, sources, cfg.vocab_size)
    dev_prep = prepare_examples(dev_examples, sources, cfg.vocab_size)
    t0 = time.perf_counter()
    result = run_training(fm, train_prep, cfg.train_settings(), seed)
    wall = time.perf_counter() - t0
    acc = float("nan") if result.diverged else evaluate(fm, dev_prep)
    run = SeedRun(
        seed=seed,
        dev_accuracy=acc,
        loss_curve=result.loss_curve,
        wall_clock_s=wall,
        diverged=result.diverged,
    )
    state = None
    if keep_model:
        from .checkpoint import model_state

        state = model_state(fm)
    return index, run, state


def train_variant(
    variant: str,
    cfg: ExperimentConfig,
    train_examples: list[Example],
    dev_examples: list[Example],
    workers: int = 1,
    keep_first_model: bool = False,
):
    """RunReport over cfg.seeds for one variant; optionally also returns the
    trained parameter state of the first seed (for checkpointing)."""
    _, labels = resolve_variant_sources(variant, cfg)
    jobs = [
        (i, variant, seed, cfg, train_examples, dev_examples, keep_first_model and i == 0)
        for i, seed in enumerate(cfg.seeds)
    ]
    results: dict[int, tuple[SeedRun, dict | None]] = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, run, state in pool.map(_run_one_seed, jobs):
                results[index] = (run, state)
    else:
        for job in jobs:
            index, run, state = _run_one_seed(job)
            results[index] = (run, state)
    seed_runs = [results[i][0] for i in range(len(cfg.seeds))]
    first_state = results[0][1]
    report = RunReport(
        variant=variant,
        source_labels=labels,
        seed_runs=seed_runs,
        config_fingerprint=cfg.fingerprint(),
    )
    return (report, first_state) if keep_first_model else report


def ablation_matrix(
    cfg: ExperimentConfig,
    train_examples: list[Example],
    dev_examples: list[Example],
    variants: list[str] | None = None,
    workers: int | None = None,
) -> list[RunReport]:
    """One report per variant, same seeds and data throughout."""
    names = variants if variants is not None else variant_names(cfg)
    if not names:
        raise ConfigError("no variants requested")
    w = cfg.workers if workers is None else workers
    return [train_variant(v, cfg, train_examples, dev_examples, workers=w) for v in names]


def format_ablation_table(reports: list[RunReport]) -> str:
    width = max(len(r.variant) for r in reports) + 2
    lines = [f"{'variant':<{width}}  mean_dev_acc  std       seeds"]
    for r in reports:
        lines.append(
            f"{r.variant:<{width}}  {r.mean_dev_accuracy:<12.4f}  {r.std_dev_accuracy:<8.4f}  {len(r.seed_runs)}"
        )
    return "\n".join(lines)


def report_path(out_dir, variant: str) -> Path:
    return Path(out_dir) / f"report_{variant.replace(':', '_')}.json"


def write_report(out_dir, report: RunReport) -> Path:
    path = report_path(out_dir, report.variant)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    return path
