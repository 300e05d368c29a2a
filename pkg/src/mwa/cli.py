"""Command-line interface.

Exit codes: 0 success, 1 check failure, 2 usage/config/input error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .attention import MWALayerParams, align, char_attention_scores
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ExperimentConfig, load_config, parse_source_spec
from .errors import AlignmentError, ConfigError, InputError, MwaError
from .gradcheck import finite_diff_report
from .harness import (
    REFERENCE_LEXICON,
    format_ablation_table,
    reference_config,
    train_variant,
    variant_names,
    write_report,
)
from .model import ModelConfig, encode, init_check_model, init_model, loss_t
from .segmentation import CharSequence
from .synth import LETTERS, SyntheticTaskSpec, load_jsonl, make_splits, write_jsonl
from .train import evaluate, prepare_examples

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3

GRADCHECK_TOLERANCE = 1e-4


def _id_to_char(i: int) -> str:
    return LETTERS[i] if i < len(LETTERS) else chr(0x100 + i)


def cmd_segment(args) -> int:
    seq = CharSequence.from_text(args.text)
    for spec in args.source:
        segmenter = parse_source_spec(spec)
        partition = segmenter.segment(seq)
        print("|".join(partition.words(seq)))
    return EXIT_OK


def cmd_align(args) -> int:
    if args.lambda_override is not None and not 0.0 <= args.lambda_override <= 1.0:
        print(f"error: --lambda must be in [0, 1], got {args.lambda_override}", file=sys.stderr)
        return EXIT_USAGE
    if args.dim % args.heads != 0:
        raise ConfigError(f"head count {args.heads} must divide width {args.dim}")
    seq = CharSequence.from_text(args.text)
    vocab = {c: i for i, c in enumerate(sorted(set(seq.chars)))}
    seq = CharSequence.from_text(args.text, vocab)
    segmenter = parse_source_spec(args.source)
    partition = segmenter.segment(seq)

    rng = np.random.default_rng(args.seed)
    from .model import EncoderParams

    encoder = EncoderParams.create(
        rng, len(vocab), args.dim, max(seq.n, 1), ModelConfig().pos_amplitude
    )
    layer = MWALayerParams.create(rng, args.dim, args.heads)
    h = encode(seq, encoder)

    heads_out = []
    lambdas = []
    for head in layer.heads:
        lam = args.lambda_override if args.lambda_override is not None else head.mix_weight()
        scores = char_attention_scores(
            h, head.w_key.value, head.w_query.value, args.orientation
        )
        aligned = align(scores, partition, lam)
        if args.lambda_override == 0.0:
            sums = aligned.matrix.data.sum(axis=1)
            if np.abs(sums - 1.0).max() > 1e-12:
                print(
                    "internal invariant violation: aligned row sums deviate from 1 "
                    f"at lambda=0 (max deviation {np.abs(sums - 1.0).max():.3e})",
                    file=sys.stderr,
                )
                return EXIT_INTERNAL
        lambdas.append(lam)
        heads_out.append({"scores": scores.tolist(), "aligned": aligned.matrix.tolist()})

    doc = {
        "align_version": 1,
        "text": args.text,
        "source": args.source,
        "seed": args.seed,
        "dim": args.dim,
        "heads": args.heads,
        "orientation": args.orientation,
        "partition": [[s, l] for s, l in partition.blocks],
        "lambda": lambdas,
        "per_head": heads_out,
    }
    Path(args.out).write_text(json.dumps(doc) + "\n", encoding="utf-8")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    cfg = load_config(args.config)
    sources = cfg.build_sources()
    fm = init_check_model(cfg.model_config(), sources, args.seed)
    rng = np.random.default_rng(args.seed)
    n = min(8, cfg.max_len)
    ids = tuple(int(i) for i in rng.integers(0, cfg.vocab_size, size=n))
    label = int(rng.integers(0, cfg.classes))
    seq = CharSequence(chars=tuple(_id_to_char(i) for i in ids), ids=ids)
    partitions = [src.segment(seq) for src in sources]

    def loss_fn(t):
        return loss_t(t, ids, partitions, label, fm)

    corrupt = fm.parameters()[0].name if args.corrupt_gradient else None
    report = finite_diff_report(loss_fn, fm.parameters(), args.epsilon, _corrupt_analytic=corrupt)
    for name, err in report.items():
        print(f"{name:<24} {err:.3e}")
    worst_name = max(report, key=report.get)
    worst = report[worst_name]
    if worst < GRADCHECK_TOLERANCE:
        print(f"gradcheck: PASS (max relative error {worst:.3e})")
        return EXIT_OK
    print(f"gradcheck: FAIL (worst parameter {worst_name!r}, relative error {worst:.3e})")
    return EXIT_CHECK_FAILED


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    words = tuple(args.word) if args.word else REFERENCE_LEXICON
    spec = SyntheticTaskSpec(
        alphabet_size=args.alphabet_size,
        lexicon=words,
        min_len=args.min_len,
        max_len=args.max_len,
        n_samples=args.train,
        distractor_rate=args.distractor_rate,
    )
    train, dev, test = make_splits(spec, args.train, args.dev, args.test, args.seed)
    write_jsonl(out / "train.jsonl", train)
    write_jsonl(out / "dev.jsonl", dev)
    write_jsonl(out / "test.jsonl", test)
    (out / "lexicon.txt").write_text("\n".join(words) + "\n", encoding="utf-8")
    # Two overlapping partial dictionaries: each source misses words the
    # other covers, which is what multi-source fusion is meant to hedge.
    k = max(1, round(0.6 * len(words)))
    (out / "dict_a.txt").write_text("\n".join(words[:k]) + "\n", encoding="utf-8")
    (out / "dict_b.txt").write_text("\n".join(words[-k:]) + "\n", encoding="utf-8")
    cfg = reference_config(out)
    cfg.vocab_size = args.alphabet_size
    cfg.max_len = max(args.max_len + 2, 16)
    cfg.workers = args.workers
    cfg.train_dataset = "train.jsonl"
    cfg.dev_dataset = "dev.jsonl"
    cfg.test_dataset = "test.jsonl"
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(train)}/{len(dev)}/{len(test)} examples and config.json under {out}")
    return EXIT_OK


def _load_datasets(cfg: ExperimentConfig):
    if cfg.train_dataset is None or cfg.dev_dataset is None:
        raise ConfigError("config must set train_dataset and dev_dataset")
    train = load_jsonl(cfg.resolve_path(cfg.train_dataset))
    dev = load_jsonl(cfg.resolve_path(cfg.dev_dataset))
    return train, dev


def _run_variants(cfg: ExperimentConfig, names: list[str], out_dir) -> int:
    train, dev = _load_datasets(cfg)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for variant in names:
        report, state = train_variant(
            variant, cfg, train, dev, workers=cfg.workers, keep_first_model=True
        )
        reports.append(report)
        write_report(out, report)
        sources, labels = _resolve_for_ckpt(cfg, variant)
        fm = init_model(cfg.model_config(n_sources=len(sources)), sources, cfg.seeds[0])
        ckpt = out / f"ckpt_{variant.replace(':', '_')}_seed{cfg.seeds[0]}.json"
        save_checkpoint(ckpt, fm, labels, state=state)
    print(format_ablation_table(reports))
    return EXIT_OK


def _resolve_for_ckpt(cfg, variant):
    from .harness import resolve_variant_sources

    return resolve_variant_sources(variant, cfg)


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    return _run_variants(cfg, list(cfg.variants), args.out_dir)


def cmd_ablation(args) -> int:
    cfg = load_config(args.config)
    return _run_variants(cfg, variant_names(cfg), args.out_dir)


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    fm = load_checkpoint(args.ckpt, base_dir=cfg.base_dir)
    dataset = args.dataset or cfg.dev_dataset
    if dataset is None:
        raise ConfigError("no dataset: pass --dataset or set dev_dataset in the config")
    examples = load_jsonl(cfg.resolve_path(dataset))
    prepared = prepare_examples(examples, fm.mwa.sources, fm.config.vocab_size)
    acc = evaluate(fm, prepared)
    print(f"accuracy {acc:.4f} on {len(examples)} examples ({dataset})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mwa", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("segment", help="print each source's segmentation of a text")
    s.add_argument("--text", required=True)
    s.add_argument("--source", action="append", required=True, help="source spec, repeatable")
    s.set_defaults(fn=cmd_segment)

    a = sub.add_parser("align", help="dump character and word-aligned attention as JSON")
    a.add_argument("--text", required=True)
    a.add_argument("--source", required=True)
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--lambda", dest="lambda_override", type=float, default=None)
    a.add_argument("--out", required=True)
    a.add_argument("--dim", type=int, default=32)
    a.add_argument("--heads", type=int, default=4)
    a.add_argument("--orientation", choices=["kq", "qk"], default="kq")
    a.set_defaults(fn=cmd_align)

    g = sub.add_parser("gradcheck", help="verify analytic gradients by finite differences")
    g.add_argument("--config", required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--epsilon", type=float, default=1e-5)
    g.add_argument("--corrupt-gradient", action="store_true", help=argparse.SUPPRESS)
    g.set_defaults(fn=cmd_gradcheck)

    y = sub.add_parser("synth", help="generate the synthetic lexicon task")
    y.add_argument("--out-dir", required=True)
    y.add_argument("--seed", type=int, default=1)
    y.add_argument("--train", type=int, default=2000)
    y.add_argument("--dev", type=int, default=800)
    y.add_argument("--test", type=int, default=800)
    y.add_argument("--alphabet-size", type=int, default=12)
    y.add_argument("--min-len", type=int, default=4)
    y.add_argument("--max-len", type=int, default=8)
    y.add_argument("--word", action="append", help="lexicon word, repeatable")
    y.add_argument("--distractor-rate", type=float, default=0.0,
                   help="fraction of draws carrying a near-miss word fragment")
    y.add_argument("--workers", type=int, default=1)
    y.set_defaults(fn=cmd_synth)

    t = sub.add_parser("train", help="train the configured variants")
    t.add_argument("--config", required=True)
    t.add_argument("--out-dir", required=True)
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    e.add_argument("--config", required=True)
    e.add_argument("--ckpt", required=True)
    e.add_argument("--dataset", default=None)
    e.set_defaults(fn=cmd_eval)

    b = sub.add_parser("ablation", help="run the full variant matrix")
    b.add_argument("--config", required=True)
    b.add_argument("--out-dir", required=True)
    b.set_defaults(fn=cmd_ablation)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    try:
        return args.fn(args)
    except AlignmentError as e:
        print(f"error: {e} (first divergent index {e.index})", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, InputError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MwaError as e:
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
