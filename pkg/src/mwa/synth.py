"""Synthetic lexicon task: does any lexicon word occur in the sequence?

Labels depend on multi-character substrings, so word boundaries carry real
signal for the alignment mechanism to exploit. The label oracle is an
exhaustive substring scan; generation is rejection sampling from the uniform
character distribution, which keeps positives and negatives identically
distributed apart from the rule itself.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, InputError

LETTERS = "abcdefghijklmnopqrstuvwxyz"


def alphabet(size: int) -> str:
    if not 1 <= size <= len(LETTERS):
        raise ConfigError(f"alphabet size must be in [1, {len(LETTERS)}], got {size}")
    return LETTERS[:size]


def vocab_for(size: int) -> dict[str, int]:
    return {c: i for i, c in enumerate(alphabet(size))}


@dataclass(frozen=True)
class SyntheticTaskSpec:
    alphabet_size: int
    lexicon: tuple[str, ...]
    min_len: int
    max_len: int
    n_samples: int
    # probability that a drawn sequence carries a planted near-miss fragment
    # (a lexicon word minus one character); labels still come from the scan,
    # so this only hardens the class boundary against character statistics
    distractor_rate: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.distractor_rate <= 1.0:
            raise ConfigError(f"distractor_rate must be in [0, 1], got {self.distractor_rate}")
        letters = set(alphabet(self.alphabet_size))
        for w in self.lexicon:
            if len(w) < 2:
                raise ConfigError(f"lexicon words must be multi-character, got {w!r}")
            if not set(w) <= letters:
                raise ConfigError(f"lexicon word {w!r} uses characters outside the alphabet")
            if len(w) > self.max_len:
                raise ConfigError(f"lexicon word {w!r} does not fit the length range")
        if not 1 <= self.min_len <= self.max_len:
            raise ConfigError(f"bad length range [{self.min_len}, {self.max_len}]")
        if self.n_samples < 1:
            raise ConfigError("n_samples must be positive")


@dataclass(frozen=True)
class Example:
    ids: tuple[int, ...]
    text: str
    label: int


def contains_lexicon_word(text: str, lexicon) -> bool:
    """Label oracle: exhaustive scan for any lexicon word as a substring."""
    return any(w in text for w in lexicon)


def synth_dataset(
    spec: SyntheticTaskSpec, seed: int, exclude: set[str] | None = None
) -> list[Example]:
    """Balanced dataset (labels differ by at most 1), deterministic in seed.

    ``exclude`` texts are never emitted, which is how split disjointness is
    enforced. Raises ConfigError when the requested balance is infeasible.
    """
    n_pos = spec.n_samples // 2
    n_neg = spec.n_samples - n_pos
    if n_pos > 0 and not spec.lexicon:
        raise ConfigError("positive labels requested but the lexicon is empty")

    chars = alphabet(spec.alphabet_size)
    voc = vocab_for(spec.alphabet_size)
    rng = random.Random(seed)
    seen = set(exclude) if exclude else set()
    pos: list[Example] = []
    neg: list[Example] = []
    attempts = 0
    max_attempts = 4000 * spec.n_samples + 100000
    while len(pos) < n_pos or len(neg) < n_neg:
        attempts += 1
        if attempts > max_attempts:
            raise ConfigError(
                f"could not draw a balanced dataset after {max_attempts} attempts "
                f"({len(pos)}/{n_pos} positive, {len(neg)}/{n_neg} negative)"
            )
        length = rng.randint(spec.min_len, spec.max_len)
        drawn = [rng.choice(chars) for _ in range(length)]
        if spec.lexicon and rng.random() < spec.distractor_rate:
            word = spec.lexicon[rng.randrange(len(spec.lexicon))]
            cut = rng.randrange(len(word))
            frag = word[:cut] + word[cut + 1 :]
            if 0 < len(frag) <= length:
                at = rng.randrange(length - len(frag) + 1)
                drawn[at : at + len(frag)] = frag
        text = "".join(drawn)
        if text in seen:
            continue
        label = 1 if contains_lexicon_word(text, spec.lexicon) else 0
        bucket = pos if label == 1 else neg
        if len(bucket) >= (n_pos if label == 1 else n_neg):
            continue
        seen.add(text)
        bucket.append(Example(ids=tuple(voc[c] for c in text), text=text, label=label))
    data = pos + neg
    rng.shuffle(data)
    return data


def make_splits(
    spec: SyntheticTaskSpec, n_train: int, n_dev: int, n_test: int, seed: int
) -> tuple[list[Example], list[Example], list[Example]]:
    """Three balanced splits, disjoint by sequence text."""
    seen: set[str] = set()
    splits = []
    for i, n in enumerate((n_train, n_dev, n_test)):
        part_spec = SyntheticTaskSpec(
            alphabet_size=spec.alphabet_size,
            lexicon=spec.lexicon,
            min_len=spec.min_len,
            max_len=spec.max_len,
            n_samples=n,
            distractor_rate=spec.distractor_rate,
        )
        part = synth_dataset(part_spec, seed + i, exclude=seen)
        seen.update(e.text for e in part)
        splits.append(part)
    return splits[0], splits[1], splits[2]


def write_jsonl(path, examples: list[Example]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for e in examples:
            f.write(json.dumps({"ids": list(e.ids), "text": e.text, "label": e.label}) + "\n")


def load_jsonl(path) -> list[Example]:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"cannot read dataset {path}: {e}") from e
    out = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise InputError(f"{path}:{lineno}: invalid JSON: {e}") from e
        try:
            ids = tuple(int(i) for i in rec["ids"])
            text = str(rec["text"])
            label = int(rec["label"])
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"{path}:{lineno}: expected ids/text/label fields") from e
        if len(ids) != len(text):
            raise InputError(f"{path}:{lineno}: ids and text lengths differ")
        out.append(Example(ids=ids, text=text, label=label))
    if not out:
        raise InputError(f"{path}: dataset is empty")
    return out
