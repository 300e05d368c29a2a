"""Word partitions over character sequences from multiple segmenter sources.

Segmenters never fail: any span not covered by the lexicon falls back to
singleton blocks, mirroring how real segmentation tools always emit output.
External segmentations, by contrast, must match the input text exactly;
silent repair would hide the boundary errors this mechanism is meant to
study.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import AlignmentError, InputError


@dataclass(frozen=True)
class CharSequence:
    """A character sequence with parallel vocabulary ids."""

    chars: tuple[str, ...]
    ids: tuple[int, ...]

    def __post_init__(self):
        if len(self.chars) < 1:
            raise InputError("character sequence must be nonempty")
        if len(self.chars) != len(self.ids):
            raise InputError(
                f"chars ({len(self.chars)}) and ids ({len(self.ids)}) differ in length"
            )

    @classmethod
    def from_text(cls, text: str, vocab: dict[str, int] | None = None) -> "CharSequence":
        """Build from a string; without a vocab every id is 0 (segmentation-only use)."""
        chars = tuple(text)
        if vocab is None:
            ids = (0,) * len(chars)
        else:
            missing = [c for c in chars if c not in vocab]
            if missing:
                raise InputError(f"character {missing[0]!r} not in vocabulary")
            ids = tuple(vocab[c] for c in chars)
        return cls(chars, ids)

    @property
    def n(self) -> int:
        return len(self.chars)

    @property
    def text(self) -> str:
        return "".join(self.chars)


@dataclass(frozen=True)
class WordPartition:
    """Contiguous, non-overlapping word blocks covering positions 0..n-1.

    Each block is (start, length) with 0-based start.
    """

    blocks: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return sum(l for _, l in self.blocks)

    def lens(self) -> list[int]:
        return [l for _, l in self.blocks]

    def words(self, seq: CharSequence) -> list[str]:
        return ["".join(seq.chars[s : s + l]) for s, l in self.blocks]


def validate_partition(p: WordPartition, n: int) -> str | None:
    """None if the partition is a valid cover of [0, n); otherwise the first
    violated invariant as a message."""
    if not p.blocks:
        return "empty partition"
    if p.blocks[0][0] != 0:
        return f"first block starts at {p.blocks[0][0]}, expected 0"
    pos = 0
    for s, l in p.blocks:
        if l < 1:
            return f"non-positive block length {l} at index {pos}"
        if s != pos:
            kind = "gap" if s > pos else "overlap"
            return f"{kind} violation at index {pos}: block starts at {s}"
        pos = s + l
    if pos != n:
        return f"coverage violation (sum {pos} != {n})"
    return None


def require_valid(p: WordPartition, n: int) -> None:
    msg = validate_partition(p, n)
    if msg is not None:
        raise InputError(f"invalid partition: {msg}")


def singleton_partition(n: int) -> WordPartition:
    return WordPartition(tuple((i, 1) for i in range(n)))


class Lexicon:
    """An immutable word list for dictionary-based maximum matching."""

    def __init__(self, words=()):
        entries = frozenset(w for w in words if w)
        self.entries = entries
        self.max_len = max((len(w) for w in entries), default=0)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def load_dictionary(path) -> Lexicon:
    """Read a UTF-8 word list, one word per line; blank lines ignored,
    duplicates collapsed."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"cannot read dictionary {path}: {e}") from e
    return Lexicon(line.strip() for line in text.splitlines() if line.strip())


def fmm_segment(seq: CharSequence, lexicon: Lexicon) -> WordPartition:
    """Forward maximum matching: at each position take the longest lexicon
    entry starting there, else a singleton block."""
    text = seq.text
    n = seq.n
    blocks = []
    pos = 0
    while pos < n:
        size = 1
        for cand in range(min(lexicon.max_len, n - pos), 1, -1):
            if text[pos : pos + cand] in lexicon:
                size = cand
                break
        blocks.append((pos, size))
        pos += size
    return WordPartition(tuple(blocks))


def bmm_segment(seq: CharSequence, lexicon: Lexicon) -> WordPartition:
    """Backward maximum matching: scan right to left taking the longest
    lexicon entry ending at each position."""
    text = seq.text
    n = seq.n
    rev = []
    pos = n
    while pos > 0:
        size = 1
        for cand in range(min(lexicon.max_len, pos), 1, -1):
            if text[pos - cand : pos] in lexicon:
                size = cand
                break
        rev.append((pos - size, size))
        pos -= size
    return WordPartition(tuple(reversed(rev)))


def _mix_seed(seed: int, ids: tuple[int, ...]) -> int:
    # FNV-1a over (seed, ids) so the draw is a pure function of both,
    # independent of interpreter hash randomization.
    h = 0xCBF29CE484222325
    for v in (seed, *ids):
        for b in int(v).to_bytes(8, "little", signed=True):
            h ^= b
            h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def random_segment(seq: CharSequence, seed: int, mean_word_len: float) -> WordPartition:
    """Random blocks with geometric lengths of the given mean, truncated to
    fit; deterministic in (seq, seed, mean_word_len)."""
    if mean_word_len < 1:
        raise InputError(f"mean_word_len must be >= 1, got {mean_word_len}")
    rng = random.Random(_mix_seed(seed, seq.ids))
    p = 1.0 / mean_word_len
    n = seq.n
    blocks = []
    pos = 0
    while pos < n:
        if p >= 1.0:
            length = 1
        else:
            u = rng.random()
            length = 1 + int(math.log(1.0 - u) / math.log(1.0 - p))
        length = min(length, n - pos)
        blocks.append((pos, length))
        pos += length
    return WordPartition(tuple(blocks))


def partition_from_words(seq: CharSequence, words: list[str]) -> WordPartition:
    """Convert an external segmenter's word list to a partition, checking the
    concatenation reproduces the sequence character for character."""
    if not words:
        raise InputError("word list must be nonempty")
    n = seq.n
    blocks = []
    pos = 0
    for w in words:
        if not w:
            raise AlignmentError(f"empty word at character index {pos}", pos)
        for offset, ch in enumerate(w):
            if pos + offset >= n:
                raise AlignmentError(
                    f"segmentation extends past the sequence at index {n}", n
                )
            if seq.chars[pos + offset] != ch:
                raise AlignmentError(
                    f"segmentation diverges at index {pos + offset}: "
                    f"expected {seq.chars[pos + offset]!r}, got {ch!r}",
                    pos + offset,
                )
        blocks.append((pos, len(w)))
        pos += len(w)
    if pos != n:
        raise AlignmentError(f"segmentation covers {pos} of {n} characters", pos)
    return WordPartition(tuple(blocks))


def load_external_segmentations(path) -> dict[str, list[str]]:
    """Read a JSON Lines file of {"text": ..., "words": [...]} records."""
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise InputError(f"cannot read external segmentation {path}: {e}") from e
    table: dict[str, list[str]] = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise InputError(f"{path}:{lineno}: invalid JSON: {e}") from e
        if not isinstance(rec, dict) or "text" not in rec or "words" not in rec:
            raise InputError(f'{path}:{lineno}: expected {{"text", "words"}} keys')
        words = rec["words"]
        if not isinstance(words, list) or not all(isinstance(w, str) for w in words):
            raise InputError(f"{path}:{lineno}: words must be a list of strings")
        table[rec["text"]] = words
    return table


# ---------------------------------------------------------------------------
# Segmenter sources. Each is a pure callable object: segment(seq) -> partition.
# ---------------------------------------------------------------------------


class FmmSegmenter:
    def __init__(self, lexicon: Lexicon, label: str = "fmm"):
        self.lexicon = lexicon
        self.label = label

    def segment(self, seq: CharSequence) -> WordPartition:
        return fmm_segment(seq, self.lexicon)


class BmmSegmenter:
    def __init__(self, lexicon: Lexicon, label: str = "bmm"):
        self.lexicon = lexicon
        self.label = label

    def segment(self, seq: CharSequence) -> WordPartition:
        return bmm_segment(seq, self.lexicon)


class RandomSegmenter:
    def __init__(self, seed: int, mean_word_len: float, label: str | None = None):
        if mean_word_len < 1:
            raise InputError(f"mean_word_len must be >= 1, got {mean_word_len}")
        self.seed = seed
        self.mean_word_len = mean_word_len
        self.label = label or f"rand:{seed}:{mean_word_len:g}"

    def segment(self, seq: CharSequence) -> WordPartition:
        return random_segment(seq, self.seed, self.mean_word_len)


class ExternalSegmenter:
    """Looks up pre-segmented output; unknown text is an error, not a guess."""

    def __init__(self, table: dict[str, list[str]], label: str = "ext"):
        self.table = table
        self.label = label

    def segment(self, seq: CharSequence) -> WordPartition:
        text = seq.text
        if text not in self.table:
            raise InputError(f"text not present in external segmentation: {text!r}")
        return partition_from_words(seq, self.table[text])


class SingletonSegmenter:
    """Every character is its own block; the no-word-information source."""

    label = "char"

    def segment(self, seq: CharSequence) -> WordPartition:
        return singleton_partition(seq.n)
