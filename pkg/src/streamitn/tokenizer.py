"""Per-word greedy subword tokenizer with word alignment and label projection."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .tags import IGNORE, NC_INDEX, PUNCT_INDEX

PAD, UNK, BOS, EOS = "<pad>", "<unk>", "<bos>", "<eos>"
SPECIALS = (PAD, UNK, BOS, EOS)
VOCAB_HEADER = "#streamitn-vocab v1"


@dataclass(frozen=True)
class Vocab:
    pieces: tuple[str, ...]
    piece_to_id: dict[str, int] = field(repr=False, compare=False)

    @classmethod
    def from_pieces(cls, pieces: Iterable[str]) -> "Vocab":
        pieces = tuple(pieces)
        if pieces[: len(SPECIALS)] != SPECIALS:
            raise ValueError("vocab must start with the special pieces")
        mapping = {}
        for i, p in enumerate(pieces):
            if p in mapping:
                raise ValueError(f"duplicate piece {p!r}")
            mapping[p] = i
        return cls(pieces, mapping)

    def __len__(self) -> int:
        return len(self.pieces)

    @property
    def pad_id(self) -> int:
        return self.piece_to_id[PAD]

    @property
    def unk_id(self) -> int:
        return self.piece_to_id[UNK]

    @property
    def bos_id(self) -> int:
        return self.piece_to_id[BOS]

    @property
    def eos_id(self) -> int:
        return self.piece_to_id[EOS]

    @cached_property
    def max_piece_len(self) -> int:
        return max(len(p) for p in self.pieces[len(SPECIALS):]) if len(self) > len(SPECIALS) else 1

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join((VOCAB_HEADER,) + self.pieces) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines[0] != VOCAB_HEADER:
            raise ValueError(f"not a vocab file: {path}")
        return cls.from_pieces(lines[1:-1] if lines[-1] == "" else lines[1:])


@dataclass(frozen=True)
class SubwordSequence:
    token_ids: list[int]
    word_ids: list[int]
    is_first: list[bool]

    def __len__(self) -> int:
        return len(self.token_ids)

    @property
    def num_words(self) -> int:
        return self.word_ids[-1] + 1 if self.word_ids else 0

    def first_positions(self) -> list[int]:
        return [i for i, f in enumerate(self.is_first) if f]


@dataclass(frozen=True)
class TokenLabels:
    nc_labels: list[int]
    punct_labels: list[int]
    loss_mask: list[bool]


def build_vocab(corpus: Sequence[Sequence[str]], merges: int) -> Vocab:
    """Learn up to `merges` greedy pair merges; ties go to the lexicographically smallest pair."""
    if not corpus or not any(corpus):
        raise ValueError("empty corpus")
    if merges < 0:
        raise ValueError("merges must be >= 0")
    counts = Counter(w.lower() for sent in corpus for w in sent)
    alphabet = sorted({ch for w in counts for ch in w})
    segmented = {w: list(w) for w in counts}
    learned: list[str] = []
    known = set(alphabet)
    for _ in range(merges):
        pairs: Counter = Counter()
        for w, segs in segmented.items():
            for a, b in zip(segs, segs[1:]):
                pairs[a, b] += counts[w]
        if not pairs:
            break
        best = max(pairs.values())
        a, b = min(p for p, c in pairs.items() if c == best)
        merged = a + b
        for w, segs in segmented.items():
            i = 0
            out = []
            while i < len(segs):
                if i + 1 < len(segs) and segs[i] == a and segs[i + 1] == b:
                    out.append(merged)
                    i += 2
                else:
                    out.append(segs[i])
                    i += 1
            segmented[w] = out
        if merged not in known:
            known.add(merged)
            learned.append(merged)
    return Vocab.from_pieces(SPECIALS + tuple(alphabet) + tuple(learned))


def split_word(word: str, vocab: Vocab) -> list[int]:
    """Greedy longest-match segmentation of one word into piece ids."""
    ids = []
    i = 0
    limit = vocab.max_piece_len
    while i < len(word):
        for j in range(min(len(word), i + limit), i, -1):
            pid = vocab.piece_to_id.get(word[i:j])
            if pid is not None and pid >= len(SPECIALS):
                ids.append(pid)
                i = j
                break
        else:
            ids.append(vocab.unk_id)
            i += 1
    return ids


def tokenize(words: Sequence[str], vocab: Vocab) -> SubwordSequence:
    token_ids, word_ids, is_first = [], [], []
    for w_idx, word in enumerate(words):
        if not word or any(ch.isspace() for ch in word):
            raise ValueError(f"invalid word {word!r}")
        ids = split_word(word.lower(), vocab)
        token_ids += ids
        word_ids += [w_idx] * len(ids)
        is_first += [True] + [False] * (len(ids) - 1)
    return SubwordSequence(token_ids, word_ids, is_first)


def project_labels(word_nc: Sequence[str], word_punct: Sequence[str],
                   seq: SubwordSequence) -> TokenLabels:
    """Put each word's tags on its first subword; later subwords get IGNORE."""
    if len(word_nc) != seq.num_words or len(word_punct) != seq.num_words:
        raise ValueError(
            f"label length mismatch: {len(word_nc)}/{len(word_punct)} tags for {seq.num_words} words")
    nc, punct = [], []
    for w, first in zip(seq.word_ids, seq.is_first):
        nc.append(NC_INDEX[word_nc[w]] if first else IGNORE)
        punct.append(PUNCT_INDEX[word_punct[w]] if first else IGNORE)
    return TokenLabels(nc, punct, list(seq.is_first))
