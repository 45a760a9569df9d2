"""Word-level chunk schedules compiled into token-level attention masks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tokenizer import SubwordSequence


@dataclass(frozen=True)
class ChunkSchedule:
    chunk_sizes: tuple[int, ...]
    right_contexts: tuple[int, ...]
    left_context: int | None = None  # None means unbounded

    def __post_init__(self):
        if len(self.chunk_sizes) != len(self.right_contexts):
            raise ValueError("one right context per chunk required")
        if any(c < 1 for c in self.chunk_sizes) or any(r < 0 for r in self.right_contexts):
            raise ValueError(f"invalid schedule {self.chunk_sizes} / {self.right_contexts}")
        if self.left_context is not None and self.left_context < 1:
            raise ValueError("left context must be >= 1 or unbounded")

    @property
    def num_words(self) -> int:
        return sum(self.chunk_sizes)

    def chunks(self) -> list[tuple[int, int, int]]:
        """(start, end_exclusive, right_context) per chunk."""
        out, start = [], 0
        for c, r in zip(self.chunk_sizes, self.right_contexts):
            out.append((start, start + c, r))
            start += c
        return out

    @classmethod
    def full(cls, num_words: int) -> "ChunkSchedule":
        return cls((num_words,), (0,), None)


def sample_schedule(num_words: int, chunk_range: tuple[int, int], rc_range: tuple[int, int],
                    left_context: int | None, rng: np.random.Generator) -> ChunkSchedule:
    """Draw chunk sizes and per-chunk right contexts uniformly; the last chunk is truncated."""
    if num_words < 1:
        raise ValueError("num_words must be >= 1")
    (c_lo, c_hi), (r_lo, r_hi) = chunk_range, rc_range
    if c_lo < 1 or c_hi < c_lo or r_lo < 0 or r_hi < r_lo:
        raise ValueError(f"bad ranges {chunk_range} {rc_range}")
    sizes, rcs, left = [], [], num_words
    while left > 0:
        c = int(rng.integers(c_lo, c_hi + 1))
        r = int(rng.integers(r_lo, r_hi + 1))
        sizes.append(min(c, left))
        rcs.append(r)
        left -= sizes[-1]
    return ChunkSchedule(tuple(sizes), tuple(rcs), left_context)


def word_visibility(schedule: ChunkSchedule) -> np.ndarray:
    """Boolean word x word matrix: row w may attend to column v."""
    n = schedule.num_words
    vis = np.zeros((n, n), dtype=bool)
    v = np.arange(n)
    l = schedule.left_context
    for start, end, r in schedule.chunks():
        hi = end + r  # exclusive bound on visible words
        for w in range(start, end):
            lo = 0 if l is None else w - l + 1
            vis[w] = (v >= lo) & (v < hi)
    return vis


def lift(word_mask: np.ndarray, word_ids: Sequence[int]) -> np.ndarray:
    idx = np.asarray(word_ids, dtype=np.intp)
    return word_mask[np.ix_(idx, idx)]


def build_composite_mask(schedule: ChunkSchedule, seq: SubwordSequence) -> np.ndarray:
    """Token x token visibility for training under a chunk schedule."""
    if schedule.num_words != seq.num_words:
        raise ValueError(f"schedule covers {schedule.num_words} words, sequence has {seq.num_words}")
    return lift(word_visibility(schedule), seq.word_ids)


def build_window_mask(cache_words: int, chunk_words: int, rc_words: int,
                      word_ids: Sequence[int] | None = None) -> np.ndarray:
    """All-true mask over a [cache | chunk | right context] inference window."""
    if min(cache_words, chunk_words, rc_words) < 0 or chunk_words < 1:
        raise ValueError("window counts must be >= 0 with at least one chunk word")
    n = cache_words + chunk_words + rc_words
    word_mask = np.ones((n, n), dtype=bool)
    if word_ids is None:
        return word_mask
    if len(word_ids) and word_ids[-1] + 1 != n:
        raise ValueError("word ids do not cover the window")
    return lift(word_mask, word_ids)
