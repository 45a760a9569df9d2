"""Incremental ITN over raw text fragments.

Each complete word is tagged once, from the window of its `left_context - 1`
predecessors, itself, and its `right_context` successors. Because that window
depends only on the word stream, the committed text is independent of how the
stream was fragmented.
"""

from __future__ import annotations

import re
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .inference import Tagger, Window
from .tags import MARKS, SENTENCE_END, continues, spans
from .wfst import FST_CATEGORIES, transduce


_LAST_TOKEN = re.compile(r"\S+\s*$")


def render(words: Sequence[str], nc_tags: Sequence[str], punct_tags: Sequence[str],
           capitalize_first: bool = True) -> str:
    """Written form of a word run whose spans are all complete."""
    pieces = []
    cap = capitalize_first
    covered = {}
    for start, end, cls in spans(list(nc_tags)):
        covered[start] = (end, cls)
    i = 0
    while i < len(words):
        if i in covered:
            end, cls = covered[i]
            span = list(words[i:end])
            if cls in FST_CATEGORIES:
                text = transduce(span, cls).text
            else:
                text = " ".join(w[:1].upper() + w[1:] for w in span)
        else:
            end, text = i + 1, words[i]
        tag = punct_tags[end - 1]
        if cap:
            text = text[:1].upper() + text[1:]
        pieces.append(text + MARKS.get(tag, ""))
        cap = tag in SENTENCE_END
        i = end
    return " ".join(pieces)


def postprocess(words: Sequence[str], nc_tags: Sequence[str], punct_tags: Sequence[str]) -> str:
    """Transduce tagged spans, title-case Case spans, insert marks, capitalize sentence starts."""
    if not len(words) == len(nc_tags) == len(punct_tags):
        raise ValueError("words and tags must be aligned")
    return render(words, nc_tags, punct_tags, capitalize_first=True)


@dataclass(frozen=True)
class StreamConfig:
    left_context: int = 16
    right_context: int = 1
    max_provisional: int = 32

    def __post_init__(self):
        if self.left_context < 1:
            raise ValueError("left_context must be >= 1")
        if self.right_context < 0:
            raise ValueError("right_context must be >= 0")
        if self.max_provisional < 0:
            raise ValueError("max_provisional must be >= 0")


@dataclass
class ChunkResult:
    finalized: str = ""
    provisional: str = ""
    words_processed: int = 0
    words_deferred: int = 0
    # (word, nc tag, punct tag) for every word whose tags were fixed in this step
    tagged: list[tuple[str, str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"finalized": self.finalized, "provisional": self.provisional}


class StreamSession:
    """State for one stream; calls must be serialized by the owner."""

    def __init__(self, tagger: Tagger, config: StreamConfig | None = None):
        self.tagger = tagger
        self.config = config or StreamConfig()
        self.reset()

    def reset(self) -> None:
        self.carry = ""
        self.left: deque[str] = deque(maxlen=self.config.left_context - 1)
        self.pending: list[str] = []
        # words with fixed tags whose span may still continue
        self.uncommitted: list[tuple[str, str, str]] = []
        self.last_tag: str | None = None
        self.capitalize_next = True
        self.finalized = ""

    @property
    def is_empty(self) -> bool:
        return not (self.carry or self.pending or self.uncommitted or self.finalized)

    def cached_words(self) -> int:
        return len(self.left) + len(self.pending) + len(self.uncommitted)

    # -- step phases, split so several sessions can share one forward pass

    def _ingest(self, fragment: str, final: bool = False) -> None:
        buf = self.carry + fragment
        last = None if final else _LAST_TOKEN.search(buf)
        cut = last.start() if last else len(buf)
        self.pending += [w.lower() for w in buf[:cut].split()]
        self.carry = buf[cut:]

    def _ready(self, final: bool) -> int:
        """Number of leading pending words whose right context is complete."""
        if final:
            return len(self.pending)
        return max(0, len(self.pending) - self.config.right_context)

    def _context(self, left: list[str]) -> list[str]:
        keep = self.config.left_context - 1
        return left[max(0, len(left) - keep):] if keep else []

    def _windows(self, final: bool) -> tuple[list[Window], Window | None]:
        r = self.config.right_context
        left = list(self.left)
        windows = []
        for k in range(self._ready(final)):
            ctx = self._context(left)
            words = ctx + self.pending[k:k + 1 + r]
            windows.append(Window(tuple(words), (len(ctx),)))
            left.append(self.pending[k])
        provisional = None
        if not final:
            tail = self.pending[self._ready(False):]
            if self.carry.strip():
                tail = tail + [self.carry.strip().lower()]
            tail = tail[:self.config.max_provisional]
            if tail:
                ctx = self._context(left)
                provisional = Window(tuple(ctx + tail), tuple(range(len(ctx), len(ctx) + len(tail))))
        return windows, provisional

    def _commit(self, upto: int) -> str:
        words = self.uncommitted[:upto]
        del self.uncommitted[:upto]
        if not words:
            return ""
        text = render([w for w, _, _ in words], [n for _, n, _ in words], [p for _, _, p in words],
                      capitalize_first=self.capitalize_next)
        self.capitalize_next = words[-1][2] in SENTENCE_END
        if self.finalized:
            text = " " + text
        self.finalized += text
        return text

    def _complete(self, tags: list[list[tuple[str, str]]], prov_tags: list[tuple[str, str]] | None,
                  final: bool) -> ChunkResult:
        ready = len(tags)
        newly = []
        for word, [(nc, punct)] in zip(self.pending[:ready], tags):
            if nc.startswith("I-") and not continues(self.last_tag, nc):
                nc = "B-" + nc[2:]
            self.last_tag = nc
            newly.append((word, nc, punct))
            self.left.append(word)
        del self.pending[:ready]
        self.uncommitted += newly
        if final or (self.uncommitted and self.uncommitted[-1][1] == "O"):
            upto = len(self.uncommitted)
        else:
            # commit up to the last span start so no span is cut in half
            upto = 0
            for k in range(len(self.uncommitted) - 1, 0, -1):
                if not continues(self.uncommitted[k - 1][1], self.uncommitted[k][1]):
                    upto = k
                    break
        delta = self._commit(upto)
        provisional = ""
        if prov_tags is not None or self.uncommitted:
            tail_words = self.pending + ([self.carry.strip().lower()] if self.carry.strip() else [])
            tail_words = tail_words[:len(prov_tags or [])]
            rows = self.uncommitted + [(w, n, p) for w, (n, p) in zip(tail_words, prov_tags or [])]
            if rows:
                provisional = render([w for w, _, _ in rows], [n for _, n, _ in rows],
                                     [p for _, _, p in rows], capitalize_first=self.capitalize_next)
        result = ChunkResult(delta, provisional, ready,
                             len(self.pending) + (1 if self.carry.strip() else 0), newly)
        if final:
            self.reset()
        return result

    # -- public API

    def push(self, fragment: str) -> ChunkResult:
        return push_batch([self], [fragment])[0]

    def flush(self) -> ChunkResult:
        return flush_batch([self])[0]


def open_session(tagger: Tagger, config: StreamConfig | None = None) -> StreamSession:
    return StreamSession(tagger, config)


def _step(sessions: Sequence[StreamSession], final: bool) -> list[ChunkResult]:
    plans = [s._windows(final) for s in sessions]
    requests: list[Window] = []
    for wins, prov in plans:
        requests += wins
        if prov is not None:
            requests.append(prov)
    tagged = sessions[0].tagger.tag(requests) if requests else []
    results, k = [], 0
    for s, (wins, prov) in zip(sessions, plans):
        tags = tagged[k:k + len(wins)]
        k += len(wins)
        prov_tags = None
        if prov is not None:
            prov_tags = tagged[k]
            k += 1
        results.append(s._complete(tags, prov_tags, final))
    return results


def push_batch(sessions: Sequence[StreamSession], fragments: Sequence[str]) -> list[ChunkResult]:
    """Push one fragment into each session, sharing a single batched forward pass."""
    if len(sessions) != len(fragments):
        raise ValueError("one fragment per session required")
    if len({id(s.tagger) for s in sessions}) > 1:
        raise ValueError("batched sessions must share a tagger")
    active = [(s, f) for s, f in zip(sessions, fragments) if f]
    for s, f in active:
        s._ingest(f)
    stepped = iter(_step([s for s, _ in active], final=False)) if active else iter(())
    return [next(stepped) if f else ChunkResult() for f in fragments]


def flush_batch(sessions: Sequence[StreamSession]) -> list[ChunkResult]:
    for s in sessions:
        s._ingest("", final=True)
    return _step(sessions, final=True)


def run_batch_mode(tagger: Tagger, text: str, config: StreamConfig | None = None) -> str:
    """Single push followed by flush: the reference output for a whole utterance."""
    s = StreamSession(tagger, config)
    out = s.push(text).finalized
    return out + s.flush().finalized
