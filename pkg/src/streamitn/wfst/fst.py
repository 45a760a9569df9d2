"""Weighted finite-state transducers over the tropical semiring.

Weights combine with + along a path and with min across paths. Label 0 is
epsilon in every symbol table.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

EPS = 0
EPS_SYMBOL = "<eps>"
FST_HEADER = "#streamitn-fst v1"
_TOL = 1e-9


class NoParse(ValueError):
    pass


class SymbolTable:
    def __init__(self, symbols: Iterable[str] = ()):
        self._strings = [EPS_SYMBOL]
        self._ids = {EPS_SYMBOL: EPS}
        for s in symbols:
            self.add(s)

    def add(self, symbol: str) -> int:
        if symbol not in self._ids:
            self._ids[symbol] = len(self._strings)
            self._strings.append(symbol)
        return self._ids[symbol]

    def find(self, symbol: str) -> int | None:
        return self._ids.get(symbol)

    def string(self, label: int) -> str:
        return self._strings[label]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    def __len__(self) -> int:
        return len(self._strings)


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    nextstate: int


@dataclass
class Fst:
    symbols: SymbolTable
    arcs: list[list[Arc]] = field(default_factory=list)
    finals: dict[int, float] = field(default_factory=dict)
    start: int = 0

    def add_state(self) -> int:
        self.arcs.append([])
        return len(self.arcs) - 1

    def add_arc(self, src: int, ilabel: int, olabel: int, weight: float, dst: int) -> None:
        if not (0 <= src < len(self.arcs) and 0 <= dst < len(self.arcs)):
            raise ValueError(f"arc {src}->{dst} references a missing state")
        if not math.isfinite(weight):
            raise ValueError("arc weights must be finite")
        self.arcs[src].append(Arc(ilabel, olabel, float(weight), dst))

    def set_final(self, state: int, weight: float = 0.0) -> None:
        self.finals[state] = float(weight)

    @property
    def num_states(self) -> int:
        return len(self.arcs)

    def num_arcs(self) -> int:
        return sum(len(a) for a in self.arcs)

    def input_index(self) -> list[dict[int, list[Arc]]]:
        """Per-state arcs grouped by input label; cached until the arc count changes."""
        key = (self.num_states, self.num_arcs())
        cached = getattr(self, "_index", None)
        if cached is None or cached[0] != key:
            index = []
            for arcs in self.arcs:
                d: dict[int, list[Arc]] = defaultdict(list)
                for arc in arcs:
                    d[arc.ilabel].append(arc)
                index.append(d)
            self._index = cached = (key, index)
        return cached[1]

    def _embed(self, other: "Fst") -> int:
        """Copy `other`'s states into self; return the state offset."""
        offset = self.num_states
        for arcs in other.arcs:
            self.arcs.append([Arc(a.ilabel, a.olabel, a.weight, a.nextstate + offset) for a in arcs])
        return offset

    def dump(self, path: str | Path | None = None) -> str:
        """One arc per line (src, dst, in, out, weight), then a finals section."""
        lines = [FST_HEADER, f"start\t{self.start}", f"states\t{self.num_states}", "arcs"]
        for s, arcs in enumerate(self.arcs):
            for a in arcs:
                lines.append(f"{s}\t{a.nextstate}\t{self.symbols.string(a.ilabel)}\t"
                             f"{self.symbols.string(a.olabel)}\t{a.weight!r}")
        lines.append("finals")
        lines += [f"{s}\t{w!r}" for s, w in sorted(self.finals.items())]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def load(cls, source: str | Path, symbols: SymbolTable | None = None) -> "Fst":
        text = source if isinstance(source, str) and source.startswith(FST_HEADER) \
            else Path(source).read_text(encoding="utf-8")
        lines = text.split("\n")
        if lines[0] != FST_HEADER:
            raise ValueError("not an fst dump")
        f = cls(symbols or SymbolTable())
        start = int(lines[1].split("\t")[1])
        for _ in range(int(lines[2].split("\t")[1])):
            f.add_state()
        f.start = start
        section = None
        for line in lines[3:]:
            if line in ("arcs", "finals"):
                section = line
                continue
            if not line:
                continue
            parts = line.split("\t")
            if section == "arcs":
                src, dst, i, o, w = parts
                f.add_arc(int(src), f.symbols.add(i), f.symbols.add(o), float(w), int(dst))
            else:
                f.set_final(int(parts[0]), float(parts[1]))
        return f


def _check_shared(*fsts: Fst) -> SymbolTable:
    table = fsts[0].symbols
    if any(f.symbols is not table for f in fsts[1:]):
        raise ValueError("alphabet mismatch: operands use different symbol tables")
    return table


def linear_acceptor(tokens: Sequence[int], symbols: SymbolTable) -> Fst:
    f = Fst(symbols)
    prev = f.add_state()
    for t in tokens:
        nxt = f.add_state()
        f.add_arc(prev, t, t, 0.0, nxt)
        prev = nxt
    f.set_final(prev)
    return f


def cross(inputs: Sequence[str], outputs: Sequence[str], symbols: SymbolTable,
          weight: float = 0.0) -> Fst:
    """A single path reading `inputs` and writing `outputs`, padded with epsilons."""
    f = Fst(symbols)
    prev = f.add_state()
    n = max(len(inputs), len(outputs))
    if n == 0:
        f.set_final(prev, weight)
        return f
    for k in range(n):
        i = symbols.add(inputs[k]) if k < len(inputs) else EPS
        o = symbols.add(outputs[k]) if k < len(outputs) else EPS
        nxt = f.add_state()
        f.add_arc(prev, i, o, weight if k == 0 else 0.0, nxt)
        prev = nxt
    f.set_final(prev)
    return f


def union(*fsts: Fst) -> Fst:
    table = _check_shared(*fsts)
    out = Fst(table)
    start = out.add_state()
    for f in fsts:
        off = out._embed(f)
        out.add_arc(start, EPS, EPS, 0.0, f.start + off)
        for s, w in f.finals.items():
            out.set_final(s + off, w)
    return out


def concat(*fsts: Fst) -> Fst:
    table = _check_shared(*fsts)
    out = Fst(table)
    offsets = [out._embed(f) for f in fsts]
    out.start = fsts[0].start + offsets[0]
    for f, off, nxt, noff in zip(fsts, offsets, fsts[1:], offsets[1:]):
        for s, w in f.finals.items():
            out.add_arc(s + off, EPS, EPS, w, nxt.start + noff)
    last, loff = fsts[-1], offsets[-1]
    for s, w in last.finals.items():
        out.set_final(s + loff, w)
    return out


def closure(f: Fst) -> Fst:
    """Kleene star: zero or more repetitions."""
    out = Fst(f.symbols)
    start = out.add_state()
    off = out._embed(f)
    out.start = start
    out.set_final(start)
    out.add_arc(start, EPS, EPS, 0.0, f.start + off)
    for s, w in f.finals.items():
        out.add_arc(s + off, EPS, EPS, w, start)
    return out


def optional(f: Fst) -> Fst:
    return union(f, cross([], [], f.symbols))


def compose(a: Fst, b: Fst) -> Fst:
    """Relation composition using the three-state epsilon-sequencing filter.

    Filter state 0: free; 1: only `a` may take output-epsilon moves; 2: only `b`
    may take input-epsilon moves. Each epsilon alignment is produced once.
    """
    table = _check_shared(a, b)
    by_input = b.input_index()

    out = Fst(table)
    index: dict[tuple[int, int, int], int] = {}
    queue: list[tuple[int, int, int]] = []

    def state(key):
        if key not in index:
            index[key] = out.add_state()
            queue.append(key)
        return index[key]

    out.start = state((a.start, b.start, 0))
    while queue:
        key = queue.pop()
        q1, q2, filt = key
        src = index[key]
        if q1 in a.finals and q2 in b.finals:
            out.set_final(src, a.finals[q1] + b.finals[q2])
        b_arcs = by_input[q2]
        for arc1 in a.arcs[q1]:
            if arc1.olabel == EPS:
                if filt in (0, 1):
                    out.add_arc(src, arc1.ilabel, EPS, arc1.weight, state((arc1.nextstate, q2, 1)))
                if filt == 0:
                    for arc2 in b_arcs.get(EPS, ()):
                        out.add_arc(src, arc1.ilabel, arc2.olabel, arc1.weight + arc2.weight,
                                    state((arc1.nextstate, arc2.nextstate, 0)))
            else:
                for arc2 in b_arcs.get(arc1.olabel, ()):
                    out.add_arc(src, arc1.ilabel, arc2.olabel, arc1.weight + arc2.weight,
                                state((arc1.nextstate, arc2.nextstate, 0)))
        if filt in (0, 2):
            for arc2 in b_arcs.get(EPS, ()):
                out.add_arc(src, EPS, arc2.olabel, arc2.weight, state((q1, arc2.nextstate, 2)))
    return out


def distance_to_final(f: Fst) -> list[float]:
    """Tropical shortest distance from every state to a final state (Dijkstra on reversed arcs)."""
    reverse: list[list[tuple[int, float]]] = [[] for _ in range(f.num_states)]
    for s, arcs in enumerate(f.arcs):
        for arc in arcs:
            if arc.weight < 0:
                raise ValueError("negative arc weights are not supported")
            reverse[arc.nextstate].append((s, arc.weight))
    dist = [math.inf] * f.num_states
    heap = []
    for s, w in f.finals.items():
        if w < 0:
            raise ValueError("negative final weights are not supported")
        if w < dist[s]:
            dist[s] = w
            heapq.heappush(heap, (w, s))
    while heap:
        d, s = heapq.heappop(heap)
        if d > dist[s]:
            continue
        for prev, w in reverse[s]:
            nd = d + w
            if nd < dist[prev]:
                dist[prev] = nd
                heapq.heappush(heap, (nd, prev))
    return dist


def shortest_path(f: Fst) -> tuple[list[str], float]:
    """Minimum-weight accepting path; ties go to the lexicographically smallest output.

    Returns the output symbol strings (epsilons dropped) and the path weight.
    """
    dist = distance_to_final(f)
    if not f.arcs or math.isinf(dist[f.start]):
        raise NoParse("no parse")

    def tight(s: int, arc: Arc) -> bool:
        return abs(dist[s] - (arc.weight + dist[arc.nextstate])) <= _TOL

    def eps_closure(states: set[int]) -> set[int]:
        stack, seen = list(states), set(states)
        while stack:
            s = stack.pop()
            for arc in f.arcs[s]:
                if arc.olabel == EPS and arc.nextstate not in seen and tight(s, arc):
                    seen.add(arc.nextstate)
                    stack.append(arc.nextstate)
        return seen

    frontier = eps_closure({f.start})
    output: list[str] = []
    for _ in range(f.num_states * max(1, f.num_arcs()) + 1):
        if any(s in f.finals and abs(dist[s] - f.finals[s]) <= _TOL for s in frontier):
            return output, dist[f.start]
        best: str | None = None
        targets: set[int] = set()
        for s in frontier:
            for arc in f.arcs[s]:
                if arc.olabel == EPS or not tight(s, arc):
                    continue
                sym = f.symbols.string(arc.olabel)
                if best is None or sym < best:
                    best, targets = sym, {arc.nextstate}
                elif sym == best:
                    targets.add(arc.nextstate)
        if best is None:
            raise NoParse("no parse")
        output.append(best)
        frontier = eps_closure(targets)
    raise NoParse("no lexicographically minimal path (output cycle)")


def paths(f: Fst, max_arcs: int = 10) -> list[tuple[list[int], list[int], float]]:
    """Enumerate accepting paths of at most `max_arcs` arcs: (inputs, outputs, weight).

    Exhaustive and exponential; meant for checking small machines.
    """
    found = []

    def walk(s, ins, outs, w, depth):
        if s in f.finals:
            found.append(([i for i in ins if i != EPS], [o for o in outs if o != EPS], w + f.finals[s]))
        if depth == max_arcs:
            return
        for arc in f.arcs[s]:
            walk(arc.nextstate, ins + [arc.ilabel], outs + [arc.olabel], w + arc.weight, depth + 1)

    if f.arcs:
        walk(f.start, [], [], 0.0, 0)
    return found


def connect(f: Fst) -> Fst:
    """Drop states that are not both reachable from the start and able to reach a final."""
    if not f.arcs:
        return f
    seen = {f.start}
    stack = [f.start]
    while stack:
        s = stack.pop()
        for arc in f.arcs[s]:
            if arc.nextstate not in seen:
                seen.add(arc.nextstate)
                stack.append(arc.nextstate)
    dist = distance_to_final(f)
    keep = sorted(s for s in seen if not math.isinf(dist[s]))
    out = Fst(f.symbols)
    if f.start not in keep:
        out.add_state()
        return out
    remap = {s: out.add_state() for s in keep}
    out.start = remap[f.start]
    for s in keep:
        for arc in f.arcs[s]:
            if arc.nextstate in remap:
                out.add_arc(remap[s], arc.ilabel, arc.olabel, arc.weight, remap[arc.nextstate])
        if s in f.finals:
            out.set_final(remap[s], f.finals[s])
    return out


def rm_epsilon(f: Fst) -> Fst:
    """Remove epsilon:epsilon arcs, folding their weights into the following arcs."""
    out = Fst(f.symbols)
    for _ in range(f.num_states):
        out.add_state()
    out.start = f.start
    for s in range(f.num_states):
        dist = {s: 0.0}
        heap = [(0.0, s)]
        while heap:
            d, q = heapq.heappop(heap)
            if d > dist[q]:
                continue
            for arc in f.arcs[q]:
                if arc.ilabel == EPS and arc.olabel == EPS:
                    nd = d + arc.weight
                    if nd < dist.get(arc.nextstate, math.inf):
                        dist[arc.nextstate] = nd
                        heapq.heappush(heap, (nd, arc.nextstate))
        best: dict[tuple[int, int, int], float] = {}
        for q, d in dist.items():
            for arc in f.arcs[q]:
                if arc.ilabel == EPS and arc.olabel == EPS:
                    continue
                key = (arc.ilabel, arc.olabel, arc.nextstate)
                best[key] = min(best.get(key, math.inf), d + arc.weight)
            if q in f.finals:
                out.finals[s] = min(out.finals.get(s, math.inf), d + f.finals[q])
        for (i, o, t), w in sorted(best.items()):
            out.add_arc(s, i, o, w, t)
    return connect(out)
