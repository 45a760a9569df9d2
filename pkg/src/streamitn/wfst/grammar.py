"""ITN grammars for Number, Date and Phone spans, compiled from the shared tables."""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import NamedTuple, Sequence

from .. import verbalize as vb
from .fst import Fst, NoParse, SymbolTable, closure, compose, concat, cross, linear_acceptor, \
    optional, rm_epsilon, shortest_path, union

log = logging.getLogger(__name__)

FST_CATEGORIES = ("NUMBER", "DATE", "PHONE")
# Cost per space-separated number in a Number span; fewer segments win.
SEGMENT_COST = 1.0

_SYMBOLS = SymbolTable()


def symbols() -> SymbolTable:
    return _SYMBOLS


def _w(word: str, out: str = "") -> Fst:
    """Read one spoken word, write `out` one character per arc."""
    return cross([word], list(out), _SYMBOLS)


def _ins(out: str, weight: float = 0.0) -> Fst:
    return cross([], list(out), _SYMBOLS, weight)


def _digit_words(nonzero: bool = False) -> Fst:
    return union(*(_w(vb.ONES[d], str(d)) for d in range(1 if nonzero else 0, 10)))


def _number_parts() -> dict[str, Fst]:
    unit = _digit_words(nonzero=True)
    teen = union(*(_w(word, str(10 + i)) for i, word in enumerate(vb.TEENS)))
    tens = union(*(concat(_w(word, str(t)), union(_digit_words(nonzero=True), _ins("0")))
                   for t, word in vb.TENS.items()))
    below_100 = union(unit, teen, tens)                       # 1..99, no padding
    pad_100 = union(concat(_ins("0"), unit), teen, tens)      # 01..99, two digits
    hundreds = concat(_digit_words(nonzero=True), _w(vb.HUNDRED), union(pad_100, _ins("00")))
    below_1000 = union(hundreds, below_100)                   # 1..999
    pad_1000 = union(hundreds, concat(_ins("0"), pad_100))    # 001..999, three digits
    thousands = concat(below_1000, _w(vb.THOUSAND), union(pad_1000, _ins("000")))
    cardinal = union(_w(vb.ONES[0], "0"), below_1000, thousands)
    year = concat(_digit_words(nonzero=True), _w(vb.THOUSAND), union(pad_1000, _ins("000")))
    return {"cardinal": cardinal, "year": year}


def _number() -> Fst:
    cardinal = _number_parts()["cardinal"]
    digits = concat(_digit_words(), closure(_digit_words()))
    decimal = concat(cardinal, _w(vb.POINT, "."), digits)
    segment = concat(_ins("", SEGMENT_COST), union(cardinal, decimal),
                     optional(_w(vb.MILLION, " " + vb.MILLION)))
    return concat(segment, closure(concat(_ins(" "), segment)))


def _date() -> Fst:
    month = union(*(_w(m, m.capitalize()) for m in vb.MONTHS))
    singles = [_w(word, str(d)) for table in (vb.ORDINAL_ONES, vb.ORDINAL_TEENS, vb.ORDINAL_TENS)
               for d, word in table.items()]
    ord_unit = union(*(_w(word, str(d)) for d, word in vb.ORDINAL_ONES.items()))
    day = union(*singles, concat(_w(vb.TENS[2], "2"), ord_unit),
                concat(_w(vb.TENS[3], "3"), _w(vb.ORDINAL_ONES[1], "1")))
    year = _number_parts()["year"]
    return concat(month, _ins(" "), day, optional(concat(_ins(", "), year)))


def _phone() -> Fst:
    digit = _digit_words()
    return concat(*([digit] * 9), optional(digit), optional(digit))


@lru_cache(maxsize=None)
def build_grammar(category: str) -> Fst:
    """Spoken word sequence -> written characters for one span category."""
    builders = {"NUMBER": _number, "DATE": _date, "PHONE": _phone}
    if category not in builders:
        raise ValueError(f"no grammar for category {category!r}")
    return rm_epsilon(builders[category]())


class Transduction(NamedTuple):
    text: str
    parsed: bool


def transduce(span: Sequence[str], category: str) -> Transduction:
    """Written form of a tagged span; unparseable spans come back verbatim with parsed=False."""
    grammar = build_grammar(category)
    ids = [_SYMBOLS.find(w) for w in span]
    if span and None not in ids:
        try:
            out, _ = shortest_path(compose(linear_acceptor(ids, _SYMBOLS), grammar))
            return Transduction("".join(out), True)
        except NoParse:
            pass
    log.debug("no %s parse for %r", category, " ".join(span))
    return Transduction(" ".join(span), False)
