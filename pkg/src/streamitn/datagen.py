"""Synthetic spoken-form corpus with gold number-case/punctuation tags and written references.

Written references are rendered here directly from the sampled entity values
(not through the WFST grammars), so comparing them with grammar output is a
real cross-check.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import verbalize as vb
from .tags import MARKS

NAMES = ["peter", "mary", "john", "anna", "david", "linda", "mark", "may", "will", "june",
         "grace", "rose", "bill", "tom", "lucy", "nam", "minh", "lan"]
SURNAMES = ["parker", "nguyen", "smith", "tran", "brown", "miller"]
PLACES = [["vincom", "ocean", "park"], ["central", "park"], ["green", "lake"], ["river", "mall"],
          ["ocean", "park"], ["hanoi"], ["saigon", "tower"], ["city", "hall"]]

# Templates: plain word strings with slots; "," marks a comma after the preceding word.
TEMPLATES: dict[str, dict[str, list[str]]] = {
    "PERIOD": {
        "NUMBER": ["i paid {NUMBER} dollars for the tickets", "the price is {NUMBER}",
                   "we sold {NUMBER} units last week", "the report has {NUMBER} pages",
                   "the city has {MILLIONS} people", "he ran {NUMBER} miles today",
                   "the total is {NUMBER} dollars"],
        "PHONE": ["my number is {PHONE}", "you can reach me at {PHONE}",
                  "call the office at {PHONE}", "her phone is {PHONE}"],
        "DATE": ["the meeting is on {DATE}", "she was born on {DATE}",
                 "the shop opens on {DATE}", "we move out on {DATE}"],
        "CASE": ["{NAME} said it was fine", "tell {NAME} to call me", "we met {NAME} at {PLACE}",
                 "i will visit {PLACE} with {NAME}", "{NAME} lives near {PLACE}",
                 "the bus stops at {PLACE}"],
        None: ["one of them is broken", "mark the date in the calendar", "the weather is nice today",
               "i like this place", "we will see", "the rain stopped", "may be it is late",
               "it will rain in june", "i need one more day", "the roses are red"],
    },
    "QUESTION": {
        "NUMBER": ["did you pay {NUMBER} dollars", "is the price {NUMBER}",
                   "can you send {NUMBER} units"],
        "PHONE": ["can you call {PHONE}", "is your number {PHONE}"],
        "DATE": ["is the meeting on {DATE}", "are you free on {DATE}"],
        "CASE": ["are you ok , {NAME}", "do you know {NAME}", "will you visit {PLACE}",
                 "is {NAME} coming"],
        None: ["are you ok", "may i help you", "will it rain", "can you hear me",
               "what time is it", "is one enough"],
    },
    "EXCLAMATION": {
        "NUMBER": ["wow that is {NUMBER} dollars", "we won {NUMBER} games"],
        "PHONE": ["call me now at {PHONE}"],
        "DATE": ["see you on {DATE}"],
        "CASE": ["happy birthday , {NAME}", "welcome to {PLACE}", "thank you , {NAME}"],
        None: ["what a great day", "thank you so much", "that is amazing", "well done"],
    },
}
CONJUNCTIONS = ["but", "so", "and", "because"]


@dataclass(frozen=True)
class GenConfig:
    sentences: int = 1000
    seed: int = 0
    category_mix: dict = field(default_factory=lambda: {
        "NUMBER": 0.25, "DATE": 0.15, "PHONE": 0.15, "CASE": 0.25})
    type_mix: dict = field(default_factory=lambda: {"QUESTION": 0.25, "EXCLAMATION": 0.15})
    clauses_per_utterance: tuple[int, int] = (1, 3)
    join_prob: float = 0.35
    max_entities: int = 3

    def __post_init__(self):
        for mix in (self.category_mix, self.type_mix):
            if any(not 0 <= p <= 1 for p in mix.values()) or sum(mix.values()) > 1 + 1e-9:
                raise ValueError("mix probabilities must lie in [0, 1] and sum to <= 1")
        if not 0 <= self.join_prob <= 1:
            raise ValueError("join_prob must be in [0, 1]")


@dataclass(frozen=True)
class Example:
    spoken: list[str]
    nc_tags: list[str]
    punct_tags: list[str]
    written: str
    itn_flags: list[bool]

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, line: str) -> "Example":
        return cls(**json.loads(line))


class _Builder:
    """Accumulates aligned spoken words, tags, and written tokens for one utterance."""

    def __init__(self):
        self.spoken: list[str] = []
        self.nc: list[str] = []
        self.punct: list[str] = []
        # written tokens: (text, is_itn, index of the last spoken word it covers)
        self.written: list[list] = []
        self.sentence_starts: list[int] = []

    def plain(self, word: str):
        self.spoken.append(word)
        self.nc.append("O")
        self.punct.append("O")
        self.written.append([word, False, len(self.spoken) - 1])

    def entity(self, words: list[str], text: str, category: str):
        for i, w in enumerate(words):
            self.spoken.append(w)
            self.nc.append(("B-" if i == 0 else "I-") + category)
            self.punct.append("O")
        self.written.append([text, True, len(self.spoken) - 1])

    def mark(self, tag: str):
        self.punct[-1] = tag
        self.written[-1][0] += MARKS[tag]

    def render(self) -> tuple[str, list[bool]]:
        words, flags = [], []
        for k, (text, itn, _) in enumerate(self.written):
            if k in self.sentence_starts:
                text = text[:1].upper() + text[1:]
            parts = text.split(" ")
            words += parts
            flags += [itn] * len(parts)
        return " ".join(words), flags


def _choice(rng, items):
    return items[int(rng.integers(len(items)))]


def _pick(rng, mix: dict):
    r = rng.random()
    acc = 0.0
    for key, p in mix.items():
        acc += p
        if r < acc:
            return key
    return None


def _sample_number(rng) -> tuple[list[str], str]:
    kind = rng.random()
    if kind < 0.35:
        n = int(rng.integers(0, 100))
    elif kind < 0.6:
        n = int(rng.integers(100, 10_000))
    elif kind < 0.75:
        n = int(rng.integers(10_000, vb.MAX_CARDINAL + 1))
    else:
        n = int(rng.integers(0, 1000))
        frac = "".join(str(int(d)) for d in rng.integers(0, 10, size=int(rng.integers(1, 3))))
        return vb.decimal(n, frac), f"{n}.{frac}"
    return vb.cardinal(n), str(n)


def _sample_millions(rng) -> tuple[list[str], str]:
    if rng.random() < 0.5:
        n = int(rng.integers(1, 1000))
        return vb.cardinal(n) + [vb.MILLION], f"{n} {vb.MILLION}"
    n = int(rng.integers(1, 100))
    frac = str(int(rng.integers(1, 10)))
    return vb.decimal(n, frac) + [vb.MILLION], f"{n}.{frac} {vb.MILLION}"


def _sample_date(rng) -> tuple[list[str], str]:
    month = int(rng.integers(1, 13))
    day = int(rng.integers(1, vb.MONTH_DAYS[month - 1] + 1))
    year = int(rng.integers(1950, 2031)) if rng.random() < 0.7 else None
    return vb.date(month, day, year), vb.written_date(month, day, year)


def _sample_phone(rng) -> tuple[list[str], str]:
    digits = "0" + "".join(str(int(d)) for d in rng.integers(0, 10, size=int(rng.integers(8, 11))))
    return vb.phone(digits), digits


def _sample_name(rng) -> list[str]:
    words = [_choice(rng, NAMES)]
    if rng.random() < 0.3:
        words.append(_choice(rng, SURNAMES))
    return words


def _fill(builder: _Builder, template: str, rng) -> int:
    """Append one clause; return the number of entity spans it added."""
    entities = 0
    for token in template.split():
        if token == ",":
            builder.mark("COMMA")
        elif token.startswith("{"):
            slot = token[1:-1]
            entities += 1
            if slot == "NUMBER":
                builder.entity(*_sample_number(rng), category="NUMBER")
            elif slot == "MILLIONS":
                builder.entity(*_sample_millions(rng), category="NUMBER")
            elif slot == "DATE":
                builder.entity(*_sample_date(rng), category="DATE")
            elif slot == "PHONE":
                builder.entity(*_sample_phone(rng), category="PHONE")
            else:
                words = _sample_name(rng) if slot == "NAME" else list(_choice(rng, PLACES))
                builder.entity(words, " ".join(w.capitalize() for w in words), "CASE")
        else:
            builder.plain(token)
    return entities


def generate_one(config: GenConfig, rng: np.random.Generator) -> Example:
    b = _Builder()
    lo, hi = config.clauses_per_utterance
    clauses = int(rng.integers(lo, hi + 1))
    entities = 0
    k = 0
    while k < clauses:
        kind = _pick(rng, config.type_mix) or "PERIOD"
        bank = TEMPLATES[kind]
        b.sentence_starts.append(len(b.written))
        while True:
            category = _pick(rng, config.category_mix)
            fitting = [t for t in bank.get(category, ()) if entities + t.count("{") <= config.max_entities]
            entities += _fill(b, _choice(rng, fitting or bank[None]), rng)
            k += 1
            if kind != "PERIOD" or k >= clauses or rng.random() >= config.join_prob:
                break
            b.mark("COMMA")
            b.plain(_choice(rng, CONJUNCTIONS))
        b.mark(kind)
    written, flags = b.render()
    return Example(b.spoken, b.nc, b.punct, written, flags)


def generate(config: GenConfig) -> list[Example]:
    """`config.sentences` distinct utterances, deterministic in the seed."""
    rng = np.random.default_rng(config.seed)
    seen: set[str] = set()
    out = []
    attempts = 0
    while len(out) < config.sentences:
        ex = generate_one(config, rng)
        attempts += 1
        if attempts > 50 * config.sentences + 1000:
            raise RuntimeError("could not generate enough distinct utterances")
        key = " ".join(ex.spoken)
        if key not in seen:
            seen.add(key)
            out.append(ex)
    return out


def split(corpus: list[Example], seed: int = 0,
          fractions=(0.8, 0.1, 0.1)) -> tuple[list[Example], list[Example], list[Example]]:
    order = np.random.default_rng(seed).permutation(len(corpus))
    n_train = int(round(fractions[0] * len(corpus)))
    n_val = int(round(fractions[1] * len(corpus)))
    shuffled = [corpus[i] for i in order]
    return shuffled[:n_train], shuffled[n_train:n_train + n_val], shuffled[n_train + n_val:]


def write_corpus(path: str | Path, examples: Iterable[Example]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(ex.to_json() + "\n")


def read_corpus(path: str | Path) -> list[Example]:
    with open(path, encoding="utf-8") as fh:
        return [Example.from_json(line) for line in fh if line.strip()]
