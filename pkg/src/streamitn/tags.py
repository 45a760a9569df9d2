"""Label inventories and IOB span helpers shared by every module."""

from __future__ import annotations

NC_CLASSES = ("CASE", "NUMBER", "DATE", "PHONE")
NC_TAGS = ["O"] + [f"{p}-{c}" for c in NC_CLASSES for p in ("B", "I")]
NC_INDEX = {t: i for i, t in enumerate(NC_TAGS)}

PUNCT_TAGS = ["O", "COMMA", "EXCLAMATION", "PERIOD", "QUESTION"]
PUNCT_INDEX = {t: i for i, t in enumerate(PUNCT_TAGS)}
MARKS = {"COMMA": ",", "EXCLAMATION": "!", "PERIOD": ".", "QUESTION": "?"}
SENTENCE_END = {"EXCLAMATION", "PERIOD", "QUESTION"}

# Token positions that must not contribute to the loss.
IGNORE = -100


def tag_class(tag: str) -> str | None:
    return None if tag == "O" else tag[2:]


def continues(prev: str | None, tag: str) -> bool:
    """True if `tag` extends the span that `prev` belongs to."""
    return tag.startswith("I-") and prev is not None and prev != "O" and prev[2:] == tag[2:]


def repair_iob(tags: list[str]) -> list[str]:
    """Rewrite every I-X that does not continue an X span into B-X."""
    out = []
    prev = None
    for t in tags:
        if t.startswith("I-") and not continues(prev, t):
            t = "B-" + t[2:]
        out.append(t)
        prev = t
    return out


def spans(tags: list[str]) -> list[tuple[int, int, str]]:
    """Return (start, end_exclusive, class) spans; orphan I-X opens a new span."""
    result = []
    start = None
    cls = None
    prev = None
    for i, t in enumerate(tags):
        if t != "O" and continues(prev, t):
            prev = t
            continue
        if start is not None:
            result.append((start, i, cls))
            start = None
        if t != "O":
            start, cls = i, t[2:]
        prev = t
    if start is not None:
        result.append((start, len(tags), cls))
    return result
