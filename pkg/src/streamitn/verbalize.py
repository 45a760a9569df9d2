"""Spoken-form tables of the synthetic language.

These tables are the single source of truth for both the corpus generator and
the WFST grammars, so every verbalization the generator can emit is parseable.
"""

from __future__ import annotations

ONES = ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"]
TEENS = ["ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen",
         "seventeen", "eighteen", "nineteen"]
TENS = {2: "twenty", 3: "thirty", 4: "forty", 5: "fifty", 6: "sixty", 7: "seventy",
        8: "eighty", 9: "ninety"}
HUNDRED = "hundred"
THOUSAND = "thousand"
MILLION = "million"
POINT = "point"

MONTHS = ["january", "february", "march", "april", "may", "june", "july", "august",
          "september", "october", "november", "december"]
MONTH_DAYS = [31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31]

ORDINAL_ONES = {1: "first", 2: "second", 3: "third", 4: "fourth", 5: "fifth", 6: "sixth",
                7: "seventh", 8: "eighth", 9: "ninth"}
ORDINAL_TEENS = {10: "tenth", 11: "eleventh", 12: "twelfth", 13: "thirteenth",
                 14: "fourteenth", 15: "fifteenth", 16: "sixteenth", 17: "seventeenth",
                 18: "eighteenth", 19: "nineteenth"}
ORDINAL_TENS = {20: "twentieth", 30: "thirtieth"}

MAX_CARDINAL = 999_999


def _below_hundred(n: int) -> list[str]:
    if n < 10:
        return [ONES[n]]
    if n < 20:
        return [TEENS[n - 10]]
    tens, ones = divmod(n, 10)
    return [TENS[tens]] + ([ONES[ones]] if ones else [])


def _below_thousand(n: int) -> list[str]:
    hundreds, rest = divmod(n, 100)
    words = [ONES[hundreds], HUNDRED] if hundreds else []
    if rest or not hundreds:
        words += _below_hundred(rest)
    return words


def cardinal(n: int) -> list[str]:
    if not 0 <= n <= MAX_CARDINAL:
        raise ValueError(f"cardinal out of range: {n}")
    thousands, rest = divmod(n, 1000)
    if not thousands:
        return _below_thousand(rest)
    words = _below_thousand(thousands) + [THOUSAND]
    if rest:
        words += _below_thousand(rest)
    return words


def decimal(integer: int, fraction_digits: str) -> list[str]:
    return cardinal(integer) + [POINT] + [ONES[int(d)] for d in fraction_digits]


def ordinal_day(day: int) -> list[str]:
    if day in ORDINAL_ONES:
        return [ORDINAL_ONES[day]]
    if day in ORDINAL_TEENS:
        return [ORDINAL_TEENS[day]]
    if day in ORDINAL_TENS:
        return [ORDINAL_TENS[day]]
    tens, ones = divmod(day, 10)
    if tens not in (2, 3) or not 1 <= ones <= 9 or day > 31:
        raise ValueError(f"bad day: {day}")
    return [TENS[tens], ORDINAL_ONES[ones]]


def date(month: int, day: int, year: int | None = None) -> list[str]:
    words = [MONTHS[month - 1]] + ordinal_day(day)
    if year is not None:
        words += cardinal(year)
    return words


def phone(digits: str) -> list[str]:
    return [ONES[int(d)] for d in digits]


def written_date(month: int, day: int, year: int | None = None) -> str:
    text = f"{MONTHS[month - 1].capitalize()} {day}"
    return text if year is None else f"{text}, {year}"
