"""Pronunciation lexicons: written words mapped to phoneme sequences.

File format, one pronunciation per line::

    # comment
    kiraya | K I R AA Y AA
    fare     F AY R

The word is separated from its phonemes either by ``|`` or by the first run
of whitespace. Phoneme tokens are opaque, case-sensitive strings. Repeating a
word on another line adds an alternative pronunciation.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from types import MappingProxyType
from typing import TextIO, Union

Phoneme = str
PhonemeSequence = tuple[Phoneme, ...]


class LexiconError(ValueError):
    """Base class for lexicon parse and validation failures."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LexiconParseError(LexiconError):
    pass


class LexiconValidationError(LexiconError):
    pass


class UnknownWordError(LookupError):
    def __init__(self, word: str):
        self.word = word
        super().__init__(f"word not in lexicon: {word!r}")

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    pronunciations: tuple[PhonemeSequence, ...]

    def __post_init__(self):
        if not self.pronunciations:
            raise LexiconValidationError(f"{self.word!r} has no pronunciation")
        if len(set(self.pronunciations)) != len(self.pronunciations):
            raise LexiconValidationError(f"{self.word!r} has duplicate pronunciations")
        for pron in self.pronunciations:
            if not pron:
                raise LexiconValidationError(f"{self.word!r} has an empty pronunciation")


class Lexicon(Mapping):
    """Read-only mapping of word -> :class:`LexiconEntry`, in insertion order."""

    def __init__(self, entries: Iterable[LexiconEntry] = ()):
        table: dict[str, LexiconEntry] = {}
        for entry in entries:
            if entry.word in table:
                raise LexiconValidationError(f"duplicate word {entry.word!r}")
            table[entry.word] = entry
        self._entries = MappingProxyType(table)

    @classmethod
    def from_pronunciations(cls, pairs: Mapping[str, Iterable[Iterable[str]]]) -> "Lexicon":
        return cls(
            LexiconEntry(word, tuple(tuple(p) for p in prons)) for word, prons in pairs.items()
        )

    def __getitem__(self, word: str) -> LexiconEntry:
        return self._entries[word]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Lexicon):
            return NotImplemented
        return dict(self._entries) == dict(other._entries)

    def __hash__(self):
        return hash(tuple(self._entries.values()))

    def __repr__(self) -> str:
        return f"Lexicon({len(self)} words)"

    def lookup(self, word: str) -> list[PhonemeSequence]:
        return list(self.entry(word).pronunciations)

    def inventory(self) -> list[Phoneme]:
        """Sorted set of every phoneme used by any pronunciation."""
        return sorted({ph for e in self._entries.values() for p in e.pronunciations for ph in p})

    def entry(self, word: str) -> LexiconEntry:
        try:
            return self._entries[word]
        except KeyError:
            raise UnknownWordError(word) from None


def lookup(lexicon: Lexicon, word: str) -> list[PhonemeSequence]:
    return lexicon.lookup(word)


def _split_line(line: str, lineno: int) -> tuple[str, list[str]]:
    if "|" in line:
        word, _, rest = line.partition("|")
        word = word.strip()
        if not word or len(word.split()) != 1:
            raise LexiconParseError("expected a single word before '|'", lineno)
    else:
        parts = line.split(None, 1)
        if len(parts) < 2:
            raise LexiconParseError("missing separator between word and phonemes", lineno)
        word, rest = parts
    phonemes = rest.split()
    if not phonemes:
        raise LexiconParseError(f"no phonemes given for {word!r}", lineno)
    if any("|" in ph for ph in phonemes):
        raise LexiconParseError("unexpected '|' among phonemes", lineno)
    return word, phonemes


def parse_lexicon(source: Union[str, TextIO, Iterable[str]]) -> Lexicon:
    """Parse lexicon text (a string, an open file or an iterable of lines)."""
    lines = source.splitlines() if isinstance(source, str) else source
    prons: dict[str, list[PhonemeSequence]] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        word, phonemes = _split_line(line, lineno)
        seq = tuple(phonemes)
        seen = prons.setdefault(word, [])
        if seq in seen:
            raise LexiconValidationError(
                f"duplicate pronunciation for {word!r}: {' '.join(seq)}", lineno
            )
        seen.append(seq)
    return Lexicon(LexiconEntry(w, tuple(p)) for w, p in prons.items())


def load_lexicon(path) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return parse_lexicon(fh)


def serialize_lexicon(lexicon: Lexicon) -> str:
    out = []
    for entry in lexicon.values():
        for pron in entry.pronunciations:
            out.append(f"{entry.word} | {' '.join(pron)}\n")
    return "".join(out)
