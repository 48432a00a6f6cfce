"""Bracket-tagged transcript parsing, text normalization, token counting."""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass

from .errors import ConfigError, ParseError, ValidationError

# Punctuation kept by normalization; everything else outside letters/digits/space goes.
_KEPT_PUNCT = frozenset(".,?!'-:;()[]/")

# A speaker tag is one bracketed word: no spaces or nested brackets inside.
_TAG_RE = re.compile(r"\[([^\[\] ]+)\]")

TOKENIZER_MODES = ("whitespace", "subword-file")


def normalize_text(raw: str) -> str:
    """Canonicalize raw text: NFC, lowercase, whitespace collapsed, charset filtered.

    Keeps letters, digits, spaces and the punctuation set ``. , ? ! ' - : ; ( ) [ ] /``;
    control characters and everything else are dropped. Idempotent.
    """
    if not isinstance(raw, str):
        raise ValidationError("normalize_text expects str input")
    text = unicodedata.normalize("NFC", raw).lower()
    out = []
    for ch in text:
        if ch.isspace():
            out.append(" ")
        elif ch.isalnum() or ch in _KEPT_PUNCT:
            out.append(ch)
        # anything else (control chars, stray symbols) is removed
    collapsed = " ".join("".join(out).split())
    return unicodedata.normalize("NFC", collapsed)


@dataclass(frozen=True)
class Turn:
    """One contiguous utterance: canonical lowercase speaker + normalized text."""

    speaker: str
    text: str
    index: int


@dataclass(frozen=True)
class Dialogue:
    turns: tuple[Turn, ...]
    source_id: str

    def render(self) -> str:
        """Rebuild the tagged transcript; parse(render(d)) == d."""
        return " ".join(f"[{t.speaker}] {t.text}" for t in self.turns)


def parse_dialogue(raw: str, source_id: str = "") -> Dialogue:
    """Split a bracket-tagged transcript into speaker turns.

    The transcript is normalized first, then cut at every ``[word]`` tag; each
    segment becomes one turn (segments that normalize to nothing are dropped).
    Offsets in errors refer to the normalized transcript.
    """
    text = normalize_text(raw)
    matches = list(_TAG_RE.finditer(text))
    if not matches:
        raise ParseError(f"untagged transcript for {source_id!r}: no [speaker] tag found")
    prefix = text[: matches[0].start()]
    if prefix.strip():
        first = len(prefix) - len(prefix.lstrip())
        raise ParseError(
            f"preamble before first speaker tag in {source_id!r}", offset=first
        )
    turns = []
    for pos, match in enumerate(matches):
        end = matches[pos + 1].start() if pos + 1 < len(matches) else len(text)
        segment = text[match.end() : end].strip()
        if not segment:
            continue
        turns.append(Turn(speaker=match.group(1), text=segment, index=len(turns)))
    if not turns:
        raise ParseError(f"transcript {source_id!r} has tags but no utterance text")
    return Dialogue(turns=tuple(turns), source_id=source_id)


class SubwordVocab:
    """Greedy longest-match piece vocabulary loaded from a one-piece-per-line file."""

    def __init__(self, pieces):
        self.pieces = frozenset(p for p in pieces if p)
        if not self.pieces:
            raise ConfigError("subword vocabulary is empty")
        self._max_len = max(len(p) for p in self.pieces)

    @classmethod
    def from_file(cls, path) -> "SubwordVocab":
        with open(path, encoding="utf-8") as fh:
            return cls(line.rstrip("\n") for line in fh)

    def count_pieces(self, word: str) -> int:
        """Number of greedy longest-match pieces; unmatched characters count 1 each."""
        count = 0
        i = 0
        n = len(word)
        while i < n:
            best = 0
            for length in range(min(self._max_len, n - i), 0, -1):
                if word[i : i + length] in self.pieces:
                    best = length
                    break
            count += 1
            i += best if best else 1
        return count


def count_tokens(text: str, tokenizer_mode: str = "whitespace", vocab: SubwordVocab | None = None) -> int:
    """Token count of ``text``: maximal non-space runs, or subword pieces per word."""
    if tokenizer_mode not in TOKENIZER_MODES:
        raise ValueError(f"unknown tokenizer_mode {tokenizer_mode!r}; expected one of {TOKENIZER_MODES}")
    words = text.split()
    if tokenizer_mode == "whitespace":
        return len(words)
    if vocab is None:
        raise ConfigError("subword-file tokenizer mode requires a vocabulary file")
    return sum(vocab.count_pieces(w) for w in words)
