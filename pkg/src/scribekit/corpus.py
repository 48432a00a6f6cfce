"""Encounter corpus loading, validation, and per-split statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dialogue import SubwordVocab, count_tokens, normalize_text, parse_dialogue
from .errors import ConfigError, ParseError, ValidationError
from .soap import parse_note

SPLITS = ("train", "valid", "test1", "test2", "test3")

DIALOGUE_SUFFIX = ".dialogue.txt"
NOTE_SUFFIX = ".note.txt"


@dataclass(frozen=True)
class EncounterPair:
    """One dialogue/note pair. Invariants are checked by loaders, not __init__,
    so that validate_corpus can report problems instead of refusing to hold them."""

    encounter_id: str
    split: str
    raw_dialogue: str
    raw_note: str

    def check(self) -> None:
        if not self.encounter_id:
            raise ValidationError("encounter_id must be non-empty")
        if self.split not in SPLITS:
            raise ValidationError(
                f"encounter {self.encounter_id!r}: split {self.split!r} not in {SPLITS}"
            )
        if not self.raw_dialogue:
            raise ValidationError(f"encounter {self.encounter_id!r}: empty dialogue")
        if not self.raw_note:
            raise ValidationError(f"encounter {self.encounter_id!r}: empty note")


@dataclass(frozen=True)
class Corpus:
    pairs: tuple[EncounterPair, ...]
    source_path: str = ""

    def __len__(self) -> int:
        return len(self.pairs)

    def by_split(self, split: str) -> tuple[EncounterPair, ...]:
        return tuple(p for p in self.pairs if p.split == split)


@dataclass(frozen=True)
class SplitStats:
    split: str
    num_encounters: int
    avg_turns: float
    avg_dialogue_tokens: float
    avg_note_tokens: float


@dataclass
class ValidationReport:
    duplicate_ids: list[str] = field(default_factory=list)
    empty_texts: list[tuple[str, str]] = field(default_factory=list)
    bad_splits: list[str] = field(default_factory=list)
    unsectioned_notes: list[str] = field(default_factory=list)

    @property
    def is_clean(self) -> bool:
        return not (
            self.duplicate_ids or self.empty_texts or self.bad_splits or self.unsectioned_notes
        )

    def as_dict(self) -> dict:
        return {
            "clean": self.is_clean,
            "duplicate_ids": self.duplicate_ids,
            "empty_texts": [list(t) for t in self.empty_texts],
            "bad_splits": self.bad_splits,
            "unsectioned_notes": self.unsectioned_notes,
        }


def _read_manifest(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    if not isinstance(entries, list):
        raise ConfigError(f"manifest {path}: expected a JSON list of {{id, split}}")
    overrides = {}
    for entry in entries:
        try:
            enc_id, split = entry["id"], entry["split"]
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"manifest {path}: entry {entry!r} needs 'id' and 'split'") from exc
        if split not in SPLITS:
            raise ConfigError(f"manifest {path}: id {enc_id!r} has unknown split {split!r}")
        overrides[enc_id] = split
    return overrides


def load_corpus(root_dir, manifest=None) -> Corpus:
    """Load ``<root>/<split>/<id>.dialogue.txt`` + ``<id>.note.txt`` pairs.

    Split comes from the directory name; a manifest (JSON list of {id, split})
    overrides it. A dialogue or note file without its counterpart is an
    orphan record error.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} is not a directory")
    overrides = _read_manifest(manifest) if manifest else {}
    pairs = []
    seen: dict[str, str] = {}
    for split in SPLITS:
        split_dir = root / split
        if not split_dir.is_dir():
            continue
        dialogues = {p.name[: -len(DIALOGUE_SUFFIX)]: p for p in split_dir.glob(f"*{DIALOGUE_SUFFIX}")}
        notes = {p.name[: -len(NOTE_SUFFIX)]: p for p in split_dir.glob(f"*{NOTE_SUFFIX}")}
        for enc_id in sorted(dialogues.keys() | notes.keys()):
            if enc_id not in notes:
                raise ValidationError(f"orphan record: {enc_id!r} has a dialogue but no note in {split_dir}")
            if enc_id not in dialogues:
                raise ValidationError(f"orphan record: {enc_id!r} has a note but no dialogue in {split_dir}")
            if enc_id in seen:
                raise ValidationError(
                    f"duplicate encounter_id {enc_id!r} (splits {seen[enc_id]!r} and {split!r})"
                )
            seen[enc_id] = split
            pair = EncounterPair(
                encounter_id=enc_id,
                split=overrides.get(enc_id, split),
                raw_dialogue=dialogues[enc_id].read_text(encoding="utf-8"),
                raw_note=notes[enc_id].read_text(encoding="utf-8"),
            )
            pair.check()
            pairs.append(pair)
    unknown = set(overrides) - set(seen)
    if unknown:
        raise ValidationError(f"manifest names unknown encounter ids: {sorted(unknown)}")
    return Corpus(pairs=tuple(pairs), source_path=str(root))


def _dialogue_token_count(pair: EncounterPair, tokenizer_mode: str, vocab) -> tuple[int, int]:
    """(turns, tokens) for one dialogue. Each turn contributes one speaker token
    plus its utterance tokens; the tag brackets themselves are never counted."""
    try:
        dlg = parse_dialogue(pair.raw_dialogue, pair.encounter_id)
    except ParseError as exc:
        raise ValidationError(
            f"stats aborted: dialogue for encounter {pair.encounter_id!r} failed to parse: {exc}"
        ) from exc
    tokens = sum(1 + count_tokens(t.text, tokenizer_mode, vocab) for t in dlg.turns)
    return len(dlg.turns), tokens


def corpus_stats(
    corpus: Corpus,
    tokenizer_mode: str = "whitespace",
    vocab: SubwordVocab | None = None,
) -> list[SplitStats]:
    """Per-split encounter counts and average turns / dialogue tokens / note tokens.

    Deterministic and permutation-invariant: encounters aggregate per split in
    a fixed reduction order regardless of corpus ordering.
    """
    grouped: dict[str, list[EncounterPair]] = {s: [] for s in SPLITS}
    for pair in corpus.pairs:
        pair.check()
        grouped[pair.split].append(pair)
    stats = []
    for split in SPLITS:
        pairs = sorted(grouped[split], key=lambda p: p.encounter_id)
        if not pairs:
            continue
        turns = []
        dlg_tokens = []
        note_tokens = []
        for pair in pairs:
            n_turns, n_tokens = _dialogue_token_count(pair, tokenizer_mode, vocab)
            turns.append(n_turns)
            dlg_tokens.append(n_tokens)
            note_tokens.append(count_tokens(normalize_text(pair.raw_note), tokenizer_mode, vocab))
        n = len(pairs)
        stats.append(
            SplitStats(
                split=split,
                num_encounters=n,
                avg_turns=sum(turns) / n,
                avg_dialogue_tokens=sum(dlg_tokens) / n,
                avg_note_tokens=sum(note_tokens) / n,
            )
        )
    return stats


def validate_corpus(corpus: Corpus) -> ValidationReport:
    """Report duplicate ids, empty texts, bad splits, and unsectioned notes.

    Problems are collected, never raised; a clean corpus yields an empty report.
    """
    report = ValidationReport()
    seen = set()
    for pair in corpus.pairs:
        if pair.encounter_id in seen:
            report.duplicate_ids.append(pair.encounter_id)
        seen.add(pair.encounter_id)
        if pair.split not in SPLITS:
            report.bad_splits.append(pair.encounter_id)
        if not pair.raw_dialogue:
            report.empty_texts.append((pair.encounter_id, "dialogue"))
        if not pair.raw_note:
            report.empty_texts.append((pair.encounter_id, "note"))
        if pair.raw_note:
            surface = parse_note(pair.raw_note)
            if all(header == "" for header, _ in surface.segments):
                report.unsectioned_notes.append(pair.encounter_id)
    return report


def mini_corpus_path() -> Path:
    """Location of the bundled 5-encounter synthetic mini corpus."""
    return Path(__file__).parent / "data" / "mini_corpus"
