"""Clinical note sectionizing: surface headers -> four canonical SOAP sections."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields

from .errors import ConfigError, ValidationError

SUBJECTIVE = "subjective"
OBJECTIVE_EXAM = "objective_exam"
OBJECTIVE_RESULTS = "objective_results"
ASSESSMENT_AND_PLAN = "assessment_and_plan"

CANONICAL_SECTIONS = (SUBJECTIVE, OBJECTIVE_EXAM, OBJECTIVE_RESULTS, ASSESSMENT_AND_PLAN)

# Rendered section headers, in fixed output order.
CANONICAL_HEADERS = {
    SUBJECTIVE: "SUBJECTIVE",
    OBJECTIVE_EXAM: "OBJECTIVE_EXAM",
    OBJECTIVE_RESULTS: "OBJECTIVE_RESULTS",
    ASSESSMENT_AND_PLAN: "ASSESSMENT_AND_PLAN",
}

# Surface header lexicon. Headers are recognized only as fully uppercase text
# at the start of a line; the same words in lowercase are body text.
DEFAULT_LEXICON = {
    "CHIEF COMPLAINT": SUBJECTIVE,
    "HISTORY OF PRESENT ILLNESS": SUBJECTIVE,
    "REVIEW OF SYSTEMS": SUBJECTIVE,
    "SUBJECTIVE": SUBJECTIVE,
    "PHYSICAL EXAMINATION": OBJECTIVE_EXAM,
    "PHYSICAL EXAM": OBJECTIVE_EXAM,
    "OBJECTIVE_EXAM": OBJECTIVE_EXAM,
    "RESULTS": OBJECTIVE_RESULTS,
    "OBJECTIVE_RESULTS": OBJECTIVE_RESULTS,
    "ASSESSMENT AND PLAN": ASSESSMENT_AND_PLAN,
    "ASSESSMENT": ASSESSMENT_AND_PLAN,
    "PLAN": ASSESSMENT_AND_PLAN,
    "ASSESSMENT_AND_PLAN": ASSESSMENT_AND_PLAN,
}


def load_lexicon(path) -> dict[str, str]:
    """Load a {surface_header: canonical_section} override table from JSON."""
    with open(path, encoding="utf-8") as fh:
        table = json.load(fh)
    if not isinstance(table, dict):
        raise ConfigError(f"lexicon file {path}: expected a JSON object")
    return _check_lexicon(table)


def _check_lexicon(lexicon: dict[str, str]) -> dict[str, str]:
    for header, section in lexicon.items():
        if header != header.upper() or not header.strip():
            raise ConfigError(f"lexicon header {header!r} must be non-empty uppercase")
        if section not in CANONICAL_SECTIONS:
            raise ConfigError(
                f"lexicon maps {header!r} to unknown section {section!r}; "
                f"expected one of {CANONICAL_SECTIONS}"
            )
    return dict(lexicon)


@dataclass(frozen=True)
class SurfaceNote:
    """Ordered (header, body) segments; the preamble segment has header ''."""

    segments: tuple[tuple[str, str], ...]

    def headers(self) -> tuple[str, ...]:
        return tuple(h for h, _ in self.segments)


@dataclass(frozen=True)
class CanonicalNote:
    subjective: str = ""
    objective_exam: str = ""
    objective_results: str = ""
    assessment_and_plan: str = ""

    def as_dict(self) -> dict[str, str]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _match_header(line: str, headers_by_length: list[str]) -> tuple[str, str] | None:
    stripped = line.strip()
    for header in headers_by_length:
        if stripped == header:
            return header, ""
        if stripped.startswith(header) and stripped[len(header)].isspace():
            return header, stripped[len(header) :].strip()
    return None


def parse_note(raw_note: str, lexicon: dict[str, str] | None = None) -> SurfaceNote:
    """Segment a note at recognized header lines.

    Text before the first header becomes a preamble segment with header ``""``
    (omitted when there is no such text). A note with no recognizable headers
    yields a single preamble segment.
    """
    table = _check_lexicon(lexicon) if lexicon is not None else DEFAULT_LEXICON
    by_length = sorted(table, key=len, reverse=True)
    segments: list[tuple[str, list[str]]] = []
    preamble: list[str] = []
    for line in raw_note.splitlines():
        matched = _match_header(line, by_length)
        if matched is not None:
            header, remainder = matched
            segments.append((header, [remainder] if remainder else []))
        elif segments:
            segments[-1][1].append(line)
        else:
            preamble.append(line)
    out: list[tuple[str, str]] = []
    preamble_text = "\n".join(preamble).strip()
    if preamble_text:
        out.append(("", preamble_text))
    for header, body_lines in segments:
        out.append((header, "\n".join(body_lines).strip()))
    if not out:
        out.append(("", ""))
    return SurfaceNote(segments=tuple(out))


def canonicalize_sections(note: SurfaceNote, lexicon: dict[str, str] | None = None) -> CanonicalNote:
    """Fold surface segments into the four canonical sections, source order kept.

    The preamble joins subjective; within one canonical section, non-empty
    bodies concatenate newline-separated.
    """
    table = _check_lexicon(lexicon) if lexicon is not None else DEFAULT_LEXICON
    buckets: dict[str, list[str]] = {name: [] for name in CANONICAL_SECTIONS}
    for header, body in note.segments:
        if header == "":
            section = SUBJECTIVE
        else:
            section = table.get(header)
            if section is None:
                raise ValidationError(f"segment header {header!r} is not in the lexicon")
        if body:
            buckets[section].append(body)
    return CanonicalNote(**{name: "\n".join(parts) for name, parts in buckets.items()})


def render_note(note: CanonicalNote) -> str:
    """Emit the four canonical headers in fixed order, each followed by its body.

    ``canonicalize_sections(parse_note(render_note(n))) == n`` for notes whose
    bodies contain no header-like lines.
    """
    lines = []
    for section in CANONICAL_SECTIONS:
        lines.append(CANONICAL_HEADERS[section])
        body = getattr(note, section)
        if body:
            lines.append(body)
    return "\n".join(lines) + "\n"
