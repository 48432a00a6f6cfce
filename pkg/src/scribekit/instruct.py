"""Build and serialize (instruction, input, output) records for supervised fine-tuning."""

from __future__ import annotations

import json
from dataclasses import dataclass

from .corpus import EncounterPair
from .dialogue import normalize_text, parse_dialogue
from .errors import ParseError, ValidationError
from .soap import CANONICAL_HEADERS, CANONICAL_SECTIONS

SECTIONS_PLACEHOLDER = "{sections}"
DIALOGUE_PLACEHOLDER = "{dialogue}"

_SECTION_LIST = ", ".join(CANONICAL_HEADERS[s] for s in CANONICAL_SECTIONS[:-1])
_SECTION_LIST += f", and {CANONICAL_HEADERS[CANONICAL_SECTIONS[-1]]}"

# Stock instruction. It ends mid-guidance on purpose; extend via a custom
# template body when the remaining per-section directions are needed.
DEFAULT_INSTRUCTION = (
    "Summarize medical dialogues into a SOAP note format, where the note is "
    "divided into four continuous sections: {sections}. The SUBJECTIVE section "
    "should contain information from the verbal examination...."
)


@dataclass(frozen=True)
class InstructionTemplate:
    body: str = DEFAULT_INSTRUCTION

    def expand(self, dialogue_text: str = "") -> str:
        text = self.body
        if SECTIONS_PLACEHOLDER in text:
            text = text.replace(SECTIONS_PLACEHOLDER, _SECTION_LIST)
        if DIALOGUE_PLACEHOLDER in text:
            text = text.replace(DIALOGUE_PLACEHOLDER, dialogue_text)
        return text


@dataclass(frozen=True)
class InstructionRecord:
    instruction: str
    input: str
    output: str
    encounter_id: str


def build_instruction_record(
    pair: EncounterPair, template: InstructionTemplate | None = None
) -> InstructionRecord:
    """One training record: expanded instruction, normalized dialogue as input,
    verbatim note as output (the reference text is the training target and is
    never normalized)."""
    pair.check()
    template = template or InstructionTemplate()
    try:
        parse_dialogue(pair.raw_dialogue, pair.encounter_id)
    except ParseError as exc:
        raise ValidationError(
            f"encounter {pair.encounter_id!r}: dialogue does not parse: {exc}"
        ) from exc
    dialogue_text = normalize_text(pair.raw_dialogue)
    return InstructionRecord(
        instruction=template.expand(dialogue_text),
        input=dialogue_text,
        output=pair.raw_note,
        encounter_id=pair.encounter_id,
    )


def serialize_records(records, path) -> int:
    """Write one JSON object per line ({instruction, input, output, id}); returns count."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "instruction": rec.instruction,
                        "input": rec.input,
                        "output": rec.output,
                        "id": rec.encounter_id,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")
            count += 1
    return count


def parse_records(path) -> list[InstructionRecord]:
    """Inverse of serialize_records; errors carry the offending line number."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed JSON record: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", line=lineno)
            for key in ("instruction", "input", "output", "id"):
                if key not in obj:
                    raise ParseError(f"record is missing key {key!r}", line=lineno)
            records.append(
                InstructionRecord(
                    instruction=obj["instruction"],
                    input=obj["input"],
                    output=obj["output"],
                    encounter_id=obj["id"],
                )
            )
    return records
