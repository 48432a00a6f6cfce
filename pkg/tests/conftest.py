import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def tmp_corpus(tmp_path):
    """Factory: build a corpus directory from {split: {id: (dialogue, note)}}."""

    def build(layout) -> Path:
        root = tmp_path / "corpus"
        for split, encounters in layout.items():
            split_dir = root / split
            split_dir.mkdir(parents=True, exist_ok=True)
            for enc_id, (dialogue, note) in encounters.items():
                if dialogue is not None:
                    (split_dir / f"{enc_id}.dialogue.txt").write_text(dialogue, encoding="utf-8")
                if note is not None:
                    (split_dir / f"{enc_id}.note.txt").write_text(note, encoding="utf-8")
        root.mkdir(exist_ok=True)
        return root

    return build


SAMPLE_DIALOGUE = (
    "[doctor] hi , how are you feeling today ?\n"
    "[patient] a little sore but better .\n"
)

SAMPLE_NOTE = (
    "CHIEF COMPLAINT\nSoreness.\n"
    "PHYSICAL EXAMINATION\nMild tenderness.\n"
    "ASSESSMENT AND PLAN\nRest and ice.\n"
)


@pytest.fixture
def sample_pair_texts():
    return SAMPLE_DIALOGUE, SAMPLE_NOTE
