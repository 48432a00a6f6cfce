"""Clinical dialogue/note corpus tooling and evaluation numerics."""

from .adapters import (
    LoraAdapter,
    QuantizedTensor,
    TrainConfig,
    TrainTrace,
    dequantize,
    lora_forward,
    lora_grads,
    lora_init,
    lora_merge,
    lora_param_stats,
    quantize_blockwise,
    train_lora_toy,
)
from .corpus import (
    Corpus,
    EncounterPair,
    SplitStats,
    ValidationReport,
    corpus_stats,
    load_corpus,
    mini_corpus_path,
    validate_corpus,
)
from .dialogue import Dialogue, SubwordVocab, Turn, count_tokens, normalize_text, parse_dialogue
from .errors import ConfigError, CorruptionError, ParseError, ScribekitError, ValidationError
from .instruct import (
    DEFAULT_INSTRUCTION,
    InstructionRecord,
    InstructionTemplate,
    build_instruction_record,
    parse_records,
    serialize_records,
)
from .metrics import (
    EmbeddedSequence,
    IdfTable,
    MetricConfig,
    PRFScore,
    ScoreReport,
    bert_score,
    idf_weights,
    lcs_length,
    ngram_counts,
    read_emb_jsonl,
    rouge_lsum,
    rouge_n,
    score_corpus,
    split_sentences,
)
from .report import render_leaderboard, render_stats_table
from .soap import CanonicalNote, SurfaceNote, canonicalize_sections, parse_note, render_note

__version__ = "0.1.0"
