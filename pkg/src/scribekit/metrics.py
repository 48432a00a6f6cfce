"""ROUGE-1/2/Lsum and BERTScore over precomputed embeddings, with corpus aggregation."""

from __future__ import annotations

import json
import math
import re
import warnings
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _accel
from .dialogue import normalize_text
from .errors import ConfigError, ParseError, ValidationError

METRIC_NAMES = ("rouge1", "rouge2", "rougeLsum", "bertscore")

# Compact English stopword list used when MetricConfig.stopwords is on.
STOPWORDS = frozenset(
    """a an and are as at be been but by for from had has have he her his i in is
    it its of on or s she so that the their them they this to was we were will
    with you your""".split()
)

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.?!]) ")


@dataclass(frozen=True)
class PRFScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PRFScore":
        # Plain harmonic mean. ROUGE components are never negative, so the
        # != 0 guard is equivalent to > 0 there; unrescaled BERTScore cosines
        # can go negative and keep the formula's sign.
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom != 0 else 0.0
        return cls(precision, recall, f1)

    def as_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    """Multiset of all contiguous n-grams (as tuples) of ``tokens``."""
    if not isinstance(n, int) or n < 1:
        raise ValueError(f"n must be a positive integer, got {n!r}")
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> PRFScore:
    """Clipped n-gram overlap: precision over candidate n-grams, recall over reference."""
    cand_counts = ngram_counts(candidate, n)
    ref_counts = ngram_counts(reference, n)
    overlap = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    cand_total = sum(cand_counts.values())
    ref_total = sum(ref_counts.values())
    precision = overlap / cand_total if cand_total else 0.0
    recall = overlap / ref_total if ref_total else 0.0
    return PRFScore.from_pr(precision, recall)


def _token_ids(*sequences: Sequence[str]) -> list[np.ndarray]:
    """Map token sequences onto shared int64 ids for the DP kernels."""
    vocab: dict[str, int] = {}
    out = []
    for seq in sequences:
        ids = np.empty(len(seq), dtype=np.int64)
        for i, tok in enumerate(seq):
            ids[i] = vocab.setdefault(tok, len(vocab))
        out.append(ids)
    return out


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence of two token sequences."""
    ids_a, ids_b = _token_ids(a, b)
    return int(_accel.lcs_length_ids(ids_a, ids_b))


def split_sentences(text: str) -> list[str]:
    """Sentence segments: newline boundaries plus '. ', '? ', '! ' boundaries."""
    sentences = []
    for line in text.splitlines():
        for part in _SENTENCE_BOUNDARY.split(line):
            part = part.strip()
            if part:
                sentences.append(part)
    return sentences


def _s_stem(word: str) -> str:
    # Harman S-stemmer: three plural-stripping rules, nothing else.
    if len(word) > 4 and word.endswith("ies") and not word.endswith(("eies", "aies")):
        return word[:-3] + "y"
    if len(word) > 3 and word.endswith("es") and not word.endswith(("aes", "ees", "oes")):
        return word[:-1]
    if len(word) > 3 and word.endswith("s") and not word.endswith(("us", "ss")):
        return word[:-1]
    return word


def rouge_tokens(text: str, stemming: bool = False, stopwords: bool = False) -> list[str]:
    """Normalize + whitespace-split a text for ROUGE, with optional stopword
    removal and stemming (applied in that order)."""
    tokens = normalize_text(text).split()
    if stopwords:
        tokens = [t for t in tokens if t not in STOPWORDS]
    if stemming:
        tokens = [_s_stem(t) for t in tokens]
    return tokens


def rouge_lsum(
    candidate: str, reference: str, stemming: bool = False, stopwords: bool = False
) -> PRFScore:
    """Summary-level ROUGE-L via per-reference-sentence union LCS.

    Sentences are split before normalization (normalization collapses the
    newline boundaries). For each reference sentence the union of LCS match
    positions against every candidate sentence is taken; matches are then
    clipped by global candidate/reference token counts so a token is consumed
    at most once over the whole pass.
    """
    cand_sents = [rouge_tokens(s, stemming, stopwords) for s in split_sentences(candidate)]
    ref_sents = [rouge_tokens(s, stemming, stopwords) for s in split_sentences(reference)]
    cand_sents = [s for s in cand_sents if s]
    ref_sents = [s for s in ref_sents if s]
    n_cand = sum(len(s) for s in cand_sents)
    n_ref = sum(len(s) for s in ref_sents)
    if n_cand == 0 or n_ref == 0:
        return PRFScore(0.0, 0.0, 0.0)

    id_seqs = _token_ids(*ref_sents, *cand_sents)
    ref_ids = id_seqs[: len(ref_sents)]
    cand_ids = id_seqs[len(ref_sents) :]
    vocab_size = int(max(seq.max() for seq in id_seqs if len(seq)) + 1)
    ref_counts = np.zeros(vocab_size, dtype=np.int64)
    cand_counts = np.zeros(vocab_size, dtype=np.int64)
    for seq in ref_ids:
        np.add.at(ref_counts, seq, 1)
    for seq in cand_ids:
        np.add.at(cand_counts, seq, 1)

    hits = 0
    for ref_seq in ref_ids:
        mask = np.zeros(len(ref_seq), dtype=np.uint8)
        for cand_seq in cand_ids:
            mask |= _accel.lcs_match_mask_ids(ref_seq, cand_seq)
        for pos in np.flatnonzero(mask):
            tok = ref_seq[pos]
            if cand_counts[tok] > 0 and ref_counts[tok] > 0:
                cand_counts[tok] -= 1
                ref_counts[tok] -= 1
                hits += 1
    return PRFScore.from_pr(hits / n_cand, hits / n_ref)


# ---------------------------------------------------------------------------
# BERTScore


@dataclass(frozen=True)
class IdfTable:
    """Token -> idf weight with a default for unseen tokens."""

    weights: Mapping[str, float]
    default: float

    def __getitem__(self, token: str) -> float:
        return self.weights.get(token, self.default)


def idf_weights(reference_corpus: Sequence[Sequence[str]]) -> IdfTable:
    """weight(t) = log((N+1)/(df(t)+1)); unseen tokens get log(N+1)."""
    n_docs = len(reference_corpus)
    if n_docs == 0:
        raise ValueError("idf_weights needs a non-empty reference corpus")
    df = Counter()
    for doc in reference_corpus:
        df.update(set(doc))
    weights = {tok: math.log((n_docs + 1) / (count + 1)) for tok, count in df.items()}
    return IdfTable(weights=weights, default=math.log(n_docs + 1))


@dataclass(frozen=True)
class EmbeddedSequence:
    """Tokens with one d-dimensional vector each (no zero or non-finite vectors)."""

    tokens: tuple[str, ...]
    vectors: np.ndarray

    def __post_init__(self):
        vectors = np.asarray(self.vectors, dtype=np.float64)
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if vectors.ndim != 2:
            raise ValidationError("vectors must be a 2-D array (tokens x dim)")
        if vectors.shape[0] != len(self.tokens):
            raise ValidationError(
                f"{len(self.tokens)} tokens but {vectors.shape[0]} vectors"
            )
        if len(self.tokens) and vectors.shape[1] < 1:
            raise ValidationError("vector dimension must be >= 1")
        if not np.all(np.isfinite(vectors)):
            raise ValidationError("vectors contain NaN or Inf entries")
        if len(self.tokens) and np.any(np.all(vectors == 0.0, axis=1)):
            raise ValidationError("all-zero vectors are not allowed")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.tokens)


def _side_weights(tokens: tuple[str, ...], idf) -> np.ndarray:
    n = len(tokens)
    if idf is None:
        return np.full(n, 1.0 / n)
    if isinstance(idf, IdfTable):
        w = np.array([idf[t] for t in tokens], dtype=np.float64)
    else:
        w = np.array([idf.get(t, 0.0) for t in tokens], dtype=np.float64)
    total = w.sum()
    if total <= 0.0:
        # Every token maximally common: idf mass vanishes, fall back to uniform.
        return np.full(n, 1.0 / n)
    return w / total


def bert_score(cand: EmbeddedSequence, ref: EmbeddedSequence, idf=None) -> PRFScore:
    """Greedy max-cosine matching: recall over reference tokens, precision over
    candidate tokens, optionally idf-weighted (weights normalized to sum 1 per
    side). No baseline rescaling is applied."""
    if len(cand) == 0 or len(ref) == 0:
        raise ValueError("bert_score needs non-empty candidate and reference sequences")
    if cand.dim != ref.dim:
        raise ValueError(f"embedding dimension mismatch: {cand.dim} vs {ref.dim}")
    c = cand.vectors / np.linalg.norm(cand.vectors, axis=1, keepdims=True)
    r = ref.vectors / np.linalg.norm(ref.vectors, axis=1, keepdims=True)
    sim = c @ r.T
    precision = float(np.dot(_side_weights(cand.tokens, idf), sim.max(axis=1)))
    recall = float(np.dot(_side_weights(ref.tokens, idf), sim.max(axis=0)))
    return PRFScore.from_pr(precision, recall)


# ---------------------------------------------------------------------------
# Corpus-level scoring


@dataclass(frozen=True)
class MetricConfig:
    metrics: tuple[str, ...] = ("rouge1", "rouge2", "rougeLsum")
    stemming: bool = False
    stopwords: bool = False
    idf: bool = False

    def __post_init__(self):
        object.__setattr__(self, "metrics", tuple(self.metrics))
        for name in self.metrics:
            if name not in METRIC_NAMES:
                raise ConfigError(f"unknown metric {name!r}; expected one of {METRIC_NAMES}")
        if not self.metrics:
            raise ConfigError("at least one metric must be requested")

    @classmethod
    def from_dict(cls, obj: Mapping) -> "MetricConfig":
        return cls(
            metrics=tuple(obj.get("metrics", ("rouge1", "rouge2", "rougeLsum"))),
            stemming=bool(obj.get("stemming", False)),
            stopwords=bool(obj.get("stopwords", False)),
            idf=bool(obj.get("idf", False)),
        )

    @classmethod
    def from_json(cls, path) -> "MetricConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class ScoreReport:
    system_name: str
    per_encounter: dict[str, dict[str, PRFScore]]
    corpus_mean: dict[str, PRFScore]
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "system_name": self.system_name,
            "per_encounter": {
                enc: {m: s.as_dict() for m, s in scores.items()}
                for enc, scores in self.per_encounter.items()
            },
            "corpus_mean": {m: s.as_dict() for m, s in self.corpus_mean.items()},
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ScoreReport":
        def prf(d):
            return PRFScore(d["precision"], d["recall"], d["f1"])

        return cls(
            system_name=obj["system_name"],
            per_encounter={
                enc: {m: prf(s) for m, s in scores.items()}
                for enc, scores in obj.get("per_encounter", {}).items()
            },
            corpus_mean={m: prf(s) for m, s in obj["corpus_mean"].items()},
            metadata=dict(obj.get("metadata", {})),
        )


def _score_one(
    cand_text: str,
    ref_text: str,
    config: MetricConfig,
    emb_pair,
    idf,
) -> dict[str, PRFScore]:
    scores: dict[str, PRFScore] = {}
    cand_tokens = rouge_tokens(cand_text, config.stemming, config.stopwords)
    ref_tokens = rouge_tokens(ref_text, config.stemming, config.stopwords)
    for metric in config.metrics:
        if metric == "rouge1":
            scores[metric] = rouge_n(cand_tokens, ref_tokens, 1)
        elif metric == "rouge2":
            scores[metric] = rouge_n(cand_tokens, ref_tokens, 2)
        elif metric == "rougeLsum":
            scores[metric] = rouge_lsum(cand_text, ref_text, config.stemming, config.stopwords)
        elif metric == "bertscore":
            cand_emb, ref_emb = emb_pair
            scores[metric] = bert_score(cand_emb, ref_emb, idf)
    return scores


def score_corpus(
    candidates: Mapping[str, str],
    references: Mapping[str, str],
    config: MetricConfig | None = None,
    embeddings: Mapping[str, tuple[EmbeddedSequence, EmbeddedSequence]] | None = None,
    jobs: int = 1,
    system_name: str = "candidate",
    encoder_id: str | None = None,
) -> ScoreReport:
    """Score every candidate against its reference and average the results.

    Evaluation may fan out across ``jobs`` workers; aggregation always runs in
    sorted-id order, so reports are bitwise identical for any jobs setting.
    """
    config = config or MetricConfig()
    ids = sorted(candidates)
    for enc_id in ids:
        if enc_id not in references:
            raise ValidationError(f"candidate {enc_id!r} has no reference")
    idf = None
    if "bertscore" in config.metrics:
        if embeddings is None:
            raise ConfigError("bertscore requested but no embeddings supplied")
        for enc_id in ids:
            if enc_id not in embeddings:
                raise ConfigError(f"bertscore requested but no embeddings for id {enc_id!r}")
        if config.idf:
            idf = idf_weights([tuple(embeddings[i][1].tokens) for i in ids])

    def work(enc_id: str) -> dict[str, PRFScore]:
        emb_pair = embeddings[enc_id] if embeddings and enc_id in embeddings else None
        return _score_one(candidates[enc_id], references[enc_id], config, emb_pair, idf)

    if jobs > 1 and len(ids) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, ids))
    else:
        results = [work(i) for i in ids]

    per_encounter = dict(zip(ids, results))
    corpus_mean: dict[str, PRFScore] = {}
    for metric in config.metrics:
        n = len(ids)
        if n == 0:
            corpus_mean[metric] = PRFScore(0.0, 0.0, 0.0)
            continue
        p = sum(per_encounter[i][metric].precision for i in ids) / n
        r = sum(per_encounter[i][metric].recall for i in ids) / n
        f1 = sum(per_encounter[i][metric].f1 for i in ids) / n
        corpus_mean[metric] = PRFScore(p, r, f1)

    metadata = {
        "metrics": list(config.metrics),
        "stemming": config.stemming,
        "stopwords": config.stopwords,
        "idf": config.idf,
    }
    if encoder_id is not None:
        metadata["encoder"] = encoder_id
    return ScoreReport(
        system_name=system_name,
        per_encounter=per_encounter,
        corpus_mean=corpus_mean,
        metadata=metadata,
    )


# ---------------------------------------------------------------------------
# EMB-JSONL interchange


class EmbJsonlWarning(UserWarning):
    """Recoverable oddity in an EMB-JSONL file (unknown key, duplicate record)."""


_EMB_RECORD_KEYS = {"id", "side", "tokens", "vectors", "empty"}


def read_emb_jsonl(path):
    """Parse an EMB-JSONL file.

    Returns ``(header, records)`` where header is the line-1 object and
    records maps id -> {"candidate": EmbeddedSequence, "reference": ...}.
    Hard format violations raise ParseError with the line number; recoverable
    ones emit EmbJsonlWarning.
    """
    records: dict[str, dict[str, EmbeddedSequence]] = {}
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline()
        if not header_line.strip():
            raise ParseError("missing EMB-JSONL header", line=1)
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed header: {exc.msg}", line=1) from exc
        if not isinstance(header, dict) or "encoder" not in header or "dim" not in header:
            raise ParseError('header must be {"encoder": ..., "dim": ...}', line=1)
        dim = header["dim"]
        if not isinstance(dim, int) or dim < 1:
            raise ParseError(f"header dim must be a positive integer, got {dim!r}", line=1)
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"malformed record: {exc.msg}", line=lineno) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not a JSON object", line=lineno)
            for key in ("id", "side", "tokens", "vectors"):
                if key not in obj:
                    raise ParseError(f"record is missing key {key!r}", line=lineno)
            extra = set(obj) - _EMB_RECORD_KEYS
            if extra:
                warnings.warn(
                    f"{path}: line {lineno}: ignoring unknown keys {sorted(extra)}",
                    EmbJsonlWarning,
                    stacklevel=2,
                )
            side = obj["side"]
            if side not in ("candidate", "reference"):
                raise ParseError(f"side must be candidate|reference, got {side!r}", line=lineno)
            tokens = obj["tokens"]
            vectors = obj["vectors"]
            if not isinstance(tokens, list) or not tokens:
                raise ParseError("tokens must be a non-empty list", line=lineno)
            if not isinstance(vectors, list) or len(vectors) != len(tokens):
                raise ParseError(
                    f"{len(tokens)} tokens but {len(vectors) if isinstance(vectors, list) else 'no'} vectors",
                    line=lineno,
                )
            for vec in vectors:
                if not isinstance(vec, list) or len(vec) != dim:
                    raise ParseError(
                        f"vector length {len(vec) if isinstance(vec, list) else '?'} "
                        f"does not match header dim {dim}",
                        line=lineno,
                    )
            try:
                seq = EmbeddedSequence(tokens=tuple(tokens), vectors=np.array(vectors, dtype=np.float64))
            except ValidationError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            sides = records.setdefault(obj["id"], {})
            if side in sides:
                warnings.warn(
                    f"{path}: line {lineno}: duplicate record for ({obj['id']!r}, {side}); keeping the last",
                    EmbJsonlWarning,
                    stacklevel=2,
                )
            sides[side] = seq
    return header, records


def pair_embeddings(records: Mapping[str, Mapping[str, EmbeddedSequence]]):
    """{id: (candidate, reference)} for every id that has both sides."""
    out = {}
    for enc_id, sides in records.items():
        if "candidate" in sides and "reference" in sides:
            out[enc_id] = (sides["candidate"], sides["reference"])
    return out
