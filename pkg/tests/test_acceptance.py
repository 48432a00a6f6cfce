"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``. The corpus-statistics
criterion runs against a real five-split encounter corpus when
``SCRIBEKIT_ACIBENCH`` points at one; otherwise it checks the bundled
5-encounter mini corpus against its hand-computed statistics.
"""

import dataclasses
import json
import os
import time
import warnings
from pathlib import Path

import numpy as np

import oracles
from scribekit import _accel
from scribekit.adapters import (
    LoraAdapter,
    TrainConfig,
    dequantize,
    lora_forward,
    lora_grads,
    lora_init,
    lora_merge,
    quantize_blockwise,
    train_lora_toy,
)
from scribekit.corpus import corpus_stats, load_corpus, mini_corpus_path
from scribekit.instruct import InstructionRecord, parse_records, serialize_records
from scribekit.metrics import (
    EmbeddedSequence,
    MetricConfig,
    bert_score,
    pair_embeddings,
    read_emb_jsonl,
    rouge_lsum,
    rouge_n,
    score_corpus,
)
from scribekit.report import render_leaderboard
from scribekit.soap import CanonicalNote, canonicalize_sections, parse_note, render_note

from test_soap import EXAMPLE_NOTE

BASELINE_ROWS = Path(__file__).parent.parent / "src" / "scribekit" / "data" / "baseline_rows.json"

VOCAB = [f"w{i}" for i in range(10)]


def _report(name: str) -> None:
    print(f"\nACCEPTANCE PASS: {name}")


def _random_tokens(rng, max_len=30):
    return [VOCAB[i] for i in rng.integers(0, len(VOCAB), size=rng.integers(0, max_len + 1))]


def _tokens_to_text(rng, tokens):
    """Lay tokens out as newline-separated sentences (1-8 tokens each)."""
    sentences = []
    i = 0
    while i < len(tokens):
        step = int(rng.integers(1, 9))
        sentences.append(" ".join(tokens[i : i + step]))
        i += step
    return "\n".join(sentences)


def test_rouge_oracle_equivalence_200_pairs():
    rng = np.random.default_rng(20260809)
    cases = []
    for _ in range(200):
        cases.append((_random_tokens(rng), _random_tokens(rng)))
    texts = [(_tokens_to_text(rng, c), _tokens_to_text(rng, r)) for c, r in cases]

    # one tiny call per kernel so one-time JIT warmup stays out of the budget
    rouge_lsum("a b", "a c")
    start = time.perf_counter()
    for (cand, ref), (cand_text, ref_text) in zip(cases, texts):
        for n in (1, 2):
            got = rouge_n(cand, ref, n)
            p, r, f1 = oracles.brute_rouge_n(cand, ref, n)
            assert abs(got.precision - p) <= 1e-9
            assert abs(got.recall - r) <= 1e-9
            assert abs(got.f1 - f1) <= 1e-9
        got = rouge_lsum(cand_text, ref_text)
        p, r, f1 = oracles.brute_rouge_lsum(cand_text, ref_text)
        assert abs(got.precision - p) <= 1e-9
        assert abs(got.recall - r) <= 1e-9
        assert abs(got.f1 - f1) <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 5.0, f"oracle comparison took {elapsed:.2f}s"
    _report(f"ROUGE oracle equivalence on 200 seeded pairs ({elapsed:.2f}s < 5s)")


def test_metric_identities():
    tokens = "back pain resolved after rest".split()
    for n in (1, 2):
        assert rouge_n(tokens, tokens, n).f1 == 1.0
    text = "back pain resolved.\nfollow up in two weeks."
    assert rouge_lsum(text, text).f1 == 1.0
    disjoint_a = "alpha beta gamma.".split()
    disjoint_b = "delta epsilon zeta.".split()
    for n in (1, 2):
        assert rouge_n(disjoint_a, disjoint_b, n).f1 == 0.0
    assert rouge_lsum("alpha beta. gamma.", "delta epsilon. zeta.").f1 == 0.0
    _report("metric identities (identity = 1.0 exactly, disjoint = 0.0 exactly)")


# Hand-computed statistics of the bundled mini corpus (speakers count one
# token each, brackets never counted; note tokens over the normalized note).
MINI_EXPECTED = {
    "train": (1, 4.0, 35.0, 43.0),
    "valid": (1, 5.0, 44.0, 60.0),
    "test1": (1, 3.0, 29.0, 33.0),
    "test2": (1, 6.0, 51.0, 32.0),
    "test3": (1, 4.0, 40.0, 35.0),
}

# Published five-split reference statistics for the full benchmark corpus.
ACIBENCH_EXPECTED = {
    "train": (67, 56, 1301),
    "valid": (20, 53, 1221),
    "test1": (40, 52, 1231),
    "test2": (40, 56, 1382),
    "test3": (40, 58, 1334),
}


def test_corpus_statistics_reproduction():
    real_root = os.environ.get("SCRIBEKIT_ACIBENCH")
    if real_root:
        stats = {s.split: s for s in corpus_stats(load_corpus(real_root))}
        for split, (n, turns, tokens) in ACIBENCH_EXPECTED.items():
            assert stats[split].num_encounters == n
            assert abs(stats[split].avg_turns - turns) <= 0.10 * turns
            assert abs(stats[split].avg_dialogue_tokens - tokens) <= 0.10 * tokens
        _report("corpus statistics: full benchmark counts 67/20/40/40/40, averages within 10%")
        return
    corpus = load_corpus(mini_corpus_path())
    stats = {s.split: s for s in corpus_stats(corpus)}
    assert len(corpus) == 5
    for split, (n, turns, dlg_tokens, note_tokens) in MINI_EXPECTED.items():
        assert stats[split].num_encounters == n
        assert stats[split].avg_turns == turns
        assert stats[split].avg_dialogue_tokens == dlg_tokens
        assert stats[split].avg_note_tokens == note_tokens
    _report("corpus statistics: bundled mini corpus matches hand-computed values exactly")


def test_lora_gradient_check():
    rng = np.random.default_rng(88)
    w = rng.standard_normal((8, 8))
    adapter = LoraAdapter(
        a=rng.standard_normal((2, 8)), b=rng.standard_normal((8, 2)), rank=2, alpha=2.0
    )
    x = rng.standard_normal(8)
    upstream = rng.standard_normal(8)
    da, db = lora_grads(w, adapter, x, upstream)
    h = 1e-6

    def loss(a, b):
        return float(upstream @ lora_forward(w, dataclasses.replace(adapter, a=a, b=b), x))

    worst = 0.0
    for analytic, attr in ((da, "a"), (db, "b")):
        base = getattr(adapter, attr)
        for i in range(base.shape[0]):
            for j in range(base.shape[1]):
                plus, minus = base.copy(), base.copy()
                plus[i, j] += h
                minus[i, j] -= h
                if attr == "a":
                    fd = (loss(plus, adapter.b) - loss(minus, adapter.b)) / (2 * h)
                else:
                    fd = (loss(adapter.a, plus) - loss(adapter.a, minus)) / (2 * h)
                rel = abs(analytic[i, j] - fd) / max(abs(fd), 1e-8)
                worst = max(worst, rel)
                assert rel <= 1e-5
    _report(f"LoRA analytic vs central-difference gradients (max rel err {worst:.2e} <= 1e-5)")


def test_lora_zero_init_and_merge_equivalence():
    rng = np.random.default_rng(99)
    w = rng.standard_normal((12, 10))
    fresh = lora_init(12, 10, 3, alpha=1.5, seed=99)
    for _ in range(20):
        x = rng.standard_normal(10)
        assert np.max(np.abs(lora_forward(w, fresh, x) - w @ x)) == 0.0
    updated = dataclasses.replace(
        fresh, a=fresh.a + rng.standard_normal(fresh.a.shape), b=rng.standard_normal(fresh.b.shape)
    )
    merged = lora_merge(w, updated)
    worst = 0.0
    for _ in range(20):
        x = rng.standard_normal(10)
        worst = max(worst, float(np.max(np.abs(merged @ x - lora_forward(w, updated, x)))))
    assert worst <= 1e-10
    _report(f"LoRA zero-init identity exact; merge/forward equivalence (max diff {worst:.2e} <= 1e-10)")


def test_quantization_bounds():
    rng = np.random.default_rng(77)
    uniform = rng.uniform(-3.0, 3.0, size=10_000)
    q = quantize_blockwise(uniform, block_size=64, scheme="absmax4")
    restored = dequantize(q)
    per_value_scale = np.repeat(q.scales, 64)[: uniform.size]
    assert np.all(np.abs(uniform - restored) <= per_value_scale / 2 + 1e-12)

    gauss = rng.standard_normal(100_000)
    mse = {}
    for scheme in ("absmax4", "nf4"):
        qg = quantize_blockwise(gauss, block_size=64, scheme=scheme)
        mse[scheme] = float(np.mean((gauss - dequantize(qg)) ** 2))
    assert mse["nf4"] < mse["absmax4"]
    _report(
        "quantization: absmax4 error <= scale/2 on 1e4 samples; "
        f"nf4 MSE {mse['nf4']:.2e} < absmax4 MSE {mse['absmax4']:.2e} on 1e5 gaussians"
    )


def test_toy_training_criteria():
    rng = np.random.default_rng(66)
    w = rng.standard_normal((8, 8))
    zero_trace = train_lora_toy(w, w, TrainConfig())
    assert all(loss <= 1e-12 for loss in zero_trace.losses)
    target = w + np.outer(rng.standard_normal(8), rng.standard_normal(8))
    trace = train_lora_toy(w, target, TrainConfig())
    assert trace.losses[-1] <= 0.01 * trace.losses[0]
    _report(
        "toy training: zero-discrepancy losses <= 1e-12; rank-1 target final loss "
        f"{trace.losses[-1]:.2e} <= 1% of step-1 loss {trace.losses[0]:.2e}"
    )


def test_bertscore_criteria():
    rng = np.random.default_rng(55)
    seq = EmbeddedSequence(
        tokens=tuple(f"t{i}" for i in range(6)), vectors=rng.standard_normal((6, 8))
    )
    assert abs(bert_score(seq, seq).f1 - 1.0) <= 1e-12

    for trial in range(50):
        n, m, d = rng.integers(1, 9), rng.integers(1, 9), rng.integers(2, 7)
        cand = EmbeddedSequence(
            tokens=tuple(f"c{i}" for i in range(n)), vectors=rng.standard_normal((n, d))
        )
        ref = EmbeddedSequence(
            tokens=tuple(f"r{i}" for i in range(m)), vectors=rng.standard_normal((m, d))
        )
        got = bert_score(cand, ref)
        p, r, f1 = oracles.brute_bert_score(cand.tokens, cand.vectors, ref.tokens, ref.vectors)
        assert abs(got.precision - p) <= 1e-9
        assert abs(got.recall - r) <= 1e-9
        assert abs(got.f1 - f1) <= 1e-9

        scaled = bert_score(
            EmbeddedSequence(cand.tokens, cand.vectors * rng.uniform(0.01, 100.0, size=(n, 1))),
            EmbeddedSequence(ref.tokens, ref.vectors * rng.uniform(0.01, 100.0, size=(m, 1))),
        )
        assert abs(scaled.precision - got.precision) <= 1e-9
        assert abs(scaled.recall - got.recall) <= 1e-9
        assert abs(scaled.f1 - got.f1) <= 1e-9
    _report("BERTScore: identity f1 = 1.0; brute-force parity and rescaling invariance on 50 instances")


def test_instruction_jsonl_roundtrip(tmp_path):
    records = [
        InstructionRecord('say "hello" twice', "input with\nnewline", 'output "quoted"\nand more', "id-1"),
        InstructionRecord("café résumé", "über → unicode", "clínica médica 中文", "id-é"),
        InstructionRecord("tabs\tand\ttabs", "back\\slash", "trailing space ", "id-3"),
    ]
    path = tmp_path / "roundtrip.jsonl"
    assert serialize_records(records, path) == 3
    assert parse_records(path) == records
    _report("instruction JSONL roundtrip with quotes, newlines, and non-ASCII text")


def test_leaderboard_fidelity():
    rows = json.loads(BASELINE_ROWS.read_text(encoding="utf-8"))
    assert len(rows) == 9
    renders = [render_leaderboard(rows, format="markdown", sort_key="rouge1") for _ in range(2)]
    assert renders[0] == renders[1]
    body = [line for line in renders[0].splitlines()[2:]]
    first, last = body[0], body[-1]
    assert first.split("|")[1].strip().startswith("Llama3-8B-FT")
    assert "58.22" in first
    assert last.split("|")[1].strip() == "Gemma-7b"
    assert "10.11" in last

    # byte-identical through the scoring pipeline regardless of --jobs
    rng = np.random.default_rng(44)
    cands = {f"id{i}": " ".join(rng.choice(VOCAB, size=12)) for i in range(12)}
    refs = {f"id{i}": " ".join(rng.choice(VOCAB, size=12)) for i in range(12)}
    boards = []
    for jobs in (1, 2, 8):
        report = score_corpus(cands, refs, MetricConfig(), jobs=jobs, system_name="probe")
        boards.append(render_leaderboard([report], format="csv", sort_key="rouge1"))
    assert boards[0] == boards[1] == boards[2]
    _report("leaderboard fidelity: ordering, values, and byte-identity across runs and --jobs")


def _random_note(rng) -> CanonicalNote:
    words = ["rest", "ice", "pain", "knee", "stable", "improved", "follow", "up", "daily"]

    def body():
        lines = []
        for _ in range(int(rng.integers(0, 4))):
            lines.append(" ".join(rng.choice(words, size=rng.integers(1, 7))))
        return "\n".join(lines)

    return CanonicalNote(
        subjective=body(), objective_exam=body(), objective_results=body(), assessment_and_plan=body()
    )


def test_soap_roundtrip_and_example_note():
    rng = np.random.default_rng(33)
    for _ in range(100):
        note = _random_note(rng)
        assert canonicalize_sections(parse_note(render_note(note))) == note
    canon = canonicalize_sections(parse_note(EXAMPLE_NOTE))
    assert canon.subjective != ""
    assert canon.assessment_and_plan != ""
    _report("SOAP roundtrip over 100 randomized notes; example note sections populated")


def test_primary_suite_uses_committed_embedding_fixtures(data_dir):
    """Secondary-facing interface: the committed EMB-JSONL fixture feeds the
    whole bertscore path with zero warnings and no exporter runtime."""
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        header, records = read_emb_jsonl(data_dir / "fixture_embeddings.jsonl")
    pairs = pair_embeddings(records)
    report = score_corpus(
        {"enc-a": "back pain resolved", "enc-b": "knee swelling"},
        {"enc-a": "back pain resolved", "enc-b": "knee effusion noted"},
        MetricConfig(metrics=("rouge1", "bertscore")),
        embeddings=pairs,
        encoder_id=header["encoder"],
    )
    assert abs(report.per_encounter["enc-a"]["bertscore"].f1 - 1.0) <= 1e-12
    assert report.metadata["encoder"] == "fixture-unit-4d"
    _report("committed EMB-JSONL fixtures drive bertscore end-to-end with zero warnings")


def test_kernel_backend_note():
    print(f"\nkernel backend in use: {_accel.backend()}")
