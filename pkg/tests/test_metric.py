import math
import random

import numpy as np
import pytest

import latexgen
from conftest import random_table
from texbleu.embeddings import sinusoidal_positions
from texbleu.errors import ArtifactMismatchError, DataError
from texbleu.metric import (
    EmbeddedToken, MetricConfig, aggregate, ngram_similarity, texbleu, token_distance,
)
from texbleu.tokenizer import TokenSeq, encode


def tok(e, p=(0.0, 1.0), idx=0, name="t"):
    return EmbeddedToken(name, np.asarray(e, float), np.asarray(p, float), idx)


def brute_force_similarity(r, p, n, cfg):
    """Literal double loop over n-grams and their tokens."""
    n_grams = min(len(r), len(p)) - n + 1
    if n_grams <= 0:
        return None
    total = 0.0
    for i in range(n_grams):
        for j in range(n):
            total += token_distance(r[i + j], p[i + j], cfg)
    return 1.0 - total / (n_grams * n)


# --- config ----------------------------------------------------------------

def test_defaults():
    cfg = MetricConfig()
    assert (cfg.alpha, cfg.beta, cfg.max_n) == (2.0, 0.1, 3)
    assert cfg.weights == (1 / 3, 1 / 3, 1 / 3)
    assert cfg.pairing == "best" and cfg.sim_floor == 1e-9


@pytest.mark.parametrize("kwargs", [
    {"alpha": 0}, {"beta": -1}, {"max_n": 0}, {"sim_floor": 0}, {"sim_floor": 1},
    {"weights": (0.5, 0.5)}, {"weights": (0.5, 0.6, -0.1)}, {"weights": (0.3, 0.3, 0.3)},
    {"pairing": "greedy"}, {"position_mode": "scalar"},
])
def test_config_validation(kwargs):
    with pytest.raises(DataError):
        MetricConfig(**kwargs)


def test_replace_max_n_resets_weights():
    assert MetricConfig().replace(max_n=2).weights == (0.5, 0.5)


# --- token distance ----------------------------------------------------------

def test_token_distance_examples():
    e = [0.4, -1.0, 2.0]
    p0 = [0.0, 1.0, 0.0]
    assert token_distance(tok(e, p0), tok(e, p0)) == pytest.approx(0.0, abs=1e-15)
    assert token_distance(tok([1, 0, 0], p0), tok([0, 1, 0], p0)) == 0.5
    # positional vectors five L1 units apart
    p5 = [2.0, -1.0, 1.0]
    assert token_distance(tok(e, p0), tok(e, p5)) == pytest.approx(math.tanh(0.5) / 2, abs=1e-12)
    assert math.tanh(0.5) / 2 == pytest.approx(0.231059, abs=1e-6)


def test_token_distance_modes():
    a = tok([1, 0], [0, 1], idx=2)
    b = tok([1, 0], [5, 1], idx=7)
    assert token_distance(a, b, MetricConfig(position_mode="index")) == pytest.approx(math.tanh(0.5) / 2)
    assert token_distance(a, b, MetricConfig(positional=False)) == pytest.approx(0.0, abs=1e-15)
    c = tok([0, 1], [5, 1], idx=7)
    # positional off: embedding term alone, not halved
    assert token_distance(a, c, MetricConfig(positional=False)) == 1.0


def test_token_distance_dim_mismatch():
    with pytest.raises(DataError):
        token_distance(tok([1, 0]), tok([1, 0, 0]))


# --- n-gram similarity -------------------------------------------------------

def _unit_at(angle):
    return [math.cos(angle), math.sin(angle)]


def test_ngram_hand_example():
    # distances 0.2 and 0.4 with alpha=2 and no positional gap: cos_dist**2 / 2 = d
    def partner(d):
        return _unit_at(math.acos(1.0 - math.sqrt(2 * d)))
    p0, p1 = [0.0, 1.0], [0.84, 0.54]
    r = [tok([1, 0], p0, 0), tok([1, 0], p1, 1)]
    p = [tok(partner(0.2), p0, 0), tok(partner(0.4), p1, 1)]
    cfg = MetricConfig(pairing="index")
    assert token_distance(r[0], p[0], cfg) == pytest.approx(0.2)
    assert ngram_similarity(r, p, 1, cfg) == pytest.approx(0.7, abs=1e-12)


def test_ngram_undefined_and_errors():
    one = [tok([1, 0])]
    assert ngram_similarity(one, one, 2) is None
    assert ngram_similarity(one, [], 1) is None
    with pytest.raises(DataError):
        ngram_similarity(one, one, 0)


def test_best_match_swapped_tokens():
    pos = sinusoidal_positions(4, 2)
    a, b = [1.0, 0.0], [0.0, 1.0]
    r = [tok(a, pos.rows[0], 0), tok(b, pos.rows[1], 1)]
    p = [tok(b, pos.rows[0], 0), tok(a, pos.rows[1], 1)]
    gap = float(np.abs(pos.rows[1].astype(float) - pos.rows[0]).sum())
    assert gap == pytest.approx(1.301168, abs=1e-6)
    expected = 1.0 - math.tanh(0.1 * gap) / 2
    assert ngram_similarity(r, p, 1, MetricConfig(pairing="best")) == pytest.approx(expected, abs=1e-9)
    # index-aligned compares A with B: orthogonal, d = 0.5 each
    assert ngram_similarity(r, p, 1, MetricConfig(pairing="index")) == pytest.approx(0.5)


def test_best_match_positional_term_active_for_shifted_token():
    pos = sinusoidal_positions(8, 2)
    x, y = [1.0, 0.0], [0.0, 1.0]
    r = [tok(x, pos.rows[0], 0)]
    p = [tok(y, pos.rows[0], 0), tok(x, pos.rows[1], 1)]
    with_pos = ngram_similarity(r, p, 1, MetricConfig())
    without = ngram_similarity(r, p, 1, MetricConfig(positional=False))
    assert without == pytest.approx(1.0)
    assert with_pos < 1.0


def test_index_aligned_oracle_random():
    rng = np.random.default_rng(3)
    pos = sinusoidal_positions(16, 6)
    for _ in range(200):
        lr, lp = rng.integers(0, 9, 2)
        r = [tok(rng.normal(size=6), pos.rows[k], k) for k in range(lr)]
        p = [tok(rng.normal(size=6), pos.rows[k], k) for k in range(lp)]
        for n in (1, 2, 3):
            cfg = MetricConfig(pairing="index", alpha=float(rng.uniform(0.5, 3)))
            got = ngram_similarity(r, p, n, cfg)
            want = brute_force_similarity(r, p, n, cfg)
            if want is None:
                assert got is None
            else:
                assert got == pytest.approx(min(1.0, max(0.0, want)), abs=1e-12)


def test_similarity_range_and_identity():
    rng = np.random.default_rng(4)
    pos = sinusoidal_positions(16, 4)
    for _ in range(50):
        toks = [tok(rng.normal(size=4), pos.rows[k], k) for k in range(rng.integers(1, 9))]
        other = [tok(rng.normal(size=4), pos.rows[k], k) for k in range(rng.integers(1, 9))]
        for mode in ("best", "index"):
            cfg = MetricConfig(pairing=mode)
            for n in (1, 2, 3):
                s = ngram_similarity(toks, other, n, cfg)
                assert s is None or 0.0 <= s <= 1.0
                if n <= len(toks):
                    assert ngram_similarity(toks, toks, n, cfg) == pytest.approx(1.0, abs=1e-12)


# --- aggregation -------------------------------------------------------------

def test_aggregate_example():
    want = math.exp((math.log(0.9) + math.log(0.8) + math.log(0.7)) / 3)
    assert want == pytest.approx(0.795811, abs=1e-6)
    assert aggregate([0.9, 0.8, 0.7]) == pytest.approx(want, abs=1e-12)


def test_aggregate_drops_undefined_orders():
    assert aggregate([0.9, 0.8, None]) == pytest.approx(math.sqrt(0.72))
    assert aggregate([0.81, None, None]) == pytest.approx(0.81)


def test_aggregate_floor():
    assert aggregate([0.0, 1.0, 1.0]) == pytest.approx(1e-3, rel=1e-9)


# --- end to end --------------------------------------------------------------

def test_identity(scorer, latex_corpus):
    for mode in ("best", "index"):
        s = scorer.with_config(MetricConfig(pairing=mode))
        for x in latex_corpus[:50]:
            assert s.score(x, x) == pytest.approx(1.0, abs=1e-9)


def test_empty_inputs(scorer):
    assert scorer.score("", "") == 1.0
    assert scorer.score("", "x") == 0.0
    assert scorer.score("x", "  ") == 0.0


def test_spacing_invariance_example(vocab, emb, pos):
    a = texbleu("a \\cdot b", "a  \\cdot   b", vocab, emb, pos)
    b = texbleu("a \\cdot b", "a \\cdot b", vocab, emb, pos)
    assert a == b == pytest.approx(1.0)


def test_whitespace_invariance_bit_identical(scorer, latex_corpus):
    rng = random.Random(9)
    for x, y in zip(latex_corpus[:40], latex_corpus[40:80]):
        base = scorer.score(x, y)
        assert scorer.score(latexgen.perturb_whitespace(x, rng), latexgen.perturb_whitespace(y, rng)) == base


def test_index_mode_symmetric(scorer, latex_corpus):
    s = scorer.with_config(MetricConfig(pairing="index"))
    for x, y in zip(latex_corpus[:40], latex_corpus[40:80]):
        assert s.score(x, y) == s.score(y, x)


def test_range(scorer, latex_corpus):
    for x, y in zip(latex_corpus[:60], latex_corpus[60:120]):
        assert 0.0 <= scorer.score(x, y) <= 1.0


def test_similar_beats_dissimilar(scorer):
    ref = "\\frac { a + b } { 2 }"
    assert scorer.score(ref, "\\frac { a + c } { 2 }") > scorer.score(ref, "\\sum_{k=1}^{n} \\theta")


def test_short_inputs_are_not_annihilated(scorer):
    # two tokens: the trigram order is undefined and dropped
    assert scorer.score("x y", "x y") == pytest.approx(1.0)
    assert scorer.score("x y", "x z") > 0.1


def test_unbound_tables(vocab, emb):
    with pytest.raises(ArtifactMismatchError):
        texbleu("a", "a", vocab, emb, None)
    with pytest.raises(ArtifactMismatchError):
        texbleu("a", "a", vocab, random_table(10, emb.dim, 0), sinusoidal_positions(8, emb.dim))


def test_scorer_sequence_api(scorer, vocab):
    ref = encode(vocab, "x + y")
    assert scorer.score_sequences(ref, ref) == pytest.approx(1.0)
    assert scorer.score_sequences(TokenSeq.empty(), ref) == 0.0


def test_embedded_seq_indexing(scorer):
    seq = scorer.embed_text("\\alpha + 1")
    t = seq[1]
    assert isinstance(t, EmbeddedToken) and t.position_idx == 1
    assert t.embedding.shape == t.position_vec.shape
