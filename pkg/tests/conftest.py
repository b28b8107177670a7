import random

import numpy as np
import pytest

import latexgen
from texbleu import (
    EmbeddingTable, MetricConfig, Scorer, encode, sinusoidal_positions, train_bpe, train_embeddings,
)


@pytest.fixture(scope="session")
def latex_corpus():
    return latexgen.corpus(600, seed=7, depth=3)


@pytest.fixture(scope="session")
def vocab(latex_corpus):
    return train_bpe(latex_corpus, vocab_size=256 + 300, min_pair_freq=2)


@pytest.fixture(scope="session")
def emb(vocab, latex_corpus):
    seqs = [encode(vocab, line) for line in latex_corpus]
    return train_embeddings(seqs, vocab.vocab_size, dim=32, window=3, negatives=4, epochs=3, seed=1)


@pytest.fixture(scope="session")
def pos():
    return sinusoidal_positions(256, 32)


@pytest.fixture(scope="session")
def scorer(vocab, emb, pos):
    return Scorer(vocab, emb, pos, MetricConfig())


@pytest.fixture
def rng():
    return random.Random(1234)


def random_table(rows, dim, seed):
    return EmbeddingTable(np.random.default_rng(seed).normal(size=(rows, dim)))


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            for key, value in getattr(rep, "user_properties", []):
                if key == "criterion":
                    lines.append((value, outcome.upper()))
    if lines:
        terminalreporter.section("acceptance criteria")
        for value, outcome in sorted(lines, key=lambda x: int(x[0].split()[0])):
            num, _, desc = value.partition(" ")
            terminalreporter.write_line(f"AC{int(num):02d} {'PASS' if outcome == 'PASSED' else 'FAIL'}  {desc}")
