import os
import subprocess
import sys

import numpy as np
import pytest

from notefusion import _kernels
from notefusion.topicmodel import fit_lda

needs_numba = pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba not installed")


def _state(seed, n_docs=25, vocab=40, k=7, length=30):
    rng = np.random.default_rng(seed)
    lengths = rng.integers(0, length, size=n_docs)
    doc_ids = np.repeat(np.arange(n_docs), lengths).astype(np.int64)
    words = rng.integers(0, vocab, size=doc_ids.shape[0]).astype(np.int64)
    z = rng.integers(0, k, size=words.shape[0]).astype(np.int64)
    doc_topic = np.zeros((n_docs, k), np.int64)
    word_topic = np.zeros((vocab, k), np.int64)
    np.add.at(doc_topic, (doc_ids, z), 1)
    np.add.at(word_topic, (words, z), 1)
    return [words, doc_ids, z, doc_topic, word_topic, word_topic.sum(axis=0)], rng


@needs_numba
@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("update", [True, False])
def test_numba_and_numpy_paths_bit_identical(seed, update):
    state_a, rng = _state(seed)
    state_b = [a.copy() for a in state_a]
    alpha, beta = 0.1 * (seed + 1), 0.01
    vbeta = state_a[4].shape[0] * beta
    for _ in range(10):
        u = rng.random(state_a[0].shape[0])
        _kernels.gibbs_sweep_numba(*state_a, u, alpha, beta, vbeta, update)
        _kernels.gibbs_sweep_numpy(*state_b, u, alpha, beta, vbeta, update)
    for a, b in zip(state_a, state_b):
        np.testing.assert_array_equal(a, b)


def test_env_flag_selects_numpy_path_with_same_result():
    docs = [["a", "b", "c", "a"], ["c", "d", "d"], ["a", "e"]] * 4
    _, theta = fit_lda(docs, n_topics=3, iterations=25, seed=2)
    code = (
        "import sys, numpy as np\n"
        "from notefusion import _kernels\n"
        "from notefusion.topicmodel import fit_lda\n"
        "assert _kernels.USE_NUMBA is False\n"
        "docs = [['a','b','c','a'], ['c','d','d'], ['a','e']] * 4\n"
        "_, t = fit_lda(docs, n_topics=3, iterations=25, seed=2)\n"
        "sys.stdout.write(t.tobytes().hex())\n"
    )
    env = dict(os.environ, NOTEFUSION_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout == theta.tobytes().hex()
