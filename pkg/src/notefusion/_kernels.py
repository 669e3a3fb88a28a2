"""Collapsed Gibbs sweep kernels for LDA.

Two implementations of the same sweep are kept side by side: a numba
``@njit`` version and a pure-numpy one. Both consume the same pre-drawn
uniforms and perform the same floating-point operations in the same order,
so they produce bit-identical assignments. The numba path is used unless
numba is missing or ``NOTEFUSION_DISABLE_NUMBA`` is set to a truthy value.
"""

import os

import numpy as np

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

_FLAG = os.environ.get("NOTEFUSION_DISABLE_NUMBA", "").strip().lower()
USE_NUMBA = NUMBA_AVAILABLE and _FLAG not in {"1", "true", "yes", "on"}


def gibbs_sweep_numpy(words, doc_ids, z, doc_topic, word_topic, topic_totals,
                      uniforms, alpha, beta, vbeta, update_topics):
    """One sweep over every token, resampling its topic in place.

    ``word_topic`` is laid out (V, K). When ``update_topics`` is false the
    topic-word statistics are treated as frozen (fold-in inference).
    """
    n_topics = topic_totals.shape[0]
    for i in range(words.shape[0]):
        w = words[i]
        d = doc_ids[i]
        k = z[i]
        doc_topic[d, k] -= 1
        if update_topics:
            word_topic[w, k] -= 1
            topic_totals[k] -= 1
        p = (doc_topic[d] + alpha) * (word_topic[w] + beta) / (topic_totals + vbeta)
        cum = np.cumsum(p)
        r = uniforms[i] * cum[-1]
        k = int(np.searchsorted(cum, r, side="right"))
        if k >= n_topics:
            k = n_topics - 1
        z[i] = k
        doc_topic[d, k] += 1
        if update_topics:
            word_topic[w, k] += 1
            topic_totals[k] += 1


def _gibbs_sweep_loops(words, doc_ids, z, doc_topic, word_topic, topic_totals,
                       uniforms, alpha, beta, vbeta, update_topics):
    n_topics = topic_totals.shape[0]
    cum = np.empty(n_topics, dtype=np.float64)
    for i in range(words.shape[0]):
        w = words[i]
        d = doc_ids[i]
        k = z[i]
        doc_topic[d, k] -= 1
        if update_topics:
            word_topic[w, k] -= 1
            topic_totals[k] -= 1
        total = 0.0
        for j in range(n_topics):
            total += (doc_topic[d, j] + alpha) * (word_topic[w, j] + beta) / (topic_totals[j] + vbeta)
            cum[j] = total
        r = uniforms[i] * total
        k = 0
        while k < n_topics - 1 and cum[k] <= r:
            k += 1
        z[i] = k
        doc_topic[d, k] += 1
        if update_topics:
            word_topic[w, k] += 1
            topic_totals[k] += 1


if NUMBA_AVAILABLE:
    gibbs_sweep_numba = numba.njit(cache=True, nogil=True)(_gibbs_sweep_loops)
else:  # pragma: no cover
    gibbs_sweep_numba = None


def gibbs_sweep(words, doc_ids, z, doc_topic, word_topic, topic_totals,
                uniforms, alpha, beta, vbeta, update_topics=True):
    """Dispatch to the numba kernel or the numpy fallback."""
    fn = gibbs_sweep_numba if USE_NUMBA else gibbs_sweep_numpy
    fn(words, doc_ids, z, doc_topic, word_topic, topic_totals,
       uniforms, float(alpha), float(beta), float(vbeta), bool(update_topics))
