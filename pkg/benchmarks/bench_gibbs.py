"""Time one collapsed Gibbs sweep: numba kernel vs the pure-numpy fallback.

    python benchmarks/bench_gibbs.py --tokens 20000 --topics 50 --repeat 3
"""

import argparse
import time

import numpy as np

from notefusion import _kernels


def make_state(n_tokens, n_docs, vocab, topics, seed):
    rng = np.random.default_rng(seed)
    words = rng.integers(0, vocab, n_tokens).astype(np.int64)
    doc_ids = np.sort(rng.integers(0, n_docs, n_tokens)).astype(np.int64)
    z = rng.integers(0, topics, n_tokens).astype(np.int64)
    doc_topic = np.zeros((n_docs, topics), np.int64)
    word_topic = np.zeros((vocab, topics), np.int64)
    np.add.at(doc_topic, (doc_ids, z), 1)
    np.add.at(word_topic, (words, z), 1)
    return [words, doc_ids, z, doc_topic, word_topic, word_topic.sum(axis=0)], rng.random(n_tokens)


def time_sweep(fn, state, uniforms, alpha, beta, vbeta, repeat):
    best = float("inf")
    for _ in range(repeat):
        s = [a.copy() for a in state]
        t0 = time.perf_counter()
        fn(*s, uniforms, alpha, beta, vbeta, True)
        best = min(best, time.perf_counter() - t0)
    return best, s[2]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--tokens", type=int, default=20000)
    ap.add_argument("--docs", type=int, default=400)
    ap.add_argument("--vocab", type=int, default=2000)
    ap.add_argument("--topics", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    state, uniforms = make_state(args.tokens, args.docs, args.vocab, args.topics, args.seed)
    alpha, beta = 5.0 / args.topics, 0.01
    vbeta = args.vocab * beta
    print(f"{args.tokens} tokens, {args.topics} topics, best of {args.repeat}")
    if not _kernels.NUMBA_AVAILABLE:
        print("numba not importable; timing the numpy path only")
    else:
        _kernels.gibbs_sweep_numba(*[a.copy() for a in state], uniforms, alpha, beta, vbeta, True)  # compile
    t_np, z_np = time_sweep(_kernels.gibbs_sweep_numpy, state, uniforms, alpha, beta, vbeta, args.repeat)
    print(f"numpy  {t_np * 1e3:10.1f} ms/sweep")
    if _kernels.NUMBA_AVAILABLE:
        t_nb, z_nb = time_sweep(_kernels.gibbs_sweep_numba, state, uniforms, alpha, beta, vbeta, args.repeat)
        print(f"numba  {t_nb * 1e3:10.1f} ms/sweep")
        print(f"speedup {t_np / t_nb:.0f}x, identical assignments: {bool(np.array_equal(z_np, z_nb))}")


if __name__ == "__main__":
    main()
