#!/usr/bin/env python3
"""Benchmark the compiled text-scan kernel against the pure-Python fallback.

Usage:
    python benchmarks/bench_scan.py [--texts 2000] [--words 120]

Builds a synthetic comment corpus, runs tokenize/sentence/syllable scans
through both kernels, verifies they agree, and prints throughput for each.
"""

from __future__ import annotations

import argparse
import random
import time

from flameward.textmetrics import _scan_py

try:
    from flameward.textmetrics import _scan
except ImportError:
    _scan = None

WORDS = (
    "you", "we", "the", "never", "always", "patch", "idiot", "fine", "sure",
    "STOP", "actually", "don't", "argument", "listen", "because", "wrong",
    "maybe", "whatever", "ranked", "screen", "dinner", "zombie", "e.g",
)
PUNCT = (". ", "! ", "? ", ", ", " ")


def build_corpus(n_texts: int, words_per_text: int, seed: int = 7) -> list[str]:
    rng = random.Random(seed)
    corpus = []
    for _ in range(n_texts):
        parts = []
        for _ in range(words_per_text):
            parts.append(rng.choice(WORDS))
            parts.append(rng.choice(PUNCT))
        corpus.append("".join(parts))
    return corpus


def run(kernel, corpus: list[str]) -> tuple[float, int]:
    start = time.perf_counter()
    total_tokens = 0
    for text in corpus:
        tokens, _, _, _ = kernel.scan(text)
        kernel.syllable_counts(tokens)
        total_tokens += len(tokens)
    return time.perf_counter() - start, total_tokens


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--texts", type=int, default=2000)
    parser.add_argument("--words", type=int, default=120)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    corpus = build_corpus(args.texts, args.words)

    if _scan is not None:
        sample = corpus[: min(200, len(corpus))]
        for text in sample:
            assert _scan.scan(text) == _scan_py.scan(text), "kernel mismatch"

    print(f"corpus: {args.texts} texts x ~{args.words} words, best of {args.repeat}\n")
    print(f"{'kernel':<10} {'time (s)':>10} {'tokens/s':>14}")
    results = {}
    for name, kernel in (("pure", _scan_py), ("compiled", _scan)):
        if kernel is None:
            print(f"{name:<10} {'not built':>10}")
            continue
        best = None
        tokens = 0
        for _ in range(args.repeat):
            elapsed, tokens = run(kernel, corpus)
            best = elapsed if best is None else min(best, elapsed)
        results[name] = best
        print(f"{name:<10} {best:>10.3f} {tokens / best:>14,.0f}")

    if "pure" in results and "compiled" in results:
        print(f"\nspeedup: {results['pure'] / results['compiled']:.2f}x")
    elif _scan is None:
        print("\nbuild the extension first: python setup.py build_ext --inplace")


if __name__ == "__main__":
    main()
