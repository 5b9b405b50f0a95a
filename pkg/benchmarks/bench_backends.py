#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the four hot sequence loops on identical workloads, checks that both
backends produce the same token streams, and prints per-sequence timings
with the speedup.  The numba path is warmed up first so JIT compilation is
excluded.

Usage:
    python benchmarks/bench_backends.py [--count 50] [--length 200]
"""

import argparse
import time

import numpy as np

from watermod.kernels import GateParams, ModelParams, get_impl


def build_workload(count: int, length: int):
    rng = np.random.default_rng(7)
    mp = ModelParams(model_seed=np.uint64(1), vocab=64, order=4, beta=17.0, eos_gap=2.0, eos=0)
    gp = GateParams(h_scale=1.2, ent_code=0, eta=1.0)
    digits = np.array([2, 3, 3, 2, 1, 0, 3, 2], dtype=np.int64)
    jobs = []
    for _ in range(count):
        prompt = rng.integers(1, mp.vocab, size=8).astype(np.int64)
        key = np.uint64(rng.integers(0, 1 << 64, dtype=np.uint64))
        jobs.append((prompt, key))
    return mp, gp, digits, jobs


def run_backend(impl, mp, gp, digits, jobs, length):
    timings = {}
    outputs = {}

    t0 = time.perf_counter()
    zb_tokens = [impl.zb_generate(p, length, k, 1.0, gp, mp)[0] for p, k in jobs]
    timings["zb_generate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    zb_hits = [impl.zb_detect(t, 8, k, gp, mp)[0] for t, (_, k) in zip(zb_tokens, jobs)]
    timings["zb_detect"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mb_tokens = [impl.mb_generate(p, length, k, 2.5, 4, digits, mp)[0] for p, k in jobs]
    timings["mb_generate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    tallies = [impl.mb_recover(t, 8, k, 4, 8, mp)[0] for t, (_, k) in zip(mb_tokens, jobs)]
    timings["mb_recover"] = time.perf_counter() - t0

    outputs["zb_tokens"] = zb_tokens
    outputs["zb_hits"] = zb_hits
    outputs["mb_tokens"] = mb_tokens
    outputs["tallies"] = tallies
    return timings, outputs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--count", type=int, default=50, help="sequences per operation")
    parser.add_argument("--length", type=int, default=200, help="generated tokens per sequence")
    args = parser.parse_args()

    mp, gp, digits, jobs = build_workload(args.count, args.length)
    numba_impl = get_impl("numba")
    numpy_impl = get_impl("numpy")

    # warm up the JIT outside the timed region
    warm_prompt = jobs[0][0]
    numba_impl.zb_detect(
        numba_impl.zb_generate(warm_prompt, 16, jobs[0][1], 1.0, gp, mp)[0], 8, jobs[0][1], gp, mp
    )
    numba_impl.mb_recover(
        numba_impl.mb_generate(warm_prompt, 16, jobs[0][1], 2.5, 4, digits, mp)[0],
        8, jobs[0][1], 4, 8, mp,
    )

    numba_times, numba_out = run_backend(numba_impl, mp, gp, digits, jobs, args.length)
    numpy_times, numpy_out = run_backend(numpy_impl, mp, gp, digits, jobs, args.length)

    mismatches = sum(
        not np.array_equal(a, b)
        for a, b in zip(numba_out["zb_tokens"] + numba_out["mb_tokens"],
                        numpy_out["zb_tokens"] + numpy_out["mb_tokens"])
    )
    mismatches += sum(
        not np.array_equal(a, b) for a, b in zip(numba_out["tallies"], numpy_out["tallies"])
    )
    mismatches += sum(a != b for a, b in zip(numba_out["zb_hits"], numpy_out["zb_hits"]))

    print(f"workload: {args.count} sequences x {args.length} tokens, vocab {mp.vocab}")
    print(f"backend outputs identical: {'yes' if mismatches == 0 else f'NO ({mismatches})'}")
    print(f"{'operation':<12} {'numba ms/seq':>14} {'numpy ms/seq':>14} {'speedup':>9}")
    for op in ("zb_generate", "zb_detect", "mb_generate", "mb_recover"):
        a = numba_times[op] / args.count * 1e3
        b = numpy_times[op] / args.count * 1e3
        print(f"{op:<12} {a:>14.3f} {b:>14.3f} {b / a:>8.1f}x")
    total_a = sum(numba_times.values())
    total_b = sum(numpy_times.values())
    print(f"{'total':<12} {total_a * 1e3 / args.count:>14.3f} "
          f"{total_b * 1e3 / args.count:>14.3f} {total_b / total_a:>8.1f}x")


if __name__ == "__main__":
    main()
