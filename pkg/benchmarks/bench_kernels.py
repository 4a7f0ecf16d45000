"""Benchmark the compiled QAM kernels against the pure-numpy fallback.

Times map/demap/bit-compare in isolation and the full OFDM link run
end-to-end under each backend. Run:

    python benchmarks/bench_kernels.py [--bits 2000000] [--reps 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from slicebench import kernels, linksim


def _best_of(reps: int, fn, *args) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_primitives(n_bits: int, reps: int) -> None:
    rng = np.random.default_rng(0)
    print(f"\nprimitives, {n_bits:,} bits, best of {reps}")
    print(f"{'kernel':<18}{'qm':>4}{'numpy [ms]':>12}{'compiled [ms]':>15}{'speedup':>9}")
    for qm in (2, 4, 6):
        bits = rng.integers(0, 2, size=(n_bits // qm) * qm, dtype=np.uint8)
        symbols = kernels.get_backend("numpy").map_bits(bits, qm)
        noisy = symbols + 0.1 * (
            rng.standard_normal(symbols.size) + 1j * rng.standard_normal(symbols.size)
        )
        other = kernels.get_backend("numpy").demap_hard(noisy, qm)
        for name, args in (
            ("map_bits", (bits, qm)),
            ("demap_hard", (noisy, qm)),
            ("count_bit_errors", (bits, other)),
        ):
            times = {}
            for backend in kernels.available_backends():
                fn = getattr(kernels.get_backend(backend), name)
                times[backend] = _best_of(reps, fn, *args)
            if "compiled" in times:
                speedup = times["numpy"] / times["compiled"]
                print(
                    f"{name:<18}{qm:>4}{times['numpy']*1e3:>12.3f}"
                    f"{times['compiled']*1e3:>15.3f}{speedup:>8.2f}x"
                )
            else:
                print(f"{name:<18}{qm:>4}{times['numpy']*1e3:>12.3f}{'n/a':>15}{'':>9}")


def bench_link(reps: int) -> None:
    spec = linksim.LinkRunSpec(
        prbs=106, mcs=28, prx_db=-10.0, noise_db=-18.0, n_ofdm_symbols=200, seed=1
    )
    print(f"\nsimulate_link end-to-end ({spec.n_ofdm_symbols} symbols, 64-QAM)")
    results = {}
    active = kernels.BACKEND
    try:
        for backend in kernels.available_backends():
            kernels.force_backend(backend)
            results[backend] = _best_of(reps, linksim.simulate_link, spec)
            print(f"  {backend:<10} {results[backend]*1e3:8.1f} ms")
    finally:
        kernels.force_backend(active)
    if "compiled" in results:
        print(f"  speedup    {results['numpy']/results['compiled']:8.2f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bits", type=int, default=2_000_000)
    parser.add_argument("--reps", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND}; available: {kernels.available_backends()}")
    bench_primitives(args.bits, args.reps)
    bench_link(args.reps)


if __name__ == "__main__":
    main()
