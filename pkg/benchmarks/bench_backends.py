"""Compare the compiled integer kernels against the numpy fallback.

Runs the same randomized layer workload through both implementations,
checks bit-identical results, and reports per-frame timing.

    python3 benchmarks/bench_backends.py [--neurons N] [--inputs M]
                                         [--frames K] [--repeat R]
"""

import argparse
import time

import numpy as np

from srcsim import _kernels_py

try:
    from srcsim import _kernels_cy
except ImportError:
    _kernels_cy = None


def make_workload(neurons, inputs, frames, seed=0):
    rng = np.random.default_rng(seed)
    w = rng.integers(-255, 256, (neurons, inputs)).astype(np.int64)
    spikes = (rng.random((frames, inputs)) < 0.25).astype(np.uint8)
    bits = rng.random((10, neurons)) < 0.3
    k_dec = np.where(bits, 10, -1).astype(np.int64)
    return w, spikes, k_dec


def run(mod, w, spikes, k_dec):
    neurons = w.shape[0]
    h = np.zeros(neurons, np.int64)
    hs = np.zeros(neurons, np.int64)
    icur = np.zeros(neurons, np.int64)
    out = np.zeros(neurons, np.uint8)
    acc = np.zeros(k_dec.shape[0], np.int64)
    t0 = time.perf_counter()
    for frame in spikes:
        mod.src_layer_step_int(h, hs, icur, w, frame, out,
                               902, 100, 500, -3000, 0, 0, 500)
        mod.ir_accumulate_int(acc, k_dec, out)
    dt = time.perf_counter() - t0
    return dt, (h, hs, icur, out, acc)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--neurons", type=int, default=256)
    ap.add_argument("--inputs", type=int, default=784)
    ap.add_argument("--frames", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    w, spikes, k_dec = make_workload(args.neurons, args.inputs, args.frames)
    mods = {"numpy": _kernels_py}
    if _kernels_cy is not None:
        mods["cython"] = _kernels_cy
    else:
        print("compiled kernels not built, timing numpy only")

    best = {}
    states = {}
    for name, mod in mods.items():
        times = []
        for _ in range(args.repeat):
            dt, state = run(mod, w, spikes, k_dec)
            times.append(dt)
        best[name] = min(times)
        states[name] = state
        per_frame = best[name] / args.frames * 1e6
        print(f"{name:>6}: {best[name]:.4f}s for {args.frames} frames "
              f"({per_frame:.1f} us/frame, {args.neurons}x{args.inputs})")

    if len(states) == 2:
        for a, b in zip(states["numpy"], states["cython"]):
            assert np.array_equal(a, b), "backend results diverged"
        print(f"results bit-identical; speedup x{best['numpy'] / best['cython']:.2f}")


if __name__ == "__main__":
    main()
