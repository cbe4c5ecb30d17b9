"""Compare the numba and numpy simulation backends.

Times one batch fitness evaluation (decode and simulate every pattern) for
the XOR and iris workloads, plus a single fine-grained neuron, and checks
that both backends return identical first spike times.

    python benchmarks/bench_kernels.py [--repeats 3]
"""
import argparse
import time

import numpy as np

from srmga import kernels
from srmga.evaluate import TaskEvaluator
from srmga.srm import SimParams, simulate_neuron
from srmga.tasks import GrfConfig, iris_encode, iris_load, kfold_split, xor_patterns


def _best_of(fn, repeats):
    out, best = None, float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return out, best


def workloads():
    rng = np.random.default_rng(0)
    xor = TaskEvaluator((3, 5, 1), "integer", SimParams(), xor_patterns())
    samples = iris_load()
    pats = iris_encode(samples, GrfConfig(), 1.0)
    train, _ = kfold_split(samples, 10, 5)[0]
    iris = TaskEvaluator((33, 8, 1), "integer", SimParams(theta=6.0), [pats[i] for i in train])
    arrivals = [(float(t), float(w)) for t, w in
                zip(rng.integers(1, 4000, 40) / 100, rng.choice([-1, 0.5, 1, 2], 40))]
    fine = SimParams(dt_ms=0.01)

    def batch(ev, n):
        bits = rng.integers(0, 2, (n, ev.chromosome_length), dtype=np.uint8)
        return lambda backend: _first(ev, bits, backend)

    return [
        ("xor [3 5 1], 200 chromosomes x 4 patterns", batch(xor, 200)),
        ("iris [33 8 1], 100 chromosomes x 30 patterns", batch(iris, 100)),
        ("single neuron, 40 arrivals, dt=0.01 (5001 samples)",
         lambda backend: simulate_neuron(arrivals, fine, backend=backend).spikes),
    ]


def _first(ev, bits, backend):
    ev.backend = backend
    try:
        return ev.first_spikes(bits)
    finally:
        ev.backend = None


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    if not kernels.HAS_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'workload':52s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s}  match")
    for name, run in workloads():
        run("numba")  # JIT warm-up
        a, t_nb = _best_of(lambda: run("numba"), args.repeats)
        b, t_np = _best_of(lambda: run("numpy"), args.repeats)
        same = np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True)
        print(f"{name:52s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:7.1f}x  {same}")


if __name__ == "__main__":
    main()
