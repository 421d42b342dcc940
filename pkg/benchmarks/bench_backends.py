"""Time the compiled and numpy kernel backends side by side.

    python benchmarks/bench_backends.py [--repeat 5]

Kernel timings use the full 330-homotop Si11 space; the end-to-end rows
time one QGPR run of 60 cycles under each backend.
"""
import argparse
import time

from qalsearch import _backend
from qalsearch.config import AlConfig
from qalsearch.descriptors import MbtrParams
from qalsearch.driver import descriptor_matrix, prepare, run_single
from qalsearch.encodings import EncodingSpec, compiled_template


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = _backend.available()
    cfg = AlConfig(model="qgpr", kernel="pqk", feature_map="highdim", pca_components=8, runs=1)
    problem = prepare(cfg)
    X = problem.features
    enc = EncodingSpec("HighDim", 8, 4)
    program = compiled_template(enc)
    states = backends["python"].encode_batch(X, 8, *program)
    feats = backends["python"].bloch_batch(states, 8)

    cases = {
        "encode_batch 330x8q": lambda m: m.encode_batch(X, 8, *program),
        "fidelity_matrix 330x330": lambda m: m.fidelity_matrix(states, states),
        "bloch_batch 330x8q": lambda m: m.bloch_batch(states, 8),
        "sqdist_matrix 330x330x24": lambda m: m.sqdist_matrix(feats, feats),
    }
    print(f"{'kernel':28s}" + "".join(f"{name:>12s}" for name in backends) + f"{'speedup':>10s}")
    for label, fn in cases.items():
        t = {name: best_of(lambda: fn(mod), args.repeat) for name, mod in backends.items()}
        row = f"{label:28s}" + "".join(f"{t[n] * 1e3:10.2f}ms" for n in backends)
        if "cython" in t:
            row += f"{t['python'] / t['cython']:9.1f}x"
        print(row)

    for name in backends:
        with _backend.use_backend(name):
            t_desc = best_of(lambda: descriptor_matrix(problem.space, MbtrParams()), 1)
            fresh = prepare(cfg)
            t0 = time.perf_counter()
            run_single(fresh, cfg, 0)
            t_run = time.perf_counter() - t0
        print(f"[{name}] mbtr2 x330: {t_desc * 1e3:.1f} ms   QGPR-HighDim-PQK-PCA8 run: {t_run:.2f} s")


if __name__ == "__main__":
    main()
