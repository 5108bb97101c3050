"""Time the compiled and pure-Python matching kernels on the synthetic suite.

    python3 benchmarks/bench_kernels.py [--molecules 300] [--repeat 3]

Each row is the best of ``--repeat`` runs.  The mining rows exercise the
kernels through the real search; the others call them directly.
"""
import argparse
import time

from molfrag import _kernels as K
from molfrag.generate import generate, synthetic_suite
from molfrag.miner import MiningTask, TopK, enumerate_restricted_paths, mine_topk
from molfrag.patterns import initial_patterns


def best_of(repeat, fn):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def workloads(datasets):
    for ds in datasets:  # build the cached CSR batches outside the timings
        ds.batch
        for mol in ds.molecules:
            mol.batch
    # frontier of single-edge graph patterns, fixed up front so both backends see the same work
    frontier = []
    for ds in datasets:
        for pattern, occ in initial_patterns("graph", ds)[:10]:
            frontier.append((ds.batch, pattern, occ))

    def extensions():
        for batch, pattern, occ in frontier:
            K.extensions(pattern.plan, batch, occ, *pattern._masks())

    def occurs_many():
        for batch, pattern, _ in frontier:
            K.occurs_many(pattern.plan, batch)

    def walk_keys():
        for ds in datasets:
            for m in range(len(ds)):
                K.walk_keys(ds.batch, m, 6)

    def topk_tree():
        for ds in datasets:
            mine_topk(MiningTask("tree", TopK(20), ds))

    def paths():
        for ds in datasets:
            for mol in ds.molecules:
                mol.__dict__.pop("_walk_keys", None)  # walk keys are cached per molecule
            enumerate_restricted_paths(ds, 6, 1)

    return {"extensions": extensions, "occurs_many": occurs_many, "walk_keys(L=6)": walk_keys,
            "mine_topk tree k=20": topk_tree, "restricted paths L=6": paths}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--molecules", type=int, default=300)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    datasets = [generate(spec, seed).dataset for seed, spec in enumerate(synthetic_suite(args.molecules))]
    jobs = workloads(datasets)
    backends = K.available_backends()
    previous = K.BACKEND
    results = {}
    try:
        for name in backends:
            K.use_backend(name)
            for job, fn in jobs.items():
                results[job, name] = best_of(args.repeat, fn)
    finally:
        K.use_backend(previous)

    print(f"{'kernel':<24}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for job in jobs:
        row = f"{job:<24}" + "".join(f"{results[job, b]:>11.3f}s" for b in backends)
        if len(backends) > 1:
            row += f"{results[job, 'python'] / results[job, 'cython']:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
