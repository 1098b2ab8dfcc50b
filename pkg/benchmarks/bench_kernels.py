"""Compiled vs pure-Python kernels.

Times each kernel on both backends with identical inputs, then runs one
end-to-end workload (the universal algorithm on a corrupted labelled ring)
in a subprocess per backend, the pure one forced with SNAPSTAB_PURE=1.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--number 2000]
"""

import argparse
import os
import random
import subprocess
import sys
import timeit

from snapstab import kernels
from snapstab.engine import Corruption, corrupt_initial
from snapstab.graph import ring, small_digraphs
from snapstab.mazurkiewicz import EnumDomains, build_universal_algorithm
from snapstab.tasks import single_b_family, size_pair_for

WORKLOAD = """
import random, time
from snapstab import kernels
from snapstab.engine import Corruption, DaemonPolicy, corrupt_initial, run
from snapstab.graph import single_b_ring
from snapstab.mazurkiewicz import EnumDomains, build_universal_algorithm, random_request_set
from snapstab.tasks import single_b_family, size_pair_for
fam = single_b_family()
g = single_b_ring(5)
alg = build_universal_algorithm(size_pair_for(fam), fam, domains=EnumDomains(labels=("a", "b")))
rng = random.Random(5)
t0 = time.perf_counter()
steps = 0
for k, cfg in enumerate(corrupt_initial(g, alg, Corruption("random", seed=5, count=60))):
    tr = run(g, alg, DaemonPolicy("asynchronous", k), requests=random_request_set(g, rng), budget=5000, initial=cfg)
    steps += tr.steps
print(kernels.BACKEND, steps, time.perf_counter() - t0)
"""


def kernel_inputs():
    rng = random.Random(0)
    graphs = small_digraphs(4, ("a", "b"))[:200] + [ring(64)]
    csrs = [g.csr for g in graphs]
    colors = [[rng.randrange(2) for _ in g.vertices] for g in graphs]
    masks = [(bytearray(rng.randrange(2) for _ in g.vertices), list(range(0, len(g.vertices), 2))) for g in graphs]
    fam = single_b_family()
    g = ring(4, list("aaab"))
    alg = build_universal_algorithm(size_pair_for(fam), fam, domains=EnumDomains(labels=("a", "b")))
    calls = []
    for cfg in corrupt_initial(g, alg, Corruption("random", seed=1, count=100)):
        for i in range(len(g.vertices)):
            nb = tuple(cfg.states[j] for j in g.in_positions[i])
            calls.append((cfg.states[i], nb, i == 0))
    return csrs, colors, masks, calls


def bench_kernel(impl, name, data, number, repeat):
    csrs, colors, masks, calls = data

    def refine():
        for (ptr, src), c in zip(csrs, colors):
            impl.refine_colors(ptr, src, c)

    def distances():
        for ptr, src in csrs:
            impl.reverse_distances(ptr, src, 0, 8)

    def influence():
        for (ptr, src), (m, act) in zip(csrs, masks):
            impl.influence_update(m, act, ptr, src)

    def select():
        for c, nb, req in calls:
            impl.enum_select(c, nb, req, 8, False, lambda s: False)

    fn = {"refine_colors": refine, "reverse_distances": distances, "influence_update": influence, "enum_select": select}[name]
    return min(timeit.repeat(fn, number=max(1, number // 100), repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    ap.add_argument("--skip-workload", action="store_true")
    args = ap.parse_args(argv)

    found = kernels.backends()
    if "compiled" not in found:
        print("compiled extension not built; only the pure backend is available")
    data = kernel_inputs()
    print(f"{'kernel':<20}" + "".join(f"{b:>12}" for b in found) + ("     speedup" if len(found) == 2 else ""))
    for name in ("refine_colors", "reverse_distances", "influence_update", "enum_select"):
        times = {b: bench_kernel(impl, name, data, args.number, args.repeat) for b, impl in found.items()}
        row = f"{name:<20}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in found)
        if len(found) == 2:
            row += f"{times['python'] / times['compiled']:>11.1f}x"
        print(row)

    if args.skip_workload:
        return 0
    print("\nend-to-end: universal algorithm, 60 corrupted runs on the 5-ring a,a,a,a,b")
    results = {}
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("SNAPSTAB_PURE", None)
        if pure:
            env["SNAPSTAB_PURE"] = "1"
        out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, capture_output=True, text=True, check=True).stdout.split()
        backend, steps, secs = out[0], int(out[1]), float(out[2])
        results[backend] = secs
        print(f"  {backend:<9} {steps} steps in {secs:.2f}s")
    if len(results) == 2:
        print(f"  speedup {results['python'] / results['compiled']:.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
