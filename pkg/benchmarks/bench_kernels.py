"""Time the numba kernels against their numpy fallbacks and a full GBA+SIC run.

    python benchmarks/bench_kernels.py [--repeat 5]

The end-to-end rows run in subprocesses so URLLCGRAPH_DISABLE_NUMBA takes
effect at import time.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from urllcgraph import kernels
from urllcgraph.core import demand_matrix
from urllcgraph.params import SystemParams


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases():
    p = SystemParams()
    rng = np.random.default_rng(0)
    cost = rng.integers(-100, 100, (40, 160)).astype(float)

    n, c = 160, 7
    dist = rng.uniform(1, 50, n)
    interf = 1 + rng.uniform(0, 4, c)
    demand = demand_matrix(dist, interf, p).astype(np.int64)
    pa, pb = np.triu_indices(n, 1)
    tdist = rng.integers(0, 36, pa.size)
    table_args = (pa.astype(np.int64), pb.astype(np.int64), tdist.astype(np.int64), dist, interf, demand,
                  p.transmit_snr, p.pathloss_exp, float(p.packet_bits), p.q, p.reliability, p.delay_slots,
                  p.pairing_limit)

    T = p.cycle_slots
    beta = rng.integers(0, 30, c)
    busy = np.zeros((c, T), dtype=bool)
    for ch in range(c):
        busy[ch, :beta[ch]] = rng.random(beta[ch]) < 0.7
    issue = rng.integers(1, T + 1, (n, c))
    window = np.full((n, c), p.delay_slots)
    comp_args = (beta, busy, issue, window, demand)

    trials = 20000
    snr = rng.uniform(1, 100, (n, c))
    fading = rng.standard_exponential((trials, c, n))
    dev = np.arange(n)
    chan = rng.integers(0, c, n)
    theta = rng.uniform(0.5, 4, n)
    partner = np.full(n, -1)
    mc_args = (snr, fading, False, dev, chan, theta, partner, theta, n)

    return [
        ("hungarian 40x160", kernels._hungarian_py, kernels._hungarian_nb, (cost,)),
        ("pair_table N=160", kernels._pair_table_py, kernels._pair_table_nb, table_args),
        ("candidate_completions", kernels._candidate_completions_py, kernels._candidate_completions_nb, comp_args),
        ("mc_success_counts 2e4", lambda *a: kernels.mc_success_counts(*a, use_numba=False),
         lambda *a: kernels.mc_success_counts(*a, use_numba=True), mc_args),
    ]


END_TO_END = (
    "import time\n"
    "from urllcgraph.allocators import gba_sic\n"
    "from urllcgraph.scenario import generate_scenario\n"
    "from urllcgraph.params import SystemParams\n"
    "p = SystemParams()\n"
    "gba_sic(generate_scenario(40, 3, p, 99))\n"
    "t0 = time.perf_counter()\n"
    "for seed in range(5):\n"
    "    gba_sic(generate_scenario(160, 7, p, seed))\n"
    "print((time.perf_counter() - t0) / 5)\n"
)


def end_to_end(flag):
    env = dict(os.environ, URLLCGRAPH_DISABLE_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"{'case':<26}{'numpy (s)':>12}{'numba (s)':>12}{'speedup':>10}")
    if kernels.numba is None:
        print("numba not installed; only the end-to-end numpy row is meaningful")
    else:
        for name, py, nb, a in kernel_cases():
            t_py = best_of(lambda: py(*a), args.repeat)
            t_nb = best_of(lambda: nb(*a), args.repeat)
            print(f"{name:<26}{t_py:>12.5f}{t_nb:>12.5f}{t_py / t_nb:>9.1f}x")
    t_py = end_to_end("1")
    t_nb = end_to_end("0")
    print(f"{'gba_sic N=160 C=7':<26}{t_py:>12.5f}{t_nb:>12.5f}{t_py / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
