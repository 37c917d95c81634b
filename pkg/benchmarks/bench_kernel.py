"""Time the compiled trial kernel against the pure-Python twin.

Usage: python benchmarks/bench_kernel.py [--nodes 25] [--P 1.0] [--trials 5]

Both backends run the same trial seeds; their traces are checked for
equality before timings are reported.
"""

import argparse
import time

import numpy as np

from symsync.engine import run_trial
from symsync.kernel import BACKENDS
from symsync.params import CampaignConfig, derive_trial_seed


def time_backend(config, seeds, backend):
    results = []
    start = time.perf_counter()
    for s in seeds:
        results.append(run_trial(config, s, backend=backend, keep_trace=True))
    return (time.perf_counter() - start) / len(seeds), results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=25)
    ap.add_argument("--P", type=float, default=1.0)
    ap.add_argument("--trials", type=int, default=5)
    args = ap.parse_args(argv)
    if "cython" not in BACKENDS:
        raise SystemExit("compiled kernel not built; run `pip install -e . --no-build-isolation`")

    config = CampaignConfig(n_nodes=args.nodes, wake_probability=args.P)
    seeds = [derive_trial_seed(config.base_seed, i) for i in range(args.trials)]
    run_trial(config, seeds[0], backend="cython")  # warm-up
    t_c, res_c = time_backend(config, seeds, "cython")
    t_py, res_py = time_backend(config, seeds, "python")
    for a, b in zip(res_c, res_py):
        assert np.array_equal(a.trace.kinds, b.trace.kinds) and np.array_equal(a.trace.tx_start, b.trace.tx_start)

    print(f"nodes={args.nodes} P={args.P:g} trials={args.trials} (outputs identical)")
    print(f"python  {t_py * 1e3:10.1f} ms/trial")
    print(f"cython  {t_c * 1e3:10.1f} ms/trial")
    print(f"speedup {t_py / t_c:10.1f}x")


if __name__ == "__main__":
    main()
