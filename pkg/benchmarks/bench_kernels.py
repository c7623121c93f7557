"""Compare the compiled and NumPy kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3]

Times the two hot loops on representative workloads: a red-sideband
pi pulse at Omega/omega_z = 0.05 through the numeric propagator, and a
100-seed Doppler ensemble.
"""
import argparse
import math
import time

import numpy as np

from trapion import _kernels
from trapion.cooling import DopplerParams, doppler_ensemble
from trapion.dynamics import rsb_pi_pulse_infidelity
from trapion.state import ChainSpec


def _best(fn, repeat):
    times = []
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def bench_propagator(backend, repeat):
    spec = ChainSpec(n_ions=1, fock_cutoff=20, omega_rabi=0.05 * 2 * math.pi * 1e6)
    return _best(lambda: rsb_pi_pulse_infidelity(spec, backend=backend), repeat)


def bench_doppler(backend, repeat):
    p = DopplerParams.calcium40()
    return _best(lambda: np.mean([abs(t.final_velocity) for t in doppler_ensemble(p, range(100), 2000, backend)]), repeat)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    backends = ["python"]
    try:
        _kernels.get_backend("cython")
        backends.append("cython")
    except ImportError:
        print("compiled kernels not built; timing the NumPy backend only")

    rows = []
    for name, bench in (("rsb pi pulse (d=20)", bench_propagator), ("doppler 100 x 2000", bench_doppler)):
        timings = {}
        for backend in backends:
            seconds, value = bench(backend, args.repeat)
            timings[backend] = seconds
            print(f"{name:<22} {backend:<7} {seconds * 1e3:10.1f} ms   result {value:.6g}")
        if len(timings) == 2:
            rows.append((name, timings["python"] / timings["cython"]))
    for name, speedup in rows:
        print(f"{name:<22} speedup {speedup:.1f}x")


if __name__ == "__main__":
    main()
