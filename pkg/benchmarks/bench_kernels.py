"""Compare the numba and numpy kernel paths on a representative workload.

    python3 benchmarks/bench_kernels.py [--points 8001] [--repeat 5]
"""

import argparse
import time

import numpy as np

from qmfs import _kernels
from qmfs.dynamics import assemble_drift, output_routing
from qmfs.model import load_preset
from qmfs.spectra import default_grid


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=8001)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    model = assemble_drift(load_preset("fig4"))
    routing = output_routing(model, "probe")
    grid = default_grid(model, args.points)
    h, f = routing.row.astype(complex), routing.direct.astype(complex)
    A, B, noise = model.drift, model.input_matrix, model.noise
    x = np.linspace(-3.0, 3.0, args.points)
    p = np.array([0.3, -1.0, 0.4, 2.0, 1.2, 0.2, 0.5])

    cases = {
        "psd": lambda impl: impl(A, h, B, f, noise, grid),
        "lorentz2": lambda impl: impl(x, p),
    }
    print(f"grid points: {args.points}, state dim: {model.dim}, best of {args.repeat}")
    print(f"{'kernel':<10}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, call in cases.items():
        np_impl = getattr(_kernels, f"{name}_numpy")
        nb_impl = getattr(_kernels, f"{name}_numba")
        t_np = best_of(lambda: call(np_impl), args.repeat)
        if nb_impl is None:
            print(f"{name:<10}{t_np * 1e3:12.2f}{'n/a':>12}{'':>10}")
            continue
        call(nb_impl)  # compile outside the timing
        t_nb = best_of(lambda: call(nb_impl), args.repeat)
        print(f"{name:<10}{t_np * 1e3:12.2f}{t_nb * 1e3:12.2f}{t_np / t_nb:9.1f}x")


if __name__ == "__main__":
    main()
