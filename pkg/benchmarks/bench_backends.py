"""Time the compiled core against the numpy fallback on the hot loops.

    python benchmarks/bench_backends.py [--repeat 5]

Prints one row per kernel with the best wall time of each backend and the
speed-up, after checking that both backends return the same numbers.
"""

import argparse
import time

import numpy as np

from halfspace.backend import available, load
from halfspace.discrete_kernels import KernelWorkspace


def _cases():
    rng = np.random.default_rng(0)
    ws = KernelWorkspace(512)

    L, x, R = 256, 3, 2048
    W = x + L + 2
    Q = np.ascontiguousarray(ws.up_table(L, 0, L, W))
    U = rng.random((R, L))

    def walkers(core):
        pos = np.full(R, x, dtype=np.int64)
        out = np.empty((R, L), dtype=np.int64)
        core.advance_walkers(pos, U, Q, out)
        return out

    def coupled(core):
        lo = np.full(R, x, dtype=np.int64)
        hi = np.full(R, x + 1, dtype=np.int64)
        a = np.empty((R, L), dtype=np.int64)
        b = np.empty((R, L), dtype=np.int64)
        core.advance_coupled(lo, hi, U, np.ascontiguousarray(ws.up_table(L, 0, L, W + 1)), a, b)
        return a

    Lf, Rf = 128, 64
    Wf = x + Lf + 2
    Qf = np.ascontiguousarray(ws.up_table(Lf, 0, Lf, Wf))
    factor = np.ascontiguousarray(1.0 + 0.3 * rng.normal(size=(Rf, Lf, Wf)))
    term = np.ascontiguousarray(rng.random((Rf, Wf)))

    def backward(core):
        return core.fk_backward(term, factor, Qf, term, Lf)

    def forward(core):
        return core.fk_forward(x, factor, Qf, term)

    zeta = np.ascontiguousarray(rng.random((512, 33, 33)))

    def octant(core):
        return core.octant_table(zeta)

    return {"advance_walkers": walkers, "advance_coupled": coupled, "fk_backward": backward,
            "fk_forward": forward, "octant_table": octant}


def _best(fn, core, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(core)
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    names = available()
    if "cython" not in names:
        print("compiled core not built; only the python backend is available")
    cores = {name: load(name) for name in names}
    print(f"{'kernel':<18}" + "".join(f"{n + ' (ms)':>16}" for n in cores) + f"{'speed-up':>10}")
    for name, fn in _cases().items():
        outs = {b: fn(c) for b, c in cores.items()}
        ref = outs["python"]
        for b, o in outs.items():
            if not np.allclose(o, ref, rtol=1e-12, atol=1e-14):
                raise SystemExit(f"{name}: backend {b} disagrees with python")
        times = {b: _best(fn, c, args.repeat) for b, c in cores.items()}
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<18}" + "".join(f"{1e3 * t:>16.2f}" for t in times.values()) + f"{speed:>10.1f}")


if __name__ == "__main__":
    main()
