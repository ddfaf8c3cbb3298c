#!/usr/bin/env python3
"""Benchmark the jitted window-phase kernels against the numpy fallback.

The kernel benchmark times both implementations in-process (compiling the
loop version with numba when available).  With ``--evolve`` the script also
times a full field-window crossing end to end in two subprocesses, one with
``EWAVE_NO_NUMBA=1`` and one without, since the implementation is chosen at
import time.

Example::

    python3 benchmarks/bench_kernels.py --size 8192 --repeats 7 --evolve
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))


def _kernel_args(size: int):
    from ewave._kernels import _window_phase_numpy  # noqa: F401 - import check

    rng = np.random.default_rng(7)
    z = np.linspace(-4e6, 3e7, size)
    amps = np.array([7.5e-13])
    qzs = np.array([1.2e-6])
    out = np.empty_like(z)
    return dict(
        z=z, t0=1.0e5, dt=4.0e4, v_frame=0.7, w0=0.0, w1=2.0e7,
        amps=amps, qzs=qzs, omega=8.5e-7, phi0=0.3, coef=rng.uniform(0.5, 1.5),
        out=out,
    )


def _time(fn, kwargs, steps: int, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        tic = time.perf_counter()
        for _ in range(steps):
            fn(
                kwargs["z"], kwargs["t0"], kwargs["dt"], kwargs["v_frame"],
                kwargs["w0"], kwargs["w1"], kwargs["amps"], kwargs["qzs"],
                kwargs["omega"], kwargs["phi0"], kwargs["coef"], kwargs["out"],
            )
        best = min(best, (time.perf_counter() - tic) / steps)
    return best


def bench_kernels(size: int, steps: int, repeats: int) -> None:
    from ewave import _kernels

    kwargs = _kernel_args(size)
    rows = []
    t_np = _time(_kernels._window_phase_numpy, kwargs, steps, repeats)
    rows.append(("window_phase/numpy", t_np, 1.0))
    try:
        from numba import njit

        jitted = njit(**_kernels.JIT_OPTIONS)(_kernels._window_phase_loop)
        jitted(**kwargs)  # compile outside the timed region
        t_nb = _time(jitted, kwargs, steps, repeats)
        rows.append(("window_phase/numba", t_nb, t_np / t_nb))
    except ImportError:
        print("numba unavailable; timing the numpy fallback only", file=sys.stderr)

    print(f"kernel microbenchmark: size={size} steps={steps} repeats={repeats}")
    print(f"{'implementation':<22} {'per call':>12} {'speedup':>9}")
    for name, per_call, speedup in rows:
        print(f"{name:<22} {per_call * 1e6:>10.2f}us {speedup:>8.2f}x")


def _evolve_once(size: int) -> float:
    from ewave.scenarios import ScenarioSpec, run_scenario

    spec = ScenarioSpec(
        name="bench", kind="phase_accel",
        omega=8.490280808498e-07, upsilon=0.8,
        interaction_length=2.0716788656638e7,
        gamma_size=0.6, n=size, span_factor=24.0, dt_fraction=0.1,
    )
    tic = time.perf_counter()
    run_scenario(spec)
    return time.perf_counter() - tic


def bench_evolve(size: int) -> None:
    print(f"\nend-to-end crossing (n={size}, dt_fraction=0.1):")
    for label, extra_env in (("numba", {}), ("numpy", {"EWAVE_NO_NUMBA": "1"})):
        env = dict(os.environ)
        env.pop("EWAVE_NO_NUMBA", None)
        env.update(extra_env)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--evolve-child", str(size)],
            env=env, capture_output=True, text=True,
        )
        if proc.returncode != 0:
            print(f"{label:<8} failed:\n{proc.stderr}", file=sys.stderr)
            continue
        # last line of the child is the wall time; earlier lines are warm-up
        seconds = float(proc.stdout.strip().splitlines()[-1])
        print(f"{label:<8} {seconds:8.3f} s")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=4096, help="grid points")
    parser.add_argument("--steps", type=int, default=200, help="calls per repeat")
    parser.add_argument("--repeats", type=int, default=5, help="best-of repeats")
    parser.add_argument("--evolve", action="store_true",
                        help="also time a full crossing in both modes")
    parser.add_argument("--evolve-child", type=int, default=None,
                        help=argparse.SUPPRESS)
    args = parser.parse_args(argv)

    if args.evolve_child is not None:
        _evolve_once(args.evolve_child)  # warm the JIT cache
        print(_evolve_once(args.evolve_child))
        return 0

    bench_kernels(args.size, args.steps, args.repeats)
    if args.evolve:
        bench_evolve(args.size)
    return 0


if __name__ == "__main__":
    sys.exit(main())
