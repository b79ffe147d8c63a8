"""Compare the compiled and pure-Python LCP kernels.

Times one Brennan-Schwartz sweep, one PSOR solve and a full ``apply_J`` on
each available backend and prints the best of several repeats.

    python3 benchmarks/bench_kernels.py [--M 400] [--N 200] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from jumpput import kernels
from jumpput.grid import ValueSurface, build_grid
from jumpput.jump_measure import JumpMeasure
from jumpput.lcp_solver import SolverConfig, apply_J
from jumpput.model import ModelParams

PARAMS = ModelParams(0.05, 0.2, 0.3, 100.0, 0.5, JumpMeasure.lognormal(-0.045, 0.3))


def step_system(n):
    """A put-shaped tridiagonal M-matrix system like one implicit time step."""
    rng = np.random.default_rng(0)
    a = -rng.uniform(0.1, 1.0, n)
    c = -rng.uniform(0.1, 1.0, n)
    a[0] = c[-1] = 0.0
    b = -(a + c) + 0.05
    g = np.maximum(100.0 - np.linspace(0.0, 300.0, n), 0.0)
    d = b * g + a * np.roll(g, 1) + c * np.roll(g, -1) + 1.0
    return a, b, c, d, g


def best(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=400)
    ap.add_argument("--N", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    a, b, c, d, g = step_system(args.M - 1)
    grid = build_grid(PARAMS, args.M, args.N)
    f = ValueSurface.payoff(grid)

    rows = []
    for name in kernels.available_backends():
        k = kernels.get_backend(name)
        bs = best(lambda: k.brennan_schwartz(a, b, c, d, g), args.repeat, 20)
        ps = best(lambda: k.psor(a, b, c, d, g, g, 1.5, 1e-8, 10_000), args.repeat, 1)
        cfg = SolverConfig(backend=name)
        full = best(lambda: apply_J(f, PARAMS, grid, cfg), args.repeat, 1)
        rows.append((name, bs, ps, full))

    print(f"M={args.M} N={args.N} best of {args.repeat}")
    print(f"{'backend':<10}{'brennan_schwartz':>18}{'psor':>14}{'apply_J':>14}")
    for name, bs, ps, full in rows:
        print(f"{name:<10}{bs * 1e3:>16.3f}ms{ps * 1e3:>12.3f}ms{full * 1e3:>12.3f}ms")
    if len(rows) == 2:
        (_, bs_c, ps_c, full_c), (_, bs_p, ps_p, full_p) = rows  # compiled, python
        print(f"{'speedup':<10}{bs_p / bs_c:>17.1f}x{ps_p / ps_c:>13.1f}x{full_p / full_c:>13.1f}x")
    else:
        print("compiled extension not built; only the python backend was timed")


if __name__ == "__main__":
    main()
