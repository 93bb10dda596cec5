"""Compiled versus numpy kernels: raw inner loops and a full DN solve.

Usage::

    python benchmarks/bench_kernels.py [--n 256] [--repeat 5]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from muskat import kernels
from muskat.elliptic import EllipticDN
from muskat.fixed_point import FixedPointDN
from muskat.spectral import TorusGrid, forward_transform


def _best(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def sweep_inputs(levels: int, modes: int, batch: int, rng):
    decay = rng.uniform(0.0, 1.0, (levels - 1, modes))
    weights = rng.standard_normal((levels - 1, 2, modes))
    stencil = np.stack([np.arange(levels - 1), np.arange(1, levels)], axis=1).astype(np.intp)
    src = rng.standard_normal((levels, batch, modes)) + 1j * rng.standard_normal((levels, batch, modes))
    return decay, weights, stencil, np.ascontiguousarray(src)


def thomas_inputs(levels: int, modes: int, rng):
    mult = rng.uniform(0.0, 0.4, (levels, modes))
    diag = rng.uniform(2.0, 3.0, (levels, modes))
    upper = rng.uniform(0.0, 0.4, (levels, modes))
    rhs = rng.standard_normal((levels, 1, modes)) + 1j * rng.standard_normal((levels, 1, modes))
    return mult, diag, upper, np.ascontiguousarray(rhs)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=256, help="grid points")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled kernels not built; only the numpy backend is timed")
    modes = args.n // 2 + 1
    rows = []

    sweep = sweep_inputs(201, modes, 4, rng)
    for name in backends:
        mod = kernels.get_backend(name)
        rows.append(("exp_sweep", name, _best(lambda: mod.exp_sweep(*sweep, True), args.repeat)))

    th = thomas_inputs(400, modes, rng)
    for name in backends:
        mod = kernels.get_backend(name)
        rows.append(("thomas_solve", name, _best(lambda: mod.thomas_solve(*th[:3], th[3].copy()), args.repeat)))

    grid = TorusGrid(1, args.n)
    x = grid.points[0]
    f = forward_transform(0.05 * np.cos(x), grid)
    g = forward_transform(np.cos(2 * x), grid)
    for name in backends:
        dn = FixedPointDN(kernels=name)
        rows.append(("fixed-point DN solve", name, _best(lambda: dn.apply(f, g), args.repeat)))
        ell = EllipticDN(kernels=name)
        rows.append(("elliptic DN solve", name, _best(lambda: ell.apply(f, g), max(1, args.repeat // 2))))

    print(f"{'kernel':<22} {'backend':<9} {'seconds':>10}")
    for kernel, name, sec in rows:
        print(f"{kernel:<22} {name:<9} {sec:>10.4f}")
    if "compiled" in backends:
        times = {(k, b): s for k, b, s in rows}
        print()
        for kernel in dict.fromkeys(k for k, _, _ in rows):
            print(f"speedup {kernel:<22} {times[(kernel, 'python')] / times[(kernel, 'compiled')]:6.2f}x")


if __name__ == "__main__":
    main()
