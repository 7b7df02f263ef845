"""Compare the compiled evaluation kernel with the numpy fallback.

Each workload is compiled once into a straight-line program and evaluated
over a batch of points with both backends; the table reports the best of
``--repeat`` timings and checks that the backends agree.

    python benchmarks/bench_kernels.py [--points N] [--repeat R] [--json PATH]
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from foliate import expr as E
from foliate._program import BACKENDS, compile_roots
from foliate.dirac import build_dirac, invert_symplectic
from foliate.exterior import VolumeForm, dx, schouten, trace_operator
from foliate.expr import CoordinateSystem, parse_scalar
from foliate.verify import SampleBox, coefficient_roots


def _random_poly(coords, rng, terms, degree):
    xs = coords.vars()
    out = E.const(float(rng.uniform(-1, 1)))
    for _ in range(terms):
        mono = E.const(float(rng.uniform(-1, 1)))
        for _ in range(degree):
            mono = E.mul(mono, xs[int(rng.integers(len(xs)))])
        out = E.add(out, mono)
    return out


def workloads():
    rng = np.random.Generator(np.random.PCG64(0))
    c5 = CoordinateSystem([f"x{i}" for i in range(1, 6)])
    polys = [_random_poly(c5, rng, 40, 3) for _ in range(50)]
    transcendental = [E.div(E.exp(E.sin(p)), E.add(E.const(3), E.cos(p))) for p in polys[:20]]

    c4 = CoordinateSystem(["q1", "p1", "q2", "p2"])
    S = invert_symplectic(dx(c4, 0, 1) + dx(c4, 2, 3), SampleBox.cube(4))
    D = build_dirac(S, [c4.var(2), parse_scalar("p2*(1 + q1**2)", c4)])
    bracket = coefficient_roots(schouten(D.bivector, D.bivector))
    volume = VolumeForm.standard(c4, E.exp(c4.var(0)))
    modular = coefficient_roots(trace_operator(D.bivector, volume))
    return [
        ("50 random cubics (R^5)", polys, 5),
        ("20 transcendental (R^5)", transcendental, 5),
        ("Dirac [Pi, Pi] (R^4)", bracket, 4),
        ("Dirac modular field (R^4)", modular, 4),
    ]


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--points", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", help="also write the results to this path")
    args = parser.parse_args(argv)

    backends = sorted(BACKENDS)
    if "compiled" not in BACKENDS:
        print("compiled kernel not available; timing the fallback only")
    rows = []
    for name, roots, dim in workloads():
        prog = compile_roots(roots)
        pts = np.random.Generator(np.random.PCG64(1)).uniform(-1, 1, (args.points, dim))
        row = {"workload": name, "instructions": len(prog.ops), "points": args.points}
        values = {}
        for backend in backends:
            values[backend] = prog.evaluate(pts, backend=backend)[0]
            row[backend] = best_time(lambda: prog.evaluate(pts, backend=backend), args.repeat)
        if len(values) == 2:
            a, b = values["compiled"], values["python"]
            row["max_rel_diff"] = float(np.max(np.abs(a - b) / (1 + np.abs(b))))
            row["speedup"] = row["python"] / row["compiled"]
        rows.append(row)

    header = f"{'workload':<26}{'instr':>7}" + "".join(f"{b + ' (ms)':>16}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}{'max rel diff':>15}"
    print(header)
    for row in rows:
        line = f"{row['workload']:<26}{row['instructions']:>7}"
        line += "".join(f"{1000 * row[b]:>16.2f}" for b in backends)
        if "speedup" in row:
            line += f"{row['speedup']:>9.1f}x{row['max_rel_diff']:>15.1e}"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
