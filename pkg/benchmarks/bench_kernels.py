"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times expression evaluation, adaptive quadrature and a fixed-step RK4 run
on a nonlinear six-branch RLC network, and checks that both backends give
the same numbers.
"""

import argparse
import time

import numpy as np

from birknet import expr, kernels
from birknet.energy import build_energy
from birknet.netlist import parse_netlist
from birknet.pipeline import prepare

NETWORK = """\
.nodes 5
.ref 5
R1 1 2 expr: x^3 + 0.5*x
L1 4 5 expr: 1 + x^2
L2 2 3 expr: 2 + sin(x)
C1 2 4 expr: x + x^3
C2 5 1 expr: x + tanh(x)
C3 3 4 expr: x/3 + x^3/5
.ic C1 0.8
.ic L1 0.5
"""


def best_of(fn, repeat):
    times = []
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return min(times), result


def bench_eval(impl, prog, xs):
    def run():
        total = 0.0
        for x in xs:
            total += impl.eval_program(prog.code, prog.consts, 0, len(prog.code), x)[1]
        return total

    return run


def bench_quad(impl, prog, limits):
    def run():
        return [impl.quad_program(prog.code, prog.consts, 0, len(prog.code), a, b, 1, 1e-12, 40)[1]
                for a, b in limits]

    return run


def bench_rk4(impl, net, E, nsteps):
    arrays = net.system.kernel_arrays()
    shift = np.ascontiguousarray(E.linear_shift)

    def run():
        return impl.rk4(*arrays, shift, net.init.q0, net.init.qdot0, 1e-3, nsteps, 1e-3, 100)

    return run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--steps", type=int, default=20000)
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is timed")

    prog = expr.compile_expr(expr.parse_expr("exp(-x^2/4) * (1 + sin(3*x)) + x^3"))
    xs = np.linspace(-3, 3, 20000).tolist()
    rng = np.random.default_rng(0)
    limits = [tuple(sorted(rng.uniform(-3, 3, size=2))) for _ in range(50)]
    net = prepare(parse_netlist(NETWORK), coords=[4, 5])
    E, _ = build_energy(net.system)

    cases = {
        f"eval x {len(xs)}": lambda impl: bench_eval(impl, prog, xs),
        f"quad x {len(limits)}": lambda impl: bench_quad(impl, prog, limits),
        f"rk4 {args.steps} steps": lambda impl: bench_rk4(impl, net, E, args.steps),
    }
    print(f"{'kernel':<20}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for label, make in cases.items():
        timings, results = {}, {}
        for name, impl in backends.items():
            timings[name], results[name] = best_of(make(impl), args.repeat)
        row = f"{label:<20}" + "".join(f"{timings[n]:>11.4f}s" for n in backends)
        if len(backends) == 2:
            row += f"{timings['python'] / timings['compiled']:>9.1f}x"
            a, b = results["python"], results["compiled"]
            if label.startswith("rk4"):
                a, b = a[3], b[3]
            if not np.allclose(np.asarray(a, float), np.asarray(b, float), rtol=1e-11, atol=1e-12):
                row += "  MISMATCH"
        print(row)


if __name__ == "__main__":
    main()
