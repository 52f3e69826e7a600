"""Compiled vs numpy kernels, plus one full Strang step per backend.

    python benchmarks/bench_kernels.py [--n 262144] [--repeat 20]
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fracwave import kernels


def bench(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1 << 18)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    rng = np.random.default_rng(1)
    z = rng.standard_normal(args.n) + 1j * rng.standard_normal(args.n)
    x = np.abs(rng.standard_normal(args.n))
    cases = {
        "nonlinear_phase p=6": lambda m: m.nonlinear_phase(z, 1e-3, 6.0),
        "nonlinear_phase p=4.5": lambda m: m.nonlinear_phase(z, 1e-3, 4.5),
        "abs_power_sum p=6": lambda m: m.abs_power_sum(z, 6.0),
        "power_nonlinearity p=4": lambda m: m.power_nonlinearity(x, 4.0),
        "max_abs": lambda m: m.max_abs(z),
    }
    mods = kernels.backends()
    print(f"n = {args.n}, best of {args.repeat}; active backend: {kernels.BACKEND}")
    print(f"{'kernel':<24}" + "".join(f"{name:>12}" for name in mods) + f"{'speedup':>10}")
    for label, call in cases.items():
        times = {name: bench(lambda m=m: call(m), args.repeat) for name, m in mods.items()}
        line = f"{label:<24}" + "".join(f"{1e3 * t:>10.3f}ms" for t in times.values())
        if "cython" in times:
            line += f"{times['python'] / times['cython']:>9.1f}x"
        print(line)
        if "cython" in mods:
            a, b = call(mods["python"]), call(mods["cython"])
            assert np.allclose(a, b, rtol=1e-13, atol=1e-13), label
    steps = bench_steps(args.n)
    line = f"{'strang step':<24}" + "".join(f"{1e3 * steps.get(name, float('nan')):>10.3f}ms" for name in mods)
    if "cython" in steps:
        line += f"{steps['python'] / steps['cython']:>9.1f}x"
    print(line)


STEP_SNIPPET = """
import timeit, numpy as np
from fracwave import kernels
from fracwave.grid import GridSpec, Field
from fracwave.functionals import ModelParams
from fracwave.evolution import _Stepper
g = GridSpec(1, {n}, 200.0)
st = _Stepper(g, ModelParams(0.75, 0.5, 6.0, 1), dealias=True)
v = np.exp(-g.axis() ** 2).astype(complex)
t = min(timeit.repeat(lambda: st.step(v, 1e-3), number=10, repeat=5)) / 10
print(kernels.BACKEND, t)
"""


def bench_steps(n):
    """Time one Strang step under each backend (separate interpreters,
    since the backend is fixed at import)."""
    out = {}
    for force in ("0", "1"):
        env = dict(os.environ, FRACWAVE_PURE_PYTHON=force)
        res = subprocess.run(
            [sys.executable, "-c", STEP_SNIPPET.format(n=n)], env=env, capture_output=True, text=True, check=True
        )
        name, t = res.stdout.split()
        out[name] = float(t)
    return out


if __name__ == "__main__":
    main()
