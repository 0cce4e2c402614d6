"""Time the compiled quadrature kernel against the pure-Python fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--n 2000] [--repeat 3]

Each case evaluates the log-density of a family with no closed form at
``n`` points, once per backend, and checks that both backends agree.
"""

import argparse
import time

import numpy as np

from mixnorm import _quadkernel_py
from mixnorm.families import _KIND_CODE, MMN, MVMN, VMN, make_family, sample
from mixnorm.mixing import GIG, BirnbaumSaunders, Exponential, Lindley, TruncNormalPos

try:
    from mixnorm import _quadkernel
except ImportError:
    _quadkernel = None

SIGMA = np.array([[1.0, 0.4, 0.0], [0.4, 1.5, 0.2], [0.0, 0.2, 0.8]])
DELTA = np.array([0.8, -0.5, 0.3])
CASES = {
    "vmn-lindley": make_family(VMN, np.zeros(3), SIGMA, None, Lindley(1.5)),
    "vmn-bs": make_family(VMN, np.zeros(3), SIGMA, None, BirnbaumSaunders(0.7)),
    "mmn-gig": make_family(MMN, np.zeros(3), SIGMA, DELTA, GIG(1.0, 2.0, 0.5)),
    "mmn-tn": make_family(MMN, np.zeros(3), SIGMA, DELTA, TruncNormalPos(0.5, 1.0)),
    "mvmn-exp": make_family(MVMN, np.zeros(3), SIGMA, DELTA, Exponential(1.0)),
}


def _arguments(fam, y):
    z = fam.sigma.whiten(y - fam.mu)
    zd = fam.sigma.whiten(fam.shape_vector)
    tag, params, lognorm = fam.mixing.kernel_code()
    return (np.ascontiguousarray(np.sum(z * z, axis=1)), np.ascontiguousarray(z @ zd),
            float(zd @ zd), fam.p, float(fam.sigma.logdet), _KIND_CODE[fam.kind], tag,
            np.asarray(params, dtype=float), float(lognorm))


def _best_time(func, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = func(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if _quadkernel is None:
        print("compiled kernel not built; only the Python fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'case':<14}{'python (s)':>12}{'compiled (s)':>14}{'speed-up':>10}{'max |diff|':>12}")
    for name, fam in CASES.items():
        y = sample(fam, rng, args.n)
        kargs = _arguments(fam, y)
        t_py, (v_py, _) = _best_time(_quadkernel_py.mixture_logpdf, kargs, args.repeat)
        if _quadkernel is None:
            print(f"{name:<14}{t_py:>12.4f}{'-':>14}{'-':>10}{'-':>12}")
            continue
        t_c, (v_c, _) = _best_time(_quadkernel.mixture_logpdf, kargs, args.repeat)
        diff = float(np.max(np.abs(v_py - v_c)))
        print(f"{name:<14}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x{diff:>12.1e}")


if __name__ == "__main__":
    main()
