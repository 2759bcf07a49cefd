"""Time the numba and numpy implementations of every kernel side by side.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. The numba
variants are compiled (and checked against numpy) before timing starts, so
the figures exclude JIT cost. The last row times a reduced grid propagation
of both branches with each backend swapped in.
"""

import argparse
import time

import numpy as np

from ion_ifo import _kernels, tdse
from ion_ifo._backend import HAVE_NUMBA
from ion_ifo.core import NM, ZN, make_config
from ion_ifo.dynamics import PerturbationSpec
from ion_ifo.trajectory import design_alpha_A, force_function


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _in_place(impl, psi, *args):
    impl(psi, *args)
    return psi


def _cases():
    cfg = make_config()
    traj = design_alpha_A(cfg, 135 * NM)
    steps = 20_000
    half = np.linspace(0.0, cfg.t_final, 2 * steps + 1)
    force = np.ascontiguousarray(force_function(traj, cfg)(half))
    rk4_args = (force, cfg.omega**2, 1.0 / cfg.mass, cfg.t_final / steps, 0.0, 0.0)

    rng = np.random.default_rng(0)
    psi = rng.normal(size=(2, 2048)) + 1j * rng.normal(size=(2, 2048))
    base = rng.normal(size=(2, 2048))
    profile = rng.normal(size=(2, 2048))
    coef = np.array([0.3, -0.3])

    xi = np.linspace(-12, 12, 4001)
    y = np.cos(np.linspace(0, 20, 200_001))
    p = np.sin(np.linspace(0, 20, 200_001))

    return {
        "rk4_oscillator": lambda impl: impl(*rk4_args),
        "apply_potential_phase": lambda impl: _in_place(impl, psi.copy(), base, profile, coef),
        "hermite_functions": lambda impl: impl(12, xi),
        "shoelace_area": lambda impl: impl(y, p),
    }


def _tdse_run():
    cfg = make_config()
    traj = design_alpha_A(cfg, 135 * NM)
    pert = PerturbationSpec(c=10 * ZN)
    up, down = tdse.branch_specs(traj, pert)
    psi0 = tdse.ground_state(cfg, 0.0, 512, tdse.grid_span(cfg, traj, pert))
    return lambda: tdse.branch_overlap(cfg, up, down, psi0, 20_000)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is not installed; only the numpy timings are meaningful")

    print(f"{'kernel':<24}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, call in _cases().items():
        nb = _kernels.IMPLEMENTATIONS["numba"][name]
        npy = _kernels.IMPLEMENTATIONS["numpy"][name]
        ref, got = call(npy), call(nb)
        for a, b in zip(np.atleast_1d(ref), np.atleast_1d(got)):
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)
        t_nb = _best_of(lambda: call(nb), args.repeat)
        t_np = _best_of(lambda: call(npy), args.repeat)
        print(f"{name:<24}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>10.1f}")

    run = _tdse_run()
    saved = _kernels.apply_potential_phase
    timings = {}
    try:
        for backend in ("numba", "numpy"):
            _kernels.apply_potential_phase = _kernels.IMPLEMENTATIONS[backend]["apply_potential_phase"]
            run()  # warm-up
            timings[backend] = _best_of(run, max(1, args.repeat // 2))
    finally:
        _kernels.apply_potential_phase = saved
    print(f"{'tdse 512 x 2e4 steps':<24}{timings['numba'] * 1e3:>12.1f}{timings['numpy'] * 1e3:>12.1f}"
          f"{timings['numpy'] / timings['numba']:>10.1f}")


if __name__ == "__main__":
    main()
