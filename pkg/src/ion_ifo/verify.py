"""Self-checks comparing every closed form with an independent computation.

Each check reports its worst deviation against a tolerance. ``quick=True``
uses smaller grids and step counts with tolerances loosened tenfold.
"""

from dataclasses import asdict, dataclass
import cmath
import math

import numpy as np

from . import dynamics, overlap, phases, tdse, trajectory
from .core import NM, US, ZN, integrate, make_config
from .dynamics import Branch, PerturbationSpec


@dataclass(frozen=True)
class CheckResult:
    name: str
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.deviation) and self.deviation <= self.tolerance)

    def to_dict(self) -> dict:
        return {**asdict(self), "passed": self.passed}


def _loosen(tol: float, quick: bool) -> float:
    return tol * 10 if quick else tol


def check_overlap_formulas(quick: bool = False) -> CheckResult:
    """Closed-form mode overlaps against quadrature over displaced Hermite functions."""
    cfg = make_config().with_t_final(0.37 * US)
    traj = trajectory.design_alpha_A(cfg, 100 * NM)
    tf = traj.t_final
    n_top = 3 if quick else 6
    worst = 0.0

    pert = PerturbationSpec(c=40 * ZN, epsilon=30 * ZN)
    d_c, d_e = (dynamics.delta_alpha(cfg, g, tf) for g in (pert.c, pert.epsilon))
    v_c, v_e = (dynamics.delta_alpha_dot(cfg, g, tf) for g in (pert.c, pert.epsilon))
    rot = cmath.exp(1j * (phases.branch_G(cfg, traj, pert, Branch.DOWN)
                          - phases.branch_G(cfg, traj, pert, Branch.UP)))
    for n in range(n_top + 1):
        for k in range(n_top + 1):
            ref = rot * overlap.brute_force_mode_overlap(n, k, (d_c - d_e, v_c - v_e),
                                                         (d_c + d_e, v_c + v_e), cfg)
            worst = max(worst, abs(overlap.mode_overlap_both(cfg, traj, pert, n, k) - ref))

    one = PerturbationSpec(c=60 * ZN)
    d_c = dynamics.delta_alpha(cfg, one.c, tf)
    v_c = dynamics.delta_alpha_dot(cfg, one.c, tf)
    rot = cmath.exp(1j * (phases.branch_G(cfg, traj, one, Branch.DOWN, "one")
                          - phases.branch_G(cfg, traj, one, Branch.UP, "one")))
    for n in range(n_top + 1):
        for k in range(n_top + 1):
            ref = rot * overlap.brute_force_mode_overlap(n, k, (0.0, 0.0), (d_c, v_c), cfg)
            worst = max(worst, abs(overlap.mode_overlap_one(cfg, traj, one.c, n, k) - ref))
    return CheckResult("overlap_closed_form_vs_hermite", worst, _loosen(1e-8, quick))


def check_tdse(quick: bool = False) -> list[CheckResult]:
    """Grid propagation against the leading phase ``2 c S / hbar`` and the closed-form modulus."""
    cfg = make_config()
    traj = trajectory.design_alpha_A(cfg, 135 * NM)
    grid_n, n_steps = (512, 20_000) if quick else (tdse.DEFAULT_GRID_N, tdse.DEFAULT_STEPS)
    pert = PerturbationSpec(c=10 * ZN)
    up, down = tdse.branch_specs(traj, pert)
    psi0 = tdse.ground_state(cfg, 0.0, grid_n, tdse.grid_span(cfg, traj, pert))
    result = tdse.branch_overlap(cfg, up, down, psi0, n_steps)
    expected = phases.phase_difference(cfg, traj, pert)
    closed = overlap.state_overlap(cfg, traj, pert, overlap.ModeOccupation.fock(0, 0))
    phase_dev = abs(cmath.phase(cmath.exp(1j * (result.phase - expected))))
    return [CheckResult("tdse_phase_vs_analytic", phase_dev, _loosen(1e-3, quick)),
            CheckResult("tdse_modulus_vs_analytic", abs(result.modulus - closed.modulus),
                        _loosen(1e-4, quick))]


def _branch_areas(cfg, traj, pert, z0, steps):
    y0 = z0.real / dynamics.position_scale(cfg)
    v0 = z0.imag / (dynamics.momentum_scale(cfg) * cfg.mass)
    out = {}
    for branch in (Branch.UP, Branch.DOWN):
        path = dynamics.integrate_newton(cfg, dynamics.branch_force(cfg, traj, pert, branch),
                                         y0, v0, steps)
        out[branch] = dynamics.rotating_area(path)
    return out[Branch.UP] - out[Branch.DOWN]


def check_area_identities(quick: bool = False) -> list[CheckResult]:
    """Dynamical phase difference against four times the rotating-frame area difference."""
    cfg = make_config()
    traj = trajectory.design_alpha_A(cfg, 135 * NM)
    pert = PerturbationSpec(c=10 * ZN)
    steps = 20_000 if quick else 100_000
    tol = _loosen(1e-6, quick)
    area_dev = twice_dev = 0.0
    splits = []
    for z0 in (0j, 1.5 - 0.7j):
        rep = phases.dynamical_geometric_split(cfg, traj, pert, z0)
        d_area = _branch_areas(cfg, traj, pert, z0, steps)
        area_dev = max(area_dev, abs(rep.delta_phi_dynamical - 4 * d_area))
        twice_dev = max(twice_dev, abs(rep.delta_phi_dynamical - 2 * rep.delta_phi))
        splits.append(rep.delta_phi_dynamical)
    return [CheckResult("dynamical_phase_vs_area", area_dev, tol),
            CheckResult("dynamical_phase_vs_twice_phase", twice_dev, tol),
            CheckResult("area_independent_of_start", abs(splits[0] - splits[1]), tol)]


def check_null_phase(quick: bool = False) -> CheckResult:
    """Zero phase difference at the crossing point ``c / (m w^2)``."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10 if quick else 100):
        cfg = make_config(t_final_us=rng.uniform(0.2, 2.0))
        traj = trajectory.design_alpha_A(cfg, rng.uniform(10, 300) * NM)
        c = rng.uniform(-50, 50) * ZN
        pert = PerturbationSpec(c=c, x0=phases.null_crossing_point(cfg, c))
        worst = max(worst, abs(phases.phase_difference(cfg, traj, pert)))
    return CheckResult("null_crossing_phase", worst, _loosen(1e-12, quick))


def check_force_integrals(quick: bool = False) -> list[CheckResult]:
    """``int f_alpha dt = m w^2 S``, and ``int Re(Z_free) f_alpha dt = 0`` for free motions ``Z_free``."""
    cfg = make_config()
    a = trajectory.design_alpha_A(cfg, 135 * NM)
    b = trajectory.design_alpha_B(cfg, trajectory.sensitivity(a), 75 * NM)
    w = cfg.omega
    starts = np.random.default_rng(11).normal(size=(3 if quick else 20, 2)) @ [1, 1j]
    rel = free = 0.0
    for traj in (a, b):
        f = trajectory.force_function(traj, cfg)
        total = integrate(f, 0.0, traj.t_final)
        target = cfg.spring * trajectory.sensitivity(traj)
        rel = max(rel, abs(total - target) / abs(target))
        for z0 in starts:
            value = integrate(lambda t: np.real(np.exp(-1j * w * t) * z0) * f(t), 0.0, traj.t_final)
            free = max(free, abs(value) * dynamics.momentum_scale(cfg))
    return [CheckResult("force_integral_vs_sensitivity", rel, _loosen(1e-10, quick)),
            CheckResult("force_free_motion_overlap", free, _loosen(1e-12, quick))]


def run_checks(quick: bool = False) -> list[CheckResult]:
    results = [check_overlap_formulas(quick)]
    results += check_tdse(quick)
    results += check_area_identities(quick)
    results.append(check_null_phase(quick))
    results += check_force_integrals(quick)
    return results


def report(results, quick: bool = False) -> dict:
    return {"passed": all(r.passed for r in results), "quick": quick,
            "checks": [r.to_dict() for r in results]}


__all__ = ["CheckResult", "run_checks", "report", "check_overlap_formulas", "check_tdse",
           "check_area_identities", "check_null_phase", "check_force_integrals"]
