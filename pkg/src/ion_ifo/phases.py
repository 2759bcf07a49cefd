"""Branch phases of the driven interferometer.

Sign convention: every phase *difference* returned here is ``G_down - G_up``,
which for a pure homogeneous force equals ``phi_up - phi_down`` and is the
argument of the overlap ``<psi_down(t_f)|psi_up(t_f)>``.
"""

from dataclasses import dataclass

import numpy as np

from . import dynamics
from .core import DEFAULT_QUADRATURE, DomainError, PhysicalConfig, Quadrature, integrate
from .dynamics import Branch, PerturbationSpec
from .trajectory import PolynomialTrajectory, force_function, sensitivity


@dataclass(frozen=True)
class LRModeSpec:
    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise DomainError("mode index must be a non-negative integer")

    def eigenvalue(self, cfg: PhysicalConfig) -> float:
        return cfg.hbar * cfg.omega * (self.n + 0.5)


@dataclass(frozen=True)
class BranchPhaseReport:
    g_up: float
    g_down: float
    delta_phi: float
    phi_dynamical_up: float
    phi_dynamical_down: float
    phi_geometric_up: float
    phi_geometric_down: float

    @property
    def delta_phi_dynamical(self) -> float:
        return self.phi_dynamical_up - self.phi_dynamical_down

    @property
    def delta_phi_geometric(self) -> float:
        return self.phi_geometric_up - self.phi_geometric_down

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["delta_phi_dynamical"] = self.delta_phi_dynamical
        out["delta_phi_geometric"] = self.delta_phi_geometric
        return out


def lr_phase_G(cfg: PhysicalConfig, y_path, t: float,
               q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """``G(t) = (m / 2 hbar) int_0^t (ydot^2 - w^2 y^2) dt'``.

    ``y_path`` maps an array of times to ``(y, ydot)``.
    """
    w2 = cfg.omega**2

    def integrand(s):
        y, ydot = y_path(s)
        return ydot**2 - w2 * y**2

    return float(cfg.mass / (2 * cfg.hbar) * integrate(integrand, 0.0, t, q))


def theta_n(cfg: PhysicalConfig, mode, G_value: float, t: float) -> float:
    """Lewis-Riesenfeld phase ``-(n + 1/2) w t - G``."""
    if t < 0:
        raise DomainError("t must be non-negative")
    n = mode.n if isinstance(mode, LRModeSpec) else LRModeSpec(mode).n
    return -(n + 0.5) * cfg.omega * t - G_value


def reference_path(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                   branch, scenario: str = "both"):
    """Particular solution with zero initial conditions for one branch, as ``t -> (y, ydot)``.

    Mirrors :func:`ion_ifo.dynamics.branch_force`.
    """
    branch = Branch(branch)
    sign = branch.sign
    if scenario == "both":
        gammas = [(sign, pert.epsilon), (1, pert.c_tilde(cfg))]
    elif scenario == "one":
        if pert.epsilon != 0 or pert.x0 != 0:
            raise DomainError("the one-branch scenario takes only c (epsilon = x0 = 0)")
        gammas = [(1, pert.c if branch is Branch.UP else 0.0)]
    else:
        raise DomainError(f"unknown scenario {scenario!r}")

    def path(t):
        y = sign * traj.alpha(t)
        ydot = sign * traj.alpha_dot(t)
        for s, g in gammas:
            y = y + s * dynamics.delta_alpha(cfg, g, t)
            ydot = ydot + s * dynamics.delta_alpha_dot(cfg, g, t)
        return y, ydot

    return path


def branch_G(cfg, traj, pert, branch, scenario: str = "both",
             q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """G at t_final for one branch, by quadrature along its reference path."""
    return lr_phase_G(cfg, reference_path(cfg, traj, pert, branch, scenario), traj.t_final, q)


def branch_phase(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                 branch, x0_fn=None, q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """Phase picked up along one branch relative to the unperturbed motion.

    ``x0_fn`` is an optional vectorized crossing-point function of time; when
    absent the constant ``pert.x0`` is used.
    """
    sign = Branch(branch).sign
    tf = traj.t_final
    c = pert.c
    common = c**2 * tf / (2 * cfg.hbar * cfg.spring)
    if x0_fn is None:
        # int f_alpha dt = m w^2 S, so a constant crossing point just shifts c
        return float(common + sign * pert.c_tilde(cfg) * sensitivity(traj) / cfg.hbar)
    f_alpha = force_function(traj, cfg)
    crossing = integrate(lambda t: x0_fn(t) * f_alpha(t), 0.0, tf, q)
    return float(common + sign * (c / cfg.hbar * sensitivity(traj) - crossing / cfg.hbar))


def phase_difference(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                     q: Quadrature = DEFAULT_QUADRATURE, x0_fn=None) -> float:
    """``(2c/hbar) S - (2/hbar) int x0 f_alpha dt`` for an error-free drive."""
    if pert.epsilon != 0:
        raise DomainError("phase_difference assumes epsilon = 0; use phase_difference_with_error")
    return (branch_phase(cfg, traj, pert, Branch.UP, x0_fn, q)
            - branch_phase(cfg, traj, pert, Branch.DOWN, x0_fn, q))


def phase_difference_with_error(cfg: PhysicalConfig, traj: PolynomialTrajectory,
                                pert: PerturbationSpec,
                                q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """``G_down - G_up`` with both a homogeneous force and a constant drive error."""
    if pert.x0 != 0:
        raise DomainError("phase_difference_with_error assumes x0 = 0")
    tf = traj.t_final
    c, eps = pert.c, pert.epsilon
    d_c = dynamics.delta_alpha(cfg, c, tf)
    d_e = dynamics.delta_alpha(cfg, eps, tf)
    v_c = dynamics.delta_alpha_dot(cfg, c, tf)
    v_e = dynamics.delta_alpha_dot(cfg, eps, tf)
    boundary = -cfg.mass * (v_e * d_c + v_c * d_e)
    bulk = (2 * c * sensitivity(traj)
            + c * dynamics.delta_alpha_integral(cfg, eps, tf)
            + eps * dynamics.delta_alpha_integral(cfg, c, tf))
    return float((boundary + bulk) / cfg.hbar)


def phase_difference_one_branch(cfg: PhysicalConfig, traj: PolynomialTrajectory, c: float,
                                q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """``G_down - G_up`` when only the up branch feels the force ``c``."""
    tf = traj.t_final
    d_c = dynamics.delta_alpha(cfg, c, tf)
    v_c = dynamics.delta_alpha_dot(cfg, c, tf)
    return float((-cfg.mass * v_c * d_c + 2 * c * sensitivity(traj)
                  + c * dynamics.delta_alpha_integral(cfg, c, tf)) / (2 * cfg.hbar))


def dynamical_geometric_split(cfg: PhysicalConfig, traj: PolynomialTrajectory,
                              pert: PerturbationSpec, z0: complex = 0j,
                              q: Quadrature = DEFAULT_QUADRATURE) -> BranchPhaseReport:
    """Split each branch phase ``-G`` into dynamical and geometric parts.

    The dynamical phase ``(1/hbar) int F <x> dt`` is evaluated for the motion
    that starts at the phase-space point ``z0`` and feels ``+-f_alpha + c_tilde``.
    """
    if pert.epsilon != 0:
        raise DomainError("the dynamical/geometric split assumes epsilon = 0")
    tf = traj.t_final
    w = cfg.omega
    free_scale = 1.0 / dynamics.position_scale(cfg)
    z0 = complex(z0)
    out = {}
    for branch in (Branch.UP, Branch.DOWN):
        force = dynamics.branch_force(cfg, traj, pert, branch)
        path = reference_path(cfg, traj, pert, branch)

        def integrand(t, force=force, path=path):
            free = free_scale * np.real(np.exp(-1j * w * t) * z0)
            return (path(t)[0] + free) * force(t)

        phi_d = float(integrate(integrand, 0.0, tf, q)) / cfg.hbar
        g = lr_phase_G(cfg, path, tf, q)
        out[branch] = (g, phi_d, -g - phi_d)
    (g_up, d_up, geo_up), (g_dn, d_dn, geo_dn) = out[Branch.UP], out[Branch.DOWN]
    return BranchPhaseReport(g_up=g_up, g_down=g_dn, delta_phi=g_dn - g_up,
                             phi_dynamical_up=d_up, phi_dynamical_down=d_dn,
                             phi_geometric_up=geo_up, phi_geometric_down=geo_dn)


def null_crossing_point(cfg: PhysicalConfig, c: float) -> float:
    """Crossing point ``c / (m w^2)`` at which the differential phase vanishes."""
    return c / cfg.spring


__all__ = [
    "LRModeSpec", "BranchPhaseReport", "lr_phase_G", "theta_n", "reference_path", "branch_G",
    "branch_phase", "phase_difference", "phase_difference_with_error",
    "phase_difference_one_branch", "dynamical_geometric_split", "null_crossing_point",
]
