"""Overlaps between the perturbed spin branches.

Closed forms: each dynamical mode ends as a displaced number state, so the
overlap of mode ``n`` (down) with mode ``n'`` (up) is a common zeroth-order
factor times a displacement-operator matrix element written with a terminating
confluent hypergeometric function ``1F1(-n; |n'-n|+1; x)``.
"""

from dataclasses import dataclass
import cmath
import math

import numpy as np

from . import _kernels, dynamics, phases
from .core import DEFAULT_QUADRATURE, DomainError, NumericError, PhysicalConfig, Quadrature
from .dynamics import PerturbationSpec
from .trajectory import PolynomialTrajectory

DEFAULT_N_MAX = 32


@dataclass(frozen=True)
class OverlapResult:
    value: complex

    @property
    def modulus(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        """Argument in (-pi, pi]."""
        phi = cmath.phase(self.value)
        return math.pi if phi == -math.pi else phi

    def to_dict(self) -> dict:
        return {"re": self.value.real, "im": self.value.imag,
                "modulus": self.modulus, "phase": self.phase}


@dataclass(frozen=True, eq=False)
class ModeOccupation:
    """Amplitudes ``c_n`` of the common initial motional state in the number basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise DomainError("amplitudes must be a non-empty 1-D sequence")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"mode occupation is not normalized (sum |c_n|^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_max(self) -> int:
        return self.amplitudes.size - 1

    @classmethod
    def normalized(cls, amplitudes) -> "ModeOccupation":
        amps = np.asarray(amplitudes, dtype=complex)
        return cls(amps / np.linalg.norm(amps))

    @classmethod
    def fock(cls, n: int, n_max: int | None = None) -> "ModeOccupation":
        n_max = max(n, DEFAULT_N_MAX if n_max is None else n_max)
        amps = np.zeros(n_max + 1, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    @classmethod
    def coherent(cls, beta: complex, n_max: int = DEFAULT_N_MAX) -> "ModeOccupation":
        """Coherent state truncated at ``n_max`` and renormalized."""
        n = np.arange(n_max + 1)
        log_fact = np.array([math.lgamma(k + 1) for k in n])
        amps = np.exp(-0.5 * abs(beta) ** 2 - 0.5 * log_fact) * complex(beta) ** n
        return cls.normalized(amps)


def hyp1f1_poly(n: int, b: int, x: float) -> float:
    """``1F1(-n; b; x)`` as the terminating sum ``sum_k (-n)_k x^k / ((b)_k k!)``."""
    if int(n) != n or n < 0:
        raise DomainError("n must be a non-negative integer")
    if b <= 0:
        raise DomainError("b must be positive")
    total = 1.0
    term = 1.0
    for k in range(int(n)):
        term *= (k - n) * x / ((b + k) * (k + 1))
        total += term
    return total


def _displacement_element(n_down: int, n_up: int, gamma: complex) -> complex:
    """``<n_down| D(gamma) |n_up>`` without its Gaussian factor ``exp(-|gamma|^2/2)``."""
    x = abs(gamma) ** 2
    if n_up >= n_down:
        k, low, high, base = n_up - n_down, n_down, n_up, -gamma.conjugate()
    else:
        k, low, high, base = n_down - n_up, n_up, n_down, gamma
    ratio = math.exp(0.5 * (math.lgamma(high + 1) - math.lgamma(low + 1)))
    return base**k / math.factorial(k) * ratio * hyp1f1_poly(low, k + 1, x)


def _check_indices(*indices):
    for n in indices:
        if int(n) != n or n < 0:
            raise DomainError(f"mode index must be a non-negative integer, got {n!r}")


def zeroth_factor_both(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                       q: Quadrature = DEFAULT_QUADRATURE) -> complex:
    """Ground-mode overlap ``<Psi_0^down|Psi_0^up>`` with force ``c`` and drive error ``epsilon``."""
    if pert.x0 != 0:
        raise DomainError("closed-form overlaps assume x0 = 0")
    tf = traj.t_final
    m, w, hbar = cfg.mass, cfg.omega, cfg.hbar
    d_c = dynamics.delta_alpha(cfg, pert.c, tf)
    d_e = dynamics.delta_alpha(cfg, pert.epsilon, tf)
    v_e = dynamics.delta_alpha_dot(cfg, pert.epsilon, tf)
    dg = phases.phase_difference_with_error(cfg, traj, pert, q)
    return cmath.exp(1j * dg - m * w / hbar * (d_e**2 + d_c**2)
                     + m / (hbar * w) * (w * d_c + 1j * v_e) ** 2)


def zeroth_factor_one(cfg: PhysicalConfig, traj: PolynomialTrajectory, c: float,
                      q: Quadrature = DEFAULT_QUADRATURE) -> complex:
    """Ground-mode overlap when only the up branch feels ``c``."""
    tf = traj.t_final
    m, w, hbar = cfg.mass, cfg.omega, cfg.hbar
    d_c = dynamics.delta_alpha(cfg, c, tf)
    v_c = dynamics.delta_alpha_dot(cfg, c, tf)
    dg = phases.phase_difference_one_branch(cfg, traj, c, q)
    return cmath.exp(1j * dg - m * w / (2 * hbar) * d_c**2
                     + m / (4 * hbar * w) * (w * d_c + 1j * v_c) ** 2)


def mode_overlap_both(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                      n: int, n_prime: int, q: Quadrature = DEFAULT_QUADRATURE) -> complex:
    """``<Psi_n^down(t_f)|Psi_n'^up(t_f)>`` with both branches perturbed by ``c`` and ``epsilon``.

    For ``n' >= n`` this is the zeroth factor times
    ``(dZ_eps*)^(n'-n) (-2)^(n'-n) / (n'-n)! sqrt(n'!/n!) 1F1(-n; n'-n+1; 4|dZ_eps|^2)``;
    the reversed order uses ``-dZ_eps`` in place of ``dZ_eps*``.
    """
    _check_indices(n, n_prime)
    dz = dynamics.delta_Z(cfg, pert.epsilon, traj.t_final)
    return zeroth_factor_both(cfg, traj, pert, q) * _displacement_element(n, n_prime, 2 * dz)


def mode_overlap_one(cfg: PhysicalConfig, traj: PolynomialTrajectory, c: float,
                     n: int, n_prime: int, q: Quadrature = DEFAULT_QUADRATURE) -> complex:
    """``<Psi_n^down(t_f)|Psi_n'^up(t_f)>`` when only the up branch feels ``c``."""
    _check_indices(n, n_prime)
    dz = dynamics.delta_Z(cfg, c, traj.t_final)
    return zeroth_factor_one(cfg, traj, c, q) * _displacement_element(n, n_prime, dz)


def brute_force_mode_overlap(n: int, n_prime: int, displacement_down, displacement_up,
                             cfg: PhysicalConfig) -> complex:
    """Direct quadrature of ``int dx exp(i m (v_up - v_down) x / hbar) phi_n(x - y_down) phi_n'(x - y_up)``.

    Displacements are ``(position in m, velocity in m/s)`` pairs.
    """
    _check_indices(n, n_prime)
    if max(n, n_prime) > 12:
        raise DomainError("brute-force overlaps are limited to n, n' <= 12")
    y_d, v_d = displacement_down
    y_u, v_u = displacement_up
    sigma = cfg.length_scale
    kick = cfg.mass * (v_u - v_d) * sigma / cfg.hbar  # wavenumber in units of 1/sigma
    center = 0.5 * (y_d + y_u) / sigma
    half_width = 10.0 + abs(y_u - y_d) / sigma + abs(center)
    step = min(0.02, 0.25 / max(abs(kick), 1e-300))
    xi = np.arange(center - half_width, center + half_width + step, step)
    top = max(n, n_prime)
    phi_d = _kernels.hermite_functions(top, np.ascontiguousarray(xi - y_d / sigma))[n]
    phi_u = _kernels.hermite_functions(top, np.ascontiguousarray(xi - y_u / sigma))[n_prime]
    for phi in (phi_d, phi_u):
        norm = np.sum(phi * phi) * step
        if abs(norm - 1.0) > 1e-10:
            raise NumericError(f"overlap grid under-resolved (norm {norm!r})")
    return complex(np.sum(np.exp(1j * kick * xi) * phi_d * phi_u) * step)


def overlap_matrix(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                   n_max: int, scenario: str = "both",
                   q: Quadrature = DEFAULT_QUADRATURE) -> np.ndarray:
    """Lab-frame matrix ``M[n, n'] = exp(-i (n'-n) w t_f) <Psi_n^down|Psi_n'^up>``.

    The exponential restores the ``-(n + 1/2) w t`` parts of the mode phases,
    which differ between ``n`` and ``n'`` and do not cancel off the diagonal.
    """
    tf = traj.t_final
    if scenario == "both":
        z0 = zeroth_factor_both(cfg, traj, pert, q)
        gamma = 2 * dynamics.delta_Z(cfg, pert.epsilon, tf)
    elif scenario == "one":
        if pert.epsilon != 0 or pert.x0 != 0:
            raise DomainError("the one-branch scenario takes only c (epsilon = x0 = 0)")
        z0 = zeroth_factor_one(cfg, traj, pert.c, q)
        gamma = dynamics.delta_Z(cfg, pert.c, tf)
    else:
        raise DomainError(f"unknown scenario {scenario!r}")
    size = n_max + 1
    out = np.empty((size, size), dtype=complex)
    rot = cmath.exp(-1j * cfg.omega * tf)
    for a in range(size):
        for b in range(size):
            out[a, b] = z0 * _displacement_element(a, b, gamma) * rot ** (b - a)
    return out


def state_overlap(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                  occ: ModeOccupation, scenario: str = "both",
                  q: Quadrature = DEFAULT_QUADRATURE) -> OverlapResult:
    """``<psi_down(t_f)|psi_up(t_f)>`` for a pure initial motional state."""
    if not isinstance(occ, ModeOccupation):
        occ = ModeOccupation(occ)
    c = occ.amplitudes
    mat = overlap_matrix(cfg, traj, pert, occ.n_max, scenario, q)
    return OverlapResult(complex(np.conj(c) @ mat @ c))


def thermal_weights(mean_n: float, n_max: int = DEFAULT_N_MAX) -> np.ndarray:
    """Bose-Einstein populations truncated at ``n_max`` and renormalized."""
    if mean_n < 0:
        raise DomainError("mean phonon number must be non-negative")
    n = np.arange(n_max + 1)
    if mean_n == 0:
        w = (n == 0).astype(float)
    else:
        w = (mean_n / (mean_n + 1.0)) ** n / (mean_n + 1.0)
    return w / w.sum()


def thermal_overlap(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                    mean_n: float, scenario: str = "both", n_max: int = DEFAULT_N_MAX,
                    q: Quadrature = DEFAULT_QUADRATURE) -> OverlapResult:
    """Overlap for a thermal initial state: a Boltzmann-weighted sum of diagonal mode overlaps."""
    weights = thermal_weights(mean_n, n_max)
    mat = overlap_matrix(cfg, traj, pert, n_max, scenario, q)
    return OverlapResult(complex(np.sum(weights * np.diag(mat))))
