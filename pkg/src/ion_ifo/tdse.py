"""Grid propagation of both spin branches under the full Hamiltonian.

This is the quantum oracle for the analytic phase and overlap formulas. It
uses second-order symmetric split-step Fourier propagation with the
time-dependent force sampled at the midpoint of every step. No phase gauge is
fixed along the way, so the argument of the final branch overlap is physical.
"""

from dataclasses import dataclass, field
import csv
import enum
import json
import math
import warnings

import numpy as np

from . import _kernels
from .core import NM, US, ConfigurationError, DomainError, NumericError, PhysicalConfig
from .dynamics import Branch, PerturbationSpec
from .overlap import ModeOccupation, OverlapResult
from .trajectory import PolynomialTrajectory, force_function

DEFAULT_GRID_N = 2048
DEFAULT_STEPS = 100_000


@dataclass(frozen=True, eq=False)
class GridWavefunction:
    x_min: float
    dx: float
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        n = amps.size
        if amps.ndim != 1 or n < 2 or n & (n - 1):
            raise DomainError("grid length must be a power of two")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.amplitudes.size)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2) * self.dx)

    def inner(self, other: "GridWavefunction") -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes) * self.dx)

    def same_grid(self, other: "GridWavefunction") -> bool:
        return (self.amplitudes.size == other.amplitudes.size and self.x_min == other.x_min
                and self.dx == other.dx)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x_nm", "re", "im"])
            for x, a in zip(self.x, self.amplitudes):
                writer.writerow([f"{x / NM:.12g}", f"{a.real:.12g}", f"{a.imag:.12g}"])


class LatticeOrder(str, enum.Enum):
    LINEAR = "linear"
    CUBIC = "cubic"
    QUINTIC = "quintic"
    FULL = "full"


@dataclass(frozen=True)
class LatticeSpec:
    """Optical lattice ``v0 sin^2(k x + pi/4)`` and the Taylor order kept for the force."""

    v0: float
    k: float
    order: LatticeOrder = LatticeOrder.FULL

    def __post_init__(self):
        if self.v0 < 0 or not (self.k > 0):
            raise DomainError("lattice needs v0 >= 0 and k > 0")
        object.__setattr__(self, "order", LatticeOrder(self.order))


def lattice_potential(spec: LatticeSpec, x):
    """Raw lattice potential in joules."""
    return spec.v0 * np.sin(spec.k * np.asarray(x) + math.pi / 4) ** 2


def _warn_if_outside(spec: LatticeSpec, x):
    if spec.order is not LatticeOrder.FULL and np.any(spec.k * np.abs(x) > math.pi / 2):
        warnings.warn("k|x| exceeds pi/2; the truncated lattice expansion is unreliable there",
                      RuntimeWarning, stacklevel=3)


def lattice_shape(spec: LatticeSpec, x):
    """Dimensionless force shape: the lattice force normalized to 1 at x = 0.

    The lattice force is proportional to ``cos(2 k x)``; truncations keep its
    Taylor series to the requested order in x.
    """
    u = 2 * spec.k * np.asarray(x, dtype=float)
    order = spec.order
    if order is LatticeOrder.FULL:
        return np.cos(u)
    shape = np.ones_like(u)
    if order in (LatticeOrder.CUBIC, LatticeOrder.QUINTIC):
        shape = shape - u**2 / 2
    if order is LatticeOrder.QUINTIC:
        shape = shape + u**4 / 24
    return shape


def lattice_profile(spec: LatticeSpec, x):
    """Antiderivative of :func:`lattice_shape` vanishing at 0, in meters."""
    x = np.asarray(x, dtype=float)
    u = 2 * spec.k * x
    order = spec.order
    if order is LatticeOrder.FULL:
        return np.sin(u) / (2 * spec.k)
    prof = x.copy()
    if order in (LatticeOrder.CUBIC, LatticeOrder.QUINTIC):
        prof = prof - u**2 * x / 6
    if order is LatticeOrder.QUINTIC:
        prof = prof + u**4 * x / 120
    return prof


def lattice_force_profile(spec: LatticeSpec, f_target: float, x):
    """Spatial force of the lattice, calibrated so that its value at x = 0 is ``f_target``."""
    _warn_if_outside(spec, x)
    out = f_target * lattice_shape(spec, x)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class PotentialSpec:
    """Potential for one branch.

    ``V = m w^2 x^2 / 2 - c x - s (f_alpha(t) + epsilon) g(x - x0)`` with spin
    sign ``s`` and ``g(u) = u`` for a homogeneous force, or the calibrated
    lattice profile otherwise.
    """

    pert: PerturbationSpec
    branch: Branch
    traj: PolynomialTrajectory
    lattice: LatticeSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "branch", Branch(self.branch))

    def spin_profile(self, x):
        u = np.asarray(x) - self.pert.x0
        if self.lattice is None:
            return u
        _warn_if_outside(self.lattice, u)
        return lattice_profile(self.lattice, u)

    def static_potential(self, cfg: PhysicalConfig, x):
        x = np.asarray(x)
        return 0.5 * cfg.spring * x**2 - self.pert.c * x

    def spin_force(self, cfg: PhysicalConfig, t):
        """Signed drive amplitude ``s (f_alpha(t) + epsilon)``."""
        return self.branch.sign * (force_function(self.traj, cfg)(t) + self.pert.epsilon)

    def potential(self, cfg: PhysicalConfig, x, t: float):
        return self.static_potential(cfg, x) - self.spin_force(cfg, t) * self.spin_profile(x)


@dataclass
class PropagationLog:
    times: list = field(default_factory=list)
    norms: list = field(default_factory=list)
    energies: list = field(default_factory=list)

    @property
    def max_norm_drift(self) -> float:
        if not self.norms:
            return 0.0
        return float(np.max(np.abs(np.asarray(self.norms) - 1.0)))

    def to_dict(self) -> dict:
        return {
            "max_norm_drift": self.max_norm_drift,
            "times_us": [t / US for t in self.times],
            "norm": np.asarray(self.norms).T.tolist(),
            "energy_J": np.asarray(self.energies).T.tolist(),
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def grid_span(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec) -> float:
    """Full grid width ``2 (max|alpha| + max|delta alpha| + 10 sigma)``."""
    s = np.linspace(0.0, 1.0, 2001)
    max_alpha = float(np.max(np.abs(traj.alpha(s * traj.t_final))))
    max_delta = 2.0 * (abs(pert.c_tilde(cfg)) + abs(pert.epsilon)) / cfg.spring
    return 2.0 * (max_alpha + max_delta + abs(pert.x0) + 10.0 * cfg.length_scale)


def _grid(grid_n: int, span: float):
    if grid_n < 2 or grid_n & (grid_n - 1):
        raise ConfigurationError("grid_n must be a power of two")
    if not (span > 0):
        raise ConfigurationError("span must be positive")
    dx = span / grid_n
    return -0.5 * span, dx


def fock_state(cfg: PhysicalConfig, n: int, grid_n: int = DEFAULT_GRID_N, span: float | None = None,
               center: float = 0.0) -> GridWavefunction:
    """n-th eigenfunction of the trap centered at ``center``, sampled on the grid."""
    if int(n) != n or n < 0:
        raise DomainError("n must be a non-negative integer")
    if n > 12:
        raise DomainError("grid Fock states are limited to n <= 12")
    sigma_x = math.sqrt(cfg.hbar / (2 * cfg.mass * cfg.omega))
    if span is None:
        span = 2.0 * (abs(center) + 12.0 * cfg.length_scale)
    x_min, dx = _grid(grid_n, span)
    if dx > sigma_x / 8:
        raise ConfigurationError(f"grid spacing {dx:.3e} m exceeds sigma/8 = {sigma_x / 8:.3e} m")
    if center - 8 * sigma_x < x_min or center + 8 * sigma_x > x_min + span:
        raise ConfigurationError("grid must extend at least 8 sigma beyond the center")
    x = x_min + dx * np.arange(grid_n)
    ell = cfg.length_scale
    phi = _kernels.hermite_functions(int(n), np.ascontiguousarray((x - center) / ell))[int(n)]
    amps = phi / math.sqrt(ell)
    amps = amps / math.sqrt(np.sum(amps**2) * dx)
    return GridWavefunction(x_min, dx, amps.astype(complex))


def ground_state(cfg: PhysicalConfig, center: float = 0.0, grid_n: int = DEFAULT_GRID_N,
                 span: float | None = None) -> GridWavefunction:
    """Gaussian of position variance ``hbar / (2 m w)`` centered at ``center``."""
    return fock_state(cfg, 0, grid_n, span, center)


def superposition(cfg: PhysicalConfig, occ: ModeOccupation, grid_n: int = DEFAULT_GRID_N,
                  span: float | None = None) -> GridWavefunction:
    """``sum_n c_n phi_n`` on the grid, for amplitudes up to n = 12."""
    amps = occ.amplitudes
    nz = np.nonzero(np.abs(amps) > 0)[0]
    if nz.size and nz.max() > 12:
        raise DomainError("grid superpositions are limited to n <= 12")
    total = None
    for n in nz:
        psi = fock_state(cfg, int(n), grid_n, span)
        total = psi.amplitudes * amps[n] if total is None else total + psi.amplitudes * amps[n]
    return GridWavefunction(psi.x_min, psi.dx, total)


def _check_steps(cfg: PhysicalConfig, n_steps: int):
    if n_steps < 10_000:
        raise ConfigurationError("n_steps must be at least 10^4")
    if cfg.t_final / n_steps > cfg.period / 50:
        raise ConfigurationError("time step exceeds 2 pi / (50 w)")


def _evolve(cfg: PhysicalConfig, specs, psi0s, n_steps: int, log_every: int = 0):
    """Propagate a batch; ``specs[b]`` drives row ``b`` of ``psi0s``."""
    _check_steps(cfg, n_steps)
    ref = psi0s[0]
    for p in psi0s[1:]:
        if not ref.same_grid(p):
            raise DomainError("all initial states must share one grid")
    n = ref.amplitudes.size
    x, dx = ref.x, ref.dx
    dt = cfg.t_final / n_steps
    hbar, m = cfg.hbar, cfg.mass

    k = 2 * np.pi * np.fft.fftfreq(n, dx)
    kin = hbar * k**2 / (2 * m) * dt
    k_full = np.exp(-1j * kin)
    k_half = np.exp(-0.5j * kin)

    base = np.ascontiguousarray([s.static_potential(cfg, x) * dt / hbar for s in specs])
    profile = np.ascontiguousarray([s.spin_profile(x) for s in specs], dtype=float)
    t_mid = (np.arange(n_steps) + 0.5) * dt
    coef = np.ascontiguousarray(
        np.array([-s.spin_force(cfg, t_mid) for s in specs]).T * dt / hbar)

    log = PropagationLog()

    def record(psi, t):
        norms = np.sum(np.abs(psi) ** 2, axis=1) * dx
        psi_k = np.fft.fft(psi, axis=1)
        kinetic = (np.sum(np.abs(psi_k) ** 2 * (hbar * k) ** 2 / (2 * m), axis=1)
                   / np.sum(np.abs(psi_k) ** 2, axis=1))
        pot = np.array([np.sum(np.abs(psi[b]) ** 2 * s.potential(cfg, x, t)) * dx / norms[b]
                        for b, s in enumerate(specs)])
        log.times.append(t)
        log.norms.append(norms)
        log.energies.append(kinetic + pot)

    psi = np.array([p.amplitudes for p in psi0s], dtype=complex)
    if log_every:
        record(psi, 0.0)
    psi = np.fft.ifft(k_half * np.fft.fft(psi, axis=1), axis=1)
    apply = _kernels.apply_potential_phase
    for step in range(n_steps):
        apply(psi, base, profile, coef[step])
        psi_k = np.fft.fft(psi, axis=1)
        psi_k *= k_half if step == n_steps - 1 else k_full
        psi = np.fft.ifft(psi_k, axis=1)
        if log_every and ((step + 1) % log_every == 0 or step == n_steps - 1):
            record(psi, (step + 1) * dt)
    norms = np.sum(np.abs(psi) ** 2, axis=1) * dx
    drift = float(np.max(np.abs(norms - 1.0)))
    if drift > 1e-6:
        raise NumericError(f"norm drift {drift:.3e} exceeds 1e-6")
    out = [GridWavefunction(ref.x_min, dx, row) for row in psi]
    return out, log


def propagate(cfg: PhysicalConfig, spec: PotentialSpec, psi0: GridWavefunction,
              n_steps: int = DEFAULT_STEPS, log_every: int = 0, return_log: bool = False):
    """Evolve ``psi0`` over [0, t_final]; optionally also return a :class:`PropagationLog`."""
    (psi,), log = _evolve(cfg, [spec], [psi0], n_steps, log_every)
    return (psi, log) if return_log else psi


def propagate_pair(cfg: PhysicalConfig, spec_up: PotentialSpec, spec_down: PotentialSpec,
                   psi0: GridWavefunction, n_steps: int = DEFAULT_STEPS, log_every: int = 0):
    """Both branches from one initial state: ``(psi_up, psi_down, log)``."""
    (psi_up, psi_down), log = _evolve(cfg, [spec_up, spec_down], [psi0, psi0], n_steps, log_every)
    return psi_up, psi_down, log


def branch_overlaps(cfg: PhysicalConfig, spec_up: PotentialSpec, spec_down: PotentialSpec,
                    psi0s, n_steps: int = DEFAULT_STEPS) -> list:
    """Branch overlaps for several initial states, propagated as one batch."""
    psi0s = list(psi0s)
    specs = [spec_up] * len(psi0s) + [spec_down] * len(psi0s)
    finals, _ = _evolve(cfg, specs, psi0s + psi0s, n_steps)
    half = len(psi0s)
    return [OverlapResult(finals[half + i].inner(finals[i])) for i in range(half)]


def branch_overlap(cfg: PhysicalConfig, spec_up: PotentialSpec, spec_down: PotentialSpec,
                   psi0: GridWavefunction, n_steps: int = DEFAULT_STEPS) -> OverlapResult:
    """``<psi_down(t_f)|psi_up(t_f)>`` from a common initial state."""
    return branch_overlaps(cfg, spec_up, spec_down, [psi0], n_steps)[0]


def branch_specs(traj: PolynomialTrajectory, pert: PerturbationSpec, scenario: str = "both",
                 lattice: LatticeSpec | None = None):
    """``(spec_up, spec_down)`` for the two interferometer scenarios."""
    if scenario == "both":
        return (PotentialSpec(pert, Branch.UP, traj, lattice),
                PotentialSpec(pert, Branch.DOWN, traj, lattice))
    if scenario == "one":
        if pert.epsilon != 0 or pert.x0 != 0:
            raise DomainError("the one-branch scenario takes only c (epsilon = x0 = 0)")
        return (PotentialSpec(pert, Branch.UP, traj, lattice),
                PotentialSpec(PerturbationSpec(), Branch.DOWN, traj, lattice))
    raise DomainError(f"unknown scenario {scenario!r}")
