"""Classical forced-oscillator motion in dimensionless phase space.

Positions and momenta are scaled as ``Y = sqrt(m w / 2 hbar) y`` and
``P = p / sqrt(2 hbar m w)`` and combined into the complex number
``Z = Y + iP``. Phase-space points are plain Python complex numbers.
"""

from dataclasses import dataclass
import csv
import enum
import math

import numpy as np

from . import _kernels
from .core import (DEFAULT_QUADRATURE, US, DomainError, PhysicalConfig, Quadrature,
                   integrate)
from .trajectory import PolynomialTrajectory, force_function


class Branch(str, enum.Enum):
    UP = "up"
    DOWN = "down"

    @property
    def sign(self) -> int:
        return 1 if self is Branch.UP else -1


class Frame(str, enum.Enum):
    LAB = "lab"
    ROTATING = "rotating"


@dataclass(frozen=True)
class PerturbationSpec:
    """Unknown force ``c`` (N), driving error ``epsilon`` (N), crossing point ``x0`` (m)."""

    c: float = 0.0
    epsilon: float = 0.0
    x0: float = 0.0

    def __post_init__(self):
        for name in ("c", "epsilon", "x0"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    def c_tilde(self, cfg: PhysicalConfig) -> float:
        """Effective homogeneous force ``c - m w^2 x0``."""
        return self.c - cfg.spring * self.x0


@dataclass(frozen=True, eq=False)
class PhaseSpacePath:
    times: np.ndarray
    points: np.ndarray
    frame: Frame
    omega: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        points = np.asarray(self.points, dtype=complex)
        if times.shape != points.shape or times.ndim != 1:
            raise DomainError("times and points must be 1-D arrays of equal length")
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise DomainError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "frame", Frame(self.frame))

    def to_rotating(self) -> "PhaseSpacePath":
        if self.frame is Frame.ROTATING:
            return self
        return PhaseSpacePath(self.times, np.exp(1j * self.omega * self.times) * self.points,
                              Frame.ROTATING, self.omega)

    def to_csv(self, path, stride: int = 1) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["t_us", "Y", "P", "frame"])
            for t, z in zip(self.times[::stride], self.points[::stride]):
                writer.writerow([f"{t / US:.12g}", f"{z.real:.12g}", f"{z.imag:.12g}",
                                 self.frame.value])


def position_scale(cfg: PhysicalConfig) -> float:
    """Factor turning meters into the dimensionless Y."""
    return math.sqrt(cfg.mass * cfg.omega / (2 * cfg.hbar))


def momentum_scale(cfg: PhysicalConfig) -> float:
    """Factor turning kg*m/s into the dimensionless P."""
    return 1.0 / math.sqrt(2 * cfg.hbar * cfg.mass * cfg.omega)


def to_complex(cfg: PhysicalConfig, y, v):
    return position_scale(cfg) * np.asarray(y) + 1j * momentum_scale(cfg) * cfg.mass * np.asarray(v)


def analytic_Z(cfg: PhysicalConfig, force, z0: complex, t: float,
               q: Quadrature = DEFAULT_QUADRATURE) -> complex:
    """Closed-form solution of the forced oscillator in complex phase space.

    ``Z(t) = exp(-i w t) [Z(0) + i/sqrt(2 hbar m w) int_0^t exp(i w tau) F(tau) dtau]``
    """
    if t < 0:
        raise DomainError("t must be non-negative")
    w = cfg.omega
    drive = integrate(lambda tau: np.exp(1j * w * tau) * force(tau), 0.0, t, q)
    return complex(np.exp(-1j * w * t) * (z0 + 1j * momentum_scale(cfg) * drive))


def delta_alpha(cfg: PhysicalConfig, gamma: float, t):
    """Displacement caused by a constant force switched on at t=0."""
    return gamma / cfg.spring * (1.0 - np.cos(cfg.omega * np.asarray(t)))


def delta_alpha_dot(cfg: PhysicalConfig, gamma: float, t):
    return gamma / (cfg.mass * cfg.omega) * np.sin(cfg.omega * np.asarray(t))


def delta_alpha_integral(cfg: PhysicalConfig, gamma: float, t: float) -> float:
    """``int_0^t delta_alpha dt'`` in closed form."""
    w = cfg.omega
    return float(gamma / cfg.spring * (t - math.sin(w * t) / w))


def delta_Z(cfg: PhysicalConfig, gamma: float, t) -> complex:
    """``gamma (1 - exp(-i w t)) / sqrt(2 hbar m w^3)``."""
    if np.any(np.asarray(t) < 0):
        raise DomainError("t must be non-negative")
    z = gamma * (1.0 - np.exp(-1j * cfg.omega * np.asarray(t))) / math.sqrt(
        2 * cfg.hbar * cfg.mass * cfg.omega**3)
    return complex(z) if np.ndim(z) == 0 else z


def branch_force(cfg: PhysicalConfig, traj: PolynomialTrajectory, pert: PerturbationSpec,
                 branch, scenario: str = "both"):
    """Total homogeneous force acting on one spin branch.

    ``scenario="both"``: ``+-(f_alpha + epsilon) + c_tilde``.
    ``scenario="one"``: ``f_alpha + c`` on the up branch, ``-f_alpha`` on the down branch.
    """
    branch = Branch(branch)
    f_alpha = force_function(traj, cfg)
    sign = branch.sign
    if scenario == "both":
        offset = sign * pert.epsilon + pert.c_tilde(cfg)
    elif scenario == "one":
        if pert.epsilon != 0 or pert.x0 != 0:
            raise DomainError("the one-branch scenario takes only c (epsilon = x0 = 0)")
        offset = pert.c if branch is Branch.UP else 0.0
    else:
        raise DomainError(f"unknown scenario {scenario!r}")
    return lambda t: sign * f_alpha(t) + offset


def integrate_newton(cfg: PhysicalConfig, force, y0: float = 0.0, v0: float = 0.0,
                     steps: int = 100_000) -> PhaseSpacePath:
    """Fixed-step RK4 solution of ``y'' + w^2 y = F/m`` on [0, t_final].

    ``force`` must accept an array of times.
    """
    if steps < 1000:
        raise DomainError("steps must be at least 1000")
    dt = cfg.t_final / steps
    half_grid = np.linspace(0.0, cfg.t_final, 2 * steps + 1)
    samples = np.broadcast_to(np.asarray(force(half_grid), dtype=float), half_grid.shape)
    y, v = _kernels.rk4_oscillator(np.ascontiguousarray(samples), cfg.omega**2,
                                   1.0 / cfg.mass, dt, float(y0), float(v0))
    return PhaseSpacePath(half_grid[::2], to_complex(cfg, y, v), Frame.LAB, cfg.omega)


def rotating_area(path: PhaseSpacePath) -> float:
    """Signed area swept by ``Z_r = exp(i w t) Z``, ``int (Y_r dP_r - P_r dY_r) / 2``."""
    if path.times.size < 2:
        raise DomainError("path needs at least two samples")
    zr = path.to_rotating().points
    return float(_kernels.shoelace_area(np.ascontiguousarray(zr.real),
                                        np.ascontiguousarray(zr.imag)))
