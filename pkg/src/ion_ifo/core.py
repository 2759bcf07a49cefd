"""Physical configuration, units, quadrature and the dense linear solver."""

from dataclasses import dataclass
from functools import lru_cache
import math
import warnings

import numpy as np
import scipy.linalg

# CODATA 2018
HBAR = 1.054571817e-34
AMU = 1.66053906660e-27

BE9_MASS_AMU = 9.012182

# Boundary units used by the CLI and file formats.
NM = 1e-9
US = 1e-6
ZN = 1e-21
MHZ = 1e6


class IonIfoError(Exception):
    """Base class for errors raised by this package."""


class DomainError(IonIfoError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularSystemError(IonIfoError, np.linalg.LinAlgError):
    """The linear system is numerically singular."""


class NumericError(IonIfoError, ArithmeticError):
    """A numerical procedure produced a non-finite or drifting result."""


class ConfigurationError(IonIfoError, ValueError):
    """A grid or run configuration cannot support the requested accuracy."""


@dataclass(frozen=True)
class PhysicalConfig:
    """Ion mass (kg), trap angular frequency (rad/s) and process time (s)."""

    mass: float
    omega: float
    t_final: float
    hbar: float = HBAR

    def __post_init__(self):
        for name in ("mass", "omega", "t_final", "hbar"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and positive, got {value!r}")

    @property
    def spring(self) -> float:
        """m*omega**2 in N/m."""
        return self.mass * self.omega**2

    @property
    def length_scale(self) -> float:
        """Oscillator length sqrt(hbar/(m omega))."""
        return math.sqrt(self.hbar / (self.mass * self.omega))

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega

    def with_t_final(self, t_final: float) -> "PhysicalConfig":
        return PhysicalConfig(self.mass, self.omega, t_final, self.hbar)


def make_config(mass_amu: float = BE9_MASS_AMU, freq_megahertz: float = 2.0,
                t_final_us: float = 0.5) -> PhysicalConfig:
    """Build a :class:`PhysicalConfig` from laboratory units (u, MHz, us)."""
    for name, value in (("mass_amu", mass_amu), ("freq_megahertz", freq_megahertz),
                        ("t_final_us", t_final_us)):
        if not (math.isfinite(value) and value > 0):
            raise DomainError(f"{name} must be positive, got {value!r}")
    return PhysicalConfig(mass=mass_amu * AMU,
                          omega=2 * math.pi * freq_megahertz * MHZ,
                          t_final=t_final_us * US)


@dataclass(frozen=True)
class Quadrature:
    """Fixed-order quadrature rule on a finite interval.

    Only Gauss-Legendre is provided. With the default 256 nodes the rule is
    exact for polynomials up to degree 511.
    """

    node_count: int = 256
    scheme: str = "gauss-legendre"

    def __post_init__(self):
        if self.node_count < 64:
            raise DomainError("node_count must be at least 64")
        if self.scheme != "gauss-legendre":
            raise DomainError(f"unknown quadrature scheme {self.scheme!r}")

    def rule(self, a: float, b: float):
        """Nodes and weights mapped onto [a, b]."""
        x, w = _leggauss(self.node_count)
        half = 0.5 * (b - a)
        return a + half * (x + 1.0), half * w


DEFAULT_QUADRATURE = Quadrature()


@lru_cache(maxsize=8)
def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def integrate(f, a: float, b: float, q: Quadrature = DEFAULT_QUADRATURE):
    """Integrate a vectorized function of time over [a, b].

    ``f`` receives an array of nodes and may return real or complex values.
    """
    if b < a:
        raise DomainError(f"integration bounds reversed: a={a!r} > b={b!r}")
    if a == b:
        return 0.0
    t, w = q.rule(a, b)
    values = np.asarray(f(t))
    if values.shape != t.shape:
        values = np.broadcast_to(values, t.shape)
    if not np.all(np.isfinite(values)):
        raise NumericError("integrand is not finite on the quadrature nodes")
    return np.sum(w * values)


def solve_linear(A, b):
    """Solve ``A x = b`` by LU with partial pivoting.

    Raises
    ------
    SingularSystemError
        If any pivot is below ``1e-14 * ||A||_inf``.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError(f"A must be square, got shape {A.shape}")
    if b.shape[0] != A.shape[0]:
        raise DomainError(f"b has length {b.shape[0]}, expected {A.shape[0]}")
    scale = np.linalg.norm(A, np.inf)
    with warnings.catch_warnings():
        # Singularity is reported below with our own exception.
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
    if scale == 0 or np.min(np.abs(np.diag(lu))) < 1e-14 * scale:
        raise SingularSystemError("matrix is numerically singular")
    return scipy.linalg.lu_solve((lu, piv), b)


def wrap_phase(phi):
    """Map angles onto (-pi, pi]."""
    wrapped = np.mod(np.asarray(phi) + np.pi, 2 * np.pi) - np.pi
    wrapped = np.where(wrapped == -np.pi, np.pi, wrapped)
    return wrapped if wrapped.ndim else float(wrapped)
