"""Inverse-engineered reference trajectories and their driving forces.

A trajectory is a polynomial in reduced time ``s = t / t_final`` that starts
and ends at rest with zero acceleration. The force that makes it an exact
solution of the forced oscillator is ``m (alpha'' + omega^2 alpha)``.
"""

from dataclasses import dataclass, field
import enum
import math

import numpy as np
from numpy.polynomial import polynomial as npoly

from .core import (DEFAULT_QUADRATURE, NM, US, DomainError, PhysicalConfig,
                   Quadrature, integrate, solve_linear)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class TrajectoryKind(str, enum.Enum):
    ALPHA_A = "AlphaA"
    ALPHA_B = "AlphaB"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class TrajectoryDerivatives:
    alpha: np.ndarray
    alpha_dot: np.ndarray
    alpha_ddot: np.ndarray


@dataclass(frozen=True, eq=False)
class PolynomialTrajectory:
    """``alpha(t) = sum_j coeffs[j] (t/t_final)**j`` with coefficients in meters."""

    coeffs: np.ndarray
    t_final: float
    kind: TrajectoryKind = TrajectoryKind.CUSTOM
    _d1: np.ndarray = field(init=False, repr=False)
    _d2: np.ndarray = field(init=False, repr=False)
    _quotient: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0 or coeffs.size > 9:
            raise DomainError("trajectory needs between 1 and 9 coefficients (degree <= 8)")
        if not np.all(np.isfinite(coeffs)):
            raise DomainError("trajectory coefficients must be finite")
        if not (self.t_final > 0):
            raise DomainError("t_final must be positive")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "kind", TrajectoryKind(self.kind))
        object.__setattr__(self, "_d1", npoly.polyder(coeffs, 1) / self.t_final)
        object.__setattr__(self, "_d2", npoly.polyder(coeffs, 2) / self.t_final**2)
        object.__setattr__(self, "_quotient", _rest_quotient(coeffs))
        self._check_rest()

    def _check_rest(self):
        """Reject polynomials that do not start and end at rest with zero acceleration."""
        if self._quotient is not None:
            return
        scale = float(np.max(np.abs(npoly.polyval(np.linspace(0, 1, 1001), self.coeffs))))
        if scale == 0:
            return
        for order in range(3):
            ends = npoly.polyval(np.array([0.0, 1.0]), npoly.polyder(self.coeffs, order))
            if np.max(np.abs(ends)) > 1e-12 * scale:
                raise DomainError("trajectory must start and end with zero position, velocity and "
                                  "acceleration")

    # Vectorized evaluation without domain checks, for quadrature integrands.
    # Trajectories that start and end at rest are evaluated as s^3 (1-s)^3 q(s),
    # which keeps the end conditions exact in floating point; the monomial
    # form of high-degree designs cancels heavily near s = 1.
    def _factored(self, t, order: int):
        s = np.asarray(t) / self.t_final
        q = self._quotient
        w = (s * (1 - s)) ** 3
        wq = w * npoly.polyval(s, q)
        if order == 0:
            return wq
        w1 = 3 * (s * (1 - s)) ** 2 * (1 - 2 * s)
        q1 = npoly.polyval(s, npoly.polyder(q, 1))
        if order == 1:
            return (w1 * npoly.polyval(s, q) + w * q1) / self.t_final
        w2 = 6 * s * (1 - s) * ((1 - 2 * s) ** 2 - s * (1 - s))
        q2 = npoly.polyval(s, npoly.polyder(q, 2))
        return (w2 * npoly.polyval(s, q) + 2 * w1 * q1 + w * q2) / self.t_final**2

    def alpha(self, t):
        if self._quotient is not None:
            return self._factored(t, 0)
        return npoly.polyval(np.asarray(t) / self.t_final, self.coeffs)

    def alpha_dot(self, t):
        if self._quotient is not None:
            return self._factored(t, 1)
        return npoly.polyval(np.asarray(t) / self.t_final, self._d1)

    def alpha_ddot(self, t):
        if self._quotient is not None:
            return self._factored(t, 2)
        return npoly.polyval(np.asarray(t) / self.t_final, self._d2)

    def reduced_derivative(self, s, order: int):
        """d^order alpha / ds^order in meters."""
        return npoly.polyval(s, npoly.polyder(self.coeffs, order))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "t_final_us": self.t_final / US,
            "coeffs_nm": [c / NM for c in self.coeffs],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PolynomialTrajectory":
        unknown = set(data) - {"kind", "t_final_us", "coeffs_nm"}
        if unknown:
            raise DomainError(f"unknown trajectory keys: {sorted(unknown)}")
        try:
            return cls(coeffs=np.asarray(data["coeffs_nm"], dtype=float) * NM,
                       t_final=float(data["t_final_us"]) * US,
                       kind=TrajectoryKind(data.get("kind", "Custom")))
        except (KeyError, TypeError, ValueError) as exc:
            raise DomainError(f"malformed trajectory document: {exc}") from exc


def _rest_quotient(coeffs: np.ndarray):
    """``q`` with ``alpha = s^3 (1-s)^3 q(s)``, or None if alpha does not start and end at rest."""
    if coeffs.size < 7 or np.any(coeffs[:3] != 0):
        return None
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0:
        return None
    q = coeffs[3:]
    for _ in range(3):
        q, rem = npoly.polydiv(q, [1.0, -1.0])
        if np.max(np.abs(rem)) > 1e-10 * scale:
            return None
    return q


def zero_trajectory(t_final: float) -> PolynomialTrajectory:
    return PolynomialTrajectory(np.zeros(1), t_final, TrajectoryKind.CUSTOM)


def _boundary_rows(degree: int):
    """Rows imposing alpha, alpha', alpha'' = 0 at s = 0 and s = 1."""
    rows = []
    for order in range(3):
        for s0 in (0.0, 1.0):
            row = np.zeros(degree + 1)
            for j in range(order, degree + 1):
                row[j] = math.perm(j, order) * s0 ** (j - order)
            rows.append(row)
    return rows


def _solve_constraints(rows, rhs) -> np.ndarray:
    """Solve the design system with the s = 0 conditions applied exactly.

    Those rows only say ``c0 = c1 = c2 = 0``; eliminating them before the LU
    solve keeps the start of the trajectory exactly at rest instead of at
    rest up to roundoff.
    """
    A = np.asarray(rows, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    at_start = [0, 2, 4]
    keep = [i for i in range(A.shape[0]) if i not in at_start]
    coeffs = np.zeros(A.shape[1])
    coeffs[3:] = solve_linear(A[np.ix_(keep, range(3, A.shape[1]))], rhs[keep])
    return coeffs


def _value_row(degree: int, s0: float):
    return s0 ** np.arange(degree + 1)


def design_alpha_A(cfg: PhysicalConfig, midpoint_M: float) -> PolynomialTrajectory:
    """Sixth-order trajectory with ``alpha(t_f/2) = midpoint_M``.

    The solution is ``64 M s^3 (1-s)^3``; it is obtained from the general
    constraint solve so the same machinery backs :func:`design_alpha_B`.
    """
    if not math.isfinite(midpoint_M):
        raise DomainError("midpoint_M must be finite")
    rows = _boundary_rows(6) + [_value_row(6, 0.5)]
    rhs = np.zeros(7)
    rhs[6] = midpoint_M
    coeffs = _solve_constraints(rows, rhs)
    return PolynomialTrajectory(coeffs, cfg.t_final, TrajectoryKind.ALPHA_A)


def design_alpha_B(cfg: PhysicalConfig, target_sensitivity: float, v: float) -> PolynomialTrajectory:
    """Eighth-order trajectory with prescribed sensitivity and
    ``alpha(t_f/5) = alpha(4 t_f/5) = v``."""
    if not (math.isfinite(target_sensitivity) and math.isfinite(v)):
        raise DomainError("target_sensitivity and v must be finite")
    rows = _boundary_rows(8)
    rows.append(1.0 / np.arange(1, 10))
    rows.append(_value_row(8, 0.2))
    rows.append(_value_row(8, 0.8))
    rhs = np.zeros(9)
    rhs[6] = target_sensitivity / cfg.t_final
    rhs[7] = v
    rhs[8] = v
    coeffs = _solve_constraints(rows, rhs)
    return PolynomialTrajectory(coeffs, cfg.t_final, TrajectoryKind.ALPHA_B)


def _check_time(traj, t):
    t = np.asarray(t, dtype=float)
    slack = 1e-12 * traj.t_final
    if np.any(t < -slack) or np.any(t > traj.t_final + slack) or not np.all(np.isfinite(t)):
        raise DomainError(f"t must lie in [0, {traj.t_final!r}]")
    return t


def evaluate(traj: PolynomialTrajectory, t) -> TrajectoryDerivatives:
    """alpha, alpha_dot and alpha_ddot at ``t`` (scalar or array)."""
    t = _check_time(traj, t)
    out = TrajectoryDerivatives(traj.alpha(t), traj.alpha_dot(t), traj.alpha_ddot(t))
    if t.ndim == 0:
        return TrajectoryDerivatives(float(out.alpha), float(out.alpha_dot), float(out.alpha_ddot))
    return out


def driving_force(traj: PolynomialTrajectory, cfg: PhysicalConfig, t):
    """Force ``m (alpha'' + omega^2 alpha)`` in newtons."""
    t = _check_time(traj, t)
    f = cfg.mass * (traj.alpha_ddot(t) + cfg.omega**2 * traj.alpha(t))
    return float(f) if t.ndim == 0 else f


def force_function(traj: PolynomialTrajectory, cfg: PhysicalConfig):
    """Unchecked vectorized ``t -> f_alpha(t)`` for integrands and ODE oracles."""
    m, w2 = cfg.mass, cfg.omega**2
    return lambda t: m * (traj.alpha_ddot(t) + w2 * traj.alpha(t))


def sensitivity(traj: PolynomialTrajectory) -> float:
    """Closed-form ``S = int_0^tf alpha dt`` in m*s."""
    j = np.arange(traj.coeffs.size)
    return float(traj.t_final * np.sum(traj.coeffs / (j + 1)))


def cubic_metric(traj: PolynomialTrajectory, q: Quadrature = DEFAULT_QUADRATURE) -> float:
    """``int_0^tf alpha^3 dt`` in m^3*s."""
    return float(integrate(lambda t: traj.alpha(t) ** 3, 0.0, traj.t_final, q))


def optimize_v(cfg: PhysicalConfig, target_sensitivity: float, v_range,
               q: Quadrature = DEFAULT_QUADRATURE, resolution: float = 0.1 * NM) -> float:
    """Golden-section search for the ``v`` that minimizes ``|int alpha_B^3 dt|``."""
    lo, hi = (float(v_range[0]), float(v_range[1]))
    if not (hi > lo):
        raise DomainError("v_range must be a nonempty interval (lo < hi)")

    def objective(v):
        return abs(cubic_metric(design_alpha_B(cfg, target_sensitivity, v), q))

    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > resolution:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = objective(d)
    return 0.5 * (a + b)
