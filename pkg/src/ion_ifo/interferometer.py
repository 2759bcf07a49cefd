"""Readout, sensitivity sweeps and recovery of the unknown force.

After the second pi/2 pulse the spin-up population is
``1/2 + Re<psi_down|psi_up>/2``. Sweeping the trajectory amplitude moves the
sensitivity S and makes that population oscillate as ``cos(2 c S / hbar)``,
with period ``pi hbar / c`` in S.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import csv
import io
import math
import os

import numpy as np
from scipy.optimize import least_squares

from . import overlap, phases, tdse
from .core import HBAR, NM, US, ZN, DomainError, IonIfoError, PhysicalConfig, wrap_phase
from .dynamics import PerturbationSpec
from .overlap import ModeOccupation, OverlapResult
from .trajectory import PolynomialTrajectory, design_alpha_A, sensitivity

ENGINES = ("analytic", "tdse")
MIN_ROWS = 20
MIN_PERIODS = 1.5
MAX_RESIDUAL = 0.05


class ExtractionError(IonIfoError):
    """The population table does not determine the force."""


@dataclass(frozen=True)
class ExperimentSpec:
    cfg: PhysicalConfig
    traj: PolynomialTrajectory
    pert: PerturbationSpec = PerturbationSpec()
    scenario: str = "both"

    # The readout assumes an equal-weight spin superposition.
    spin_amplitudes = (1 / math.sqrt(2), 1 / math.sqrt(2))

    def __post_init__(self):
        if self.scenario not in ("both", "one"):
            raise DomainError(f"unknown scenario {self.scenario!r}")


@dataclass(frozen=True)
class SweepRow:
    sensitivity: float
    p_up: float
    p_down: float
    delta_phi: float
    modulus: float


@dataclass(frozen=True)
class SweepTable:
    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        for r in rows:
            if abs(r.p_up + r.p_down - 1.0) > 1e-12 or not (0 <= r.p_up <= 1 and 0 <= r.p_down <= 1):
                raise DomainError(f"invalid populations in row {r!r}")
        object.__setattr__(self, "rows", rows)

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def sensitivity(self) -> np.ndarray:
        return self.column("sensitivity")

    @property
    def p_up(self) -> np.ndarray:
        return self.column("p_up")

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["S_nm_us", "P_up", "P_down", "delta_phi_rad", "modulus"])
        for r in self.rows:
            writer.writerow([f"{r.sensitivity / (NM * US):.12g}", f"{r.p_up:.12g}",
                             f"{r.p_down:.12g}", f"{r.delta_phi:.12g}", f"{r.modulus:.12g}"])
        return buf.getvalue()

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv_text())

    @classmethod
    def from_csv(cls, path) -> "SweepTable":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            expected = ["S_nm_us", "P_up", "P_down", "delta_phi_rad", "modulus"]
            if reader.fieldnames != expected:
                raise DomainError(f"sweep table columns must be {expected}, got {reader.fieldnames}")
            rows = [SweepRow(float(r["S_nm_us"]) * NM * US, float(r["P_up"]), float(r["P_down"]),
                             float(r["delta_phi_rad"]), float(r["modulus"])) for r in reader]
        return cls(tuple(rows))


@dataclass(frozen=True)
class ExtractionResult:
    c_estimate: float
    fit_residual: float
    period_estimate: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "period_estimate", math.pi * HBAR / self.c_estimate)

    def to_dict(self) -> dict:
        return {"c_zN": self.c_estimate / ZN,
                "period_nm_us": self.period_estimate / (NM * US),
                "residual": self.fit_residual}


def populations(result: OverlapResult) -> tuple[float, float]:
    """Spin populations ``(P_up, P_down)`` after the closing pi/2 pulse."""
    if result.modulus > 1 + 1e-9:
        raise DomainError(f"overlap modulus {result.modulus!r} exceeds 1")
    re = result.value.real
    p_up = min(1.0, max(0.0, 0.5 + 0.5 * re))
    return p_up, 1.0 - p_up


def _reference_phase(exp: ExperimentSpec) -> float:
    if exp.scenario == "one":
        return phases.phase_difference_one_branch(exp.cfg, exp.traj, exp.pert.c)
    pert = exp.pert
    if pert.x0 != 0:
        # Only used to unwrap the overlap argument, so the shifted-frame form suffices.
        pert = PerturbationSpec(c=pert.c_tilde(exp.cfg), epsilon=pert.epsilon)
    return phases.phase_difference_with_error(exp.cfg, exp.traj, pert)


def predict(exp: ExperimentSpec, occ: ModeOccupation | None = None, engine: str = "analytic",
            grid_n: int = tdse.DEFAULT_GRID_N, n_steps: int = tdse.DEFAULT_STEPS) -> SweepRow:
    """Populations and branch phase for one experimental setting.

    ``delta_phi`` is unwrapped: the leading phase ``G_down - G_up`` plus the
    wrapped remainder of the computed overlap's argument.
    """
    occ = ModeOccupation.fock(0, 0) if occ is None else occ
    if engine == "analytic":
        pert = exp.pert
        if pert.x0 != 0:
            # Measured from x0 the potential has the homogeneous force c_tilde only.
            if pert.epsilon != 0:
                raise DomainError("the analytic engine needs x0 = 0 when epsilon != 0")
            pert = PerturbationSpec(c=pert.c_tilde(exp.cfg))
        result = overlap.state_overlap(exp.cfg, exp.traj, pert, occ, exp.scenario)
    elif engine == "tdse":
        up, down = tdse.branch_specs(exp.traj, exp.pert, exp.scenario)
        span = tdse.grid_span(exp.cfg, exp.traj, exp.pert)
        psi0 = tdse.superposition(exp.cfg, occ, grid_n, span)
        result = tdse.branch_overlap(exp.cfg, up, down, psi0, n_steps)
    else:
        raise DomainError(f"unknown engine {engine!r}")
    p_up, p_down = populations(result)
    ref = _reference_phase(exp)
    delta_phi = ref + wrap_phase(result.phase - ref) if result.modulus > 0 else ref
    return SweepRow(sensitivity(exp.traj), p_up, p_down, float(delta_phi), result.modulus)


def _sweep_task(args):
    cfg, c, m, engine, grid_n, n_steps = args
    exp = ExperimentSpec(cfg, design_alpha_A(cfg, m), PerturbationSpec(c=c))
    return predict(exp, engine=engine, grid_n=grid_n, n_steps=n_steps)


def resolve_jobs(jobs: int | None) -> int:
    """Worker count, with ``ION_IFO_JOBS`` taking precedence over the argument."""
    env = os.environ.get("ION_IFO_JOBS")
    if env:
        try:
            jobs = int(env)
        except ValueError:
            raise DomainError(f"ION_IFO_JOBS must be an integer, got {env!r}") from None
    jobs = 1 if jobs is None else int(jobs)
    if jobs < 1:
        raise DomainError("jobs must be at least 1")
    return jobs


def sensitivity_sweep(cfg: PhysicalConfig, c: float, m_values, engine: str = "analytic",
                      jobs: int | None = 1, grid_n: int = tdse.DEFAULT_GRID_N,
                      n_steps: int = tdse.DEFAULT_STEPS) -> SweepTable:
    """One row per midpoint displacement ``M`` (trajectory alpha_A), sorted by S."""
    m_values = [float(m) for m in m_values]
    if not m_values:
        raise DomainError("m_values must not be empty")
    if engine not in ENGINES:
        raise DomainError(f"unknown engine {engine!r}")
    tasks = [(cfg, c, m, engine, grid_n, n_steps) for m in m_values]
    jobs = resolve_jobs(jobs)
    if jobs == 1 or len(tasks) == 1:
        rows = [_sweep_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    rows.sort(key=lambda r: r.sensitivity)
    return SweepTable(tuple(rows))


def _model(c, s):
    return 0.5 + 0.5 * np.cos(2 * c * s / HBAR)


def extract_c(table: SweepTable) -> ExtractionResult:
    """Least-squares fit of ``P_up(S) = 1/2 + cos(2 c S / hbar)/2`` over c.

    A coarse scan over c seeds the fit. The scan runs from the force whose
    period spans the table 1.5 times up to the Nyquist limit of the S spacing.
    """
    if not isinstance(table, SweepTable):
        raise ExtractionError("extraction needs a SweepTable; a single population is ambiguous")
    if len(table) < MIN_ROWS:
        raise ExtractionError(f"need at least {MIN_ROWS} rows, got {len(table)}")
    s = table.sensitivity
    p = table.p_up
    order = np.argsort(s)
    s, p = s[order], p[order]
    span = float(s[-1] - s[0])
    steps = np.diff(s)
    steps = steps[steps > 0]
    if span <= 0 or steps.size == 0:
        raise ExtractionError("sensitivities do not span a range")
    c_min = MIN_PERIODS * math.pi * HBAR / span
    c_max = math.pi * HBAR / (2 * float(np.median(steps)))
    if c_max <= c_min:
        raise ExtractionError("table is too coarse to resolve 1.5 oscillation periods")
    s_scale = float(np.max(np.abs(s)))
    dc = 0.05 * HBAR / (2 * s_scale)
    grid = np.arange(c_min, c_max + dc, dc)
    sse = np.concatenate([np.sum((_model(chunk[:, None], s) - p) ** 2, axis=1)
                          for chunk in np.array_split(grid, max(1, grid.size * s.size // 2**20))])
    c0 = float(grid[int(np.argmin(sse))])

    scale = c0
    fit = least_squares(lambda u: _model(u[0] * scale, s) - p, x0=[1.0],
                        xtol=1e-15, ftol=1e-15, gtol=1e-15)
    c_est = float(fit.x[0] * scale)
    residual = float(np.sqrt(np.mean(fit.fun**2)))
    if residual > MAX_RESIDUAL:
        raise ExtractionError(f"fit residual {residual:.3g} exceeds {MAX_RESIDUAL}")
    if c_est <= 0 or span * c_est / (math.pi * HBAR) < MIN_PERIODS:
        raise ExtractionError("table spans fewer than 1.5 oscillation periods")
    return ExtractionResult(c_est, residual)


__all__ = [
    "ExperimentSpec", "SweepRow", "SweepTable", "ExtractionResult", "ExtractionError",
    "populations", "predict", "sensitivity_sweep", "extract_c", "resolve_jobs",
]
