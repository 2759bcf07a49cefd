"""Driven trapped-ion interferometer for measuring weak homogeneous forces."""

from .core import (AMU, HBAR, MHZ, NM, US, ZN, ConfigurationError, DomainError, IonIfoError,
                   NumericError, PhysicalConfig, Quadrature, SingularSystemError, make_config)
from .dynamics import Branch, PerturbationSpec
from .interferometer import ExperimentSpec, ExtractionError, extract_c, predict, sensitivity_sweep
from .overlap import ModeOccupation, OverlapResult, state_overlap
from .trajectory import PolynomialTrajectory, design_alpha_A, design_alpha_B, sensitivity

__version__ = "0.1.0"
