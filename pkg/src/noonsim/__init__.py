"""Simulation of the heralded three-photon N00N-state double-slit experiment."""
from ._kernels import BACKEND
from .fock import (
    CreationMonomial,
    FockState,
    ModeId,
    ModeTransform,
    apply_monomial,
    apply_transform,
    inner_product,
    number_distribution,
    project_occupation,
    vacuum,
)
from .spatial import ExperimentGeometry, classical_visibility_bound

__version__ = "0.1.0"
