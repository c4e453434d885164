"""Reduced-order prediction of a parametric airfoil's time-varying lift.

Shape deformation and RBF mesh morphing, DMD forecasting, dynamic active
subspaces and Gaussian process regression, driven by an analytic surrogate
of the full-order flow solver.
"""
from .active_subspaces import (
    ActiveSubspace,
    DyasSeries,
    ParameterDomain,
    compute_dyas,
    estimate_covariance,
    fit_active_subspace,
    frozen_parameters,
)
from .config import PipelineConfig, load_config
from .dmd import DmdModel, RankSpec, SnapshotEnsemble, fit_dmd, forecast
from .fom_surrogate import SurrogateSpec, lift, lift_gradient, run_ensemble
from .gpr import GprModel, fit_gpr
from .pipeline import run_pipeline, sensitivity_sweeps
from .rbf_morph import CutoffConfig, PointSet2D, RbfModel, fit_rbf, morph_mesh
from .shape_param import AirfoilProfile, BumpBasis, deform_profile, naca4_profile

__version__ = "0.1.0"

__all__ = [
    "ActiveSubspace",
    "AirfoilProfile",
    "BumpBasis",
    "compute_dyas",
    "CutoffConfig",
    "deform_profile",
    "DmdModel",
    "DyasSeries",
    "estimate_covariance",
    "fit_active_subspace",
    "fit_dmd",
    "fit_gpr",
    "fit_rbf",
    "forecast",
    "frozen_parameters",
    "GprModel",
    "lift",
    "lift_gradient",
    "load_config",
    "morph_mesh",
    "naca4_profile",
    "ParameterDomain",
    "PipelineConfig",
    "PointSet2D",
    "RankSpec",
    "RbfModel",
    "run_ensemble",
    "run_pipeline",
    "sensitivity_sweeps",
    "SnapshotEnsemble",
    "SurrogateSpec",
]
