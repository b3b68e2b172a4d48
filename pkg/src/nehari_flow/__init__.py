"""Numerical laboratory for a nonlocal parabolic equation with a Riesz-potential source.

The core objects live in submodules; the most used names are re-exported here.
"""

from .domain import DomainSpec, ModelParams, ScalarField, make_domain
from .flow import FlowConfig, Verdict, run
from .functionals import evaluate
from .kernels import BACKEND
from .potential import interaction, riesz_direct, riesz_fast
from .variational import stationary_solve, well_depth

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DomainSpec",
    "FlowConfig",
    "ModelParams",
    "ScalarField",
    "Verdict",
    "evaluate",
    "interaction",
    "make_domain",
    "riesz_direct",
    "riesz_fast",
    "run",
    "stationary_solve",
    "well_depth",
]
