"""Domain-preserving simulation of the stochastic SIS epidemic model.

Submodules:

* :mod:`sislab.model`    parameters, coefficients, transforms, thresholds, moment bounds
* :mod:`sislab.noise`    reproducible Wiener increments and exact coarsening
* :mod:`sislab.schemes`  the em, gy and sd integrators plus a batch driver
* :mod:`sislab.analysis` convergence, extinction, moment, domain and cost experiments
* :mod:`sislab.cli`      command-line front end
"""
from .model import SISParams, load_params
from .noise import WienerGrid, coarsen, generate
from .schemes import SchemeKind, Trajectory, simulate
from .analysis import ReferenceMode, strong_error

__version__ = "0.1.0"

__all__ = [
    "ReferenceMode",
    "SISParams",
    "SchemeKind",
    "Trajectory",
    "WienerGrid",
    "coarsen",
    "generate",
    "load_params",
    "simulate",
    "strong_error",
]
