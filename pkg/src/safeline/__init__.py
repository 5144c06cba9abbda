"""Continuous safety assessment pipeline for component-based systems.

From an architecture model the pipeline composes component fault trees,
computes minimal cut sets and top-event probabilities, generates and executes
side-effect-free fault-injection tests, assembles a claim-evidence assurance
case, and determines change impact between model versions.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
