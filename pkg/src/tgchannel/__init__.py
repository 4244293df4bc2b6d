"""Taylor-Goldstein spectral analysis of stratified Couette flow in a channel."""

from .specfun import Branch, BranchedArg, ComplexEval, PhysicalParams, Regime

__all__ = ["Branch", "BranchedArg", "ComplexEval", "PhysicalParams", "Regime"]

__version__ = "0.1.0"
