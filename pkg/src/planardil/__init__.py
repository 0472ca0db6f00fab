"""Kernels, Pick feasibility and explicit dilations over planar domains."""

from .domain_kernels import KernelIndex, PlanarDomain, TruncatedKernel

__version__ = "0.1.0"

__all__ = ["KernelIndex", "PlanarDomain", "TruncatedKernel", "__version__"]
