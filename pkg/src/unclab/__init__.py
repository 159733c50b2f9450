"""Numerical laboratory for the Heisenberg uncertainty deficit.

Function representations, the deficit functional and its quartic
expansion, L2-nearest Gaussians, Fourier and Hermite tools, and
empirical stability scans.
"""

__version__ = "0.1.0"
