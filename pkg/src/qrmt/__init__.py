"""Quaternion sample covariance matrices: spectra, Marcenko-Pastur law and moment graphs."""

__version__ = "0.1.0"

from .quaternion import Quaternion
from .qmatrix import QMatrix, build_R, diamond, diamond_bruteforce, norm2
from .spectra import eigh, extreme_eigs, spectrum
from .mplaw import MPLaw
from .randgen import EntryDistribution, sample_matrix

__all__ = [
    "EntryDistribution", "MPLaw", "QMatrix", "Quaternion", "__version__", "build_R",
    "diamond", "diamond_bruteforce", "eigh", "extreme_eigs", "norm2", "sample_matrix",
    "spectrum",
]
