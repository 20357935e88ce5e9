"""Thermal states of the 2D transverse-field Ising model from imaginary-time
evolution of a purified PEPS with self-consistent bond renormalization."""

__version__ = "0.1.0"

from .gates import BETA0, H0, ModelParams  # noqa: F401
from .tensors import Tensor, contract, fuse, split, svd, symm_eig  # noqa: F401
