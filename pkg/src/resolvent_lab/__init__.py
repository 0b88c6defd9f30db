"""Truncated Fock-space numerics for resolvent algebras, Toeplitz operators and Berezin transforms."""
from . import kernels
from .fock import FockSpace, WeightVector
from .operators import OperatorMatrix, ResolventDescriptor
from .symbols import parse_symbol, to_text

__version__ = "0.1.0"
BACKEND = kernels.BACKEND

__all__ = ["FockSpace", "WeightVector", "OperatorMatrix", "ResolventDescriptor", "parse_symbol",
           "to_text", "BACKEND", "__version__"]
