"""Preshared-key digital signatures with universal hashing: simulator, attacks, bounds, optimizer."""

from .bits import BitString
from .gf2 import Gf2Poly
from .uhash import AsuKey, LfsrToeplitzKey, asu_hash, axu_hash

__all__ = ["AsuKey", "BitString", "Gf2Poly", "LfsrToeplitzKey", "asu_hash", "axu_hash"]
__version__ = "0.1.0"
