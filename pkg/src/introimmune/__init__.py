"""Desk-scale priority constructions of introimmune sets, with finite-stage verifiers."""

from .pairing import pair, unpair
from .substrate import (FiniteBinaryOracle, HaltingOracle, Substrate, UnregisteredIndex,
                        ask_halting)

__all__ = ["FiniteBinaryOracle", "HaltingOracle", "Substrate", "UnregisteredIndex",
           "ask_halting", "pair", "unpair"]
__version__ = "0.1.0"
