"""Gadgets that emulate -XX couplings in transverse-field annealing.

Submodules:

``pauli``      weighted Pauli strings and their sparse matrices
``effective``  Schur-complement effective Hamiltonians on basis partitions
``gadgets``    three-body, one-hot and chain gadgets with closed-form limits
``toy``        the weighted independent-set benchmark and its anneal variants
``spectral``   gap curves, minimum gaps and sweeps
``dynamics``   Schrodinger evolution, ground-state probability, preparation
``cli``        the ``xxgadget`` command
"""

from .pauli import Observable, PauliTerm, assemble
from .toy import ToyInstance, Variant, build_anneal

__all__ = ["Observable", "PauliTerm", "assemble", "ToyInstance", "Variant", "build_anneal"]
__version__ = "0.1.0"
