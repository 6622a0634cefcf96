"""Exact diagonalization and MPS analytics of scarred spin-1 XY chains."""

from .hilbert import SectorSpec, SectorBasis, SizeError, SpecError, build_full_basis, build_sector_basis
from .hamiltonian import HamiltonianSpec, OperatorMatrix, build_hamiltonian

__all__ = ["SectorSpec", "SectorBasis", "SizeError", "SpecError", "build_full_basis",
           "build_sector_basis", "HamiltonianSpec", "OperatorMatrix", "build_hamiltonian"]
__version__ = "0.1.0"
