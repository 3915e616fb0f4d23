"""Proofdoors: interpolant sequences, clause absorption and scaling analysis for unsatisfiable CNF."""

from .chunking import ChunkSpec, ChunkedFormula, build_chunked
from .cnf import CnfFormula, parse_dimacs, read_dimacs, unit_propagate, write_dimacs
from .door import Caps, Proofdoor, build_proofdoor, measure_params, sample_lattice, strongest_proofdoor
from .interpolation import (CutProblem, mcmillan_interpolant, strongest_interpolant, validate_interpolant,
                            weakest_interpolant)
from .solver import SolverConfig, Status, check_drat, solve

__version__ = "0.1.0"

__all__ = [
    "Caps", "ChunkSpec", "ChunkedFormula", "CnfFormula", "CutProblem", "Proofdoor", "SolverConfig", "Status",
    "build_chunked", "build_proofdoor", "check_drat", "mcmillan_interpolant", "measure_params", "parse_dimacs",
    "read_dimacs", "sample_lattice", "solve", "strongest_interpolant", "strongest_proofdoor", "unit_propagate",
    "validate_interpolant", "weakest_interpolant", "write_dimacs",
]
