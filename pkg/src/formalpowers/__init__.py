"""Pseudoanalytic formal powers for the static Maxwell system with radial permittivity."""

from __future__ import annotations

from formalpowers.bvp import BvpProblem, BvpSolution, evaluate_solution, make_problem, solve
from formalpowers.core import Domain, PathSpec, RadialProfile, eval_profile, profile_from_dict
from formalpowers.errors import FormalPowerError
from formalpowers.meridional import XSequence, build_x_sequence, eval_meridional_power
from formalpowers.transverse import (
    FormalPowerTable,
    GeneratingPairSeq,
    build_formal_powers,
    reconstruct_conjugate,
    transverse_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "BvpProblem",
    "BvpSolution",
    "Domain",
    "FormalPowerError",
    "FormalPowerTable",
    "GeneratingPairSeq",
    "PathSpec",
    "RadialProfile",
    "XSequence",
    "build_formal_powers",
    "build_x_sequence",
    "eval_meridional_power",
    "eval_profile",
    "evaluate_solution",
    "make_problem",
    "profile_from_dict",
    "reconstruct_conjugate",
    "solve",
    "transverse_sequence",
]
