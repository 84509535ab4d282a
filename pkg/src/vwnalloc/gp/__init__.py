"""Geometric-program representation and embedded interior-point solver."""

from .posynomial import (
    GpProblem,
    GpSolution,
    Monomial,
    Posynomial,
    PosyProduct,
    dump_gp,
    evaluate,
    parse_gp,
)
from .logdomain import CompiledGp, log_transform
from .solver import solve

__all__ = [
    "CompiledGp",
    "GpProblem",
    "GpSolution",
    "Monomial",
    "Posynomial",
    "PosyProduct",
    "dump_gp",
    "evaluate",
    "log_transform",
    "parse_gp",
    "solve",
]
