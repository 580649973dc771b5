"""Symbolic-numeric toolkit for 3-dimensional contact metric structures."""

from .expr import DomainError, ParseError, diff, parse, render, simplify
from .structure import ChartSpec, ContactStructure, build_from_frame, build_from_tensors, validate
from .curvature import check_B_identities, tau_phi
from .nullity import abc_at, classify, extract_kmn_at, phi_basis_at
from .dhomothety import apply as dhomothetic
from .charts import ChartParams, build_case1, build_case2, catalog, verify_theorem4
from .specfile import load, loads

__version__ = "0.1.0"

__all__ = [
    "DomainError", "ParseError", "diff", "parse", "render", "simplify",
    "ChartSpec", "ContactStructure", "build_from_frame", "build_from_tensors", "validate",
    "check_B_identities", "tau_phi", "abc_at", "classify", "extract_kmn_at", "phi_basis_at",
    "dhomothetic", "ChartParams", "build_case1", "build_case2", "catalog", "verify_theorem4",
    "load", "loads",
]
