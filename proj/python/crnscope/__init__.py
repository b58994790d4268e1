"""Stability analysis for mass-action reaction networks."""

from ._core import (
    SCHEMA_VERSION,
    Certificate,
    DecompositionFormatError,
    InputError,
    Network,
    ParseError,
    analyze,
    balance,
    certificate_from_json,
    certify,
    declared_equilibrium,
    decompose,
    find_equilibrium,
    load_network,
    parse_network,
    sample_perturbations,
    simulate,
)

__all__ = [
    "SCHEMA_VERSION",
    "Certificate",
    "DecompositionFormatError",
    "InputError",
    "Network",
    "ParseError",
    "analyze",
    "balance",
    "certificate_from_json",
    "certify",
    "declared_equilibrium",
    "decompose",
    "find_equilibrium",
    "load_network",
    "parse_network",
    "sample_perturbations",
    "simulate",
]
