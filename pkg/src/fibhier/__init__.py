"""Fibonacci forbidden-factor Hamiltonians: words, automata, growth, spectra, QUBOs, annealing."""

__version__ = "0.1.0"

from .automata import AcAutomaton, AvoidanceDfa, build_ac, count_words, prune_to_avoidance, rung_dfa
from .growth import (
    GrowthReport,
    PlasticClosedForm,
    perron_root,
    plastic_closed_form,
    plastic_sequence,
    rounding_identity_scan,
    staircase,
)
from .hobo import HoboPolynomial, QuboModel, build_hobo, quadratize, verify_reduction
from .spectra import HamiltonianSpec, energy, full_spectrum, kernel_equals_language, local_sector_rank
from .words import MffSet, Word, boundary_flip_mffs, factor_set, fibonacci_word_prefix, scan_mffs

__all__ = [
    "AcAutomaton",
    "AvoidanceDfa",
    "GrowthReport",
    "HamiltonianSpec",
    "HoboPolynomial",
    "MffSet",
    "PlasticClosedForm",
    "QuboModel",
    "Word",
    "boundary_flip_mffs",
    "build_ac",
    "build_hobo",
    "count_words",
    "energy",
    "factor_set",
    "fibonacci_word_prefix",
    "full_spectrum",
    "kernel_equals_language",
    "local_sector_rank",
    "perron_root",
    "plastic_closed_form",
    "plastic_sequence",
    "prune_to_avoidance",
    "quadratize",
    "rounding_identity_scan",
    "rung_dfa",
    "scan_mffs",
    "staircase",
    "verify_reduction",
]
