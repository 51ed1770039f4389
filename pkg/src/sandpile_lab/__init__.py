"""Abelian sandpile transience experiments: simulation, electrical potentials and walk counting."""
from .grid import GridShape, parse_vertex
from .reports import FitResult, LemmaReport
from .sandpile import (
    Config,
    DriveReport,
    Odometer,
    add_and_stabilize,
    burning_test,
    drive_to_recurrence,
    new_config,
    render_frames,
    stabilize,
    tcl_exact,
)
from .electro import effective_resistance, potentials, verify_reciprocity
from .harness import SuiteConfig, run_suite
from .lemmas import HypothesisError, verify_walk_lemma

__version__ = "0.1.0"

__all__ = [
    "Config",
    "DriveReport",
    "FitResult",
    "GridShape",
    "HypothesisError",
    "LemmaReport",
    "Odometer",
    "SuiteConfig",
    "add_and_stabilize",
    "burning_test",
    "drive_to_recurrence",
    "effective_resistance",
    "new_config",
    "parse_vertex",
    "potentials",
    "render_frames",
    "run_suite",
    "stabilize",
    "tcl_exact",
    "verify_reciprocity",
    "verify_walk_lemma",
]
