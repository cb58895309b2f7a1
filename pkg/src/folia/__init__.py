"""Computational workbench for plane polynomial foliations.

Subpackages cover exact polynomial and differential-form algebra,
foliation families and their singular points, numeric leaf tracing and
holonomy, first Melnikov functions, monodromy of hyperelliptic level
fibrations, and Picard-Fuchs / Brieskorn-module reductions.
"""

__version__ = "0.1.0"

from .errors import FoliaError, InputError, NumericError, ParseError
from .poly import GaussianRational, Poly, parse_poly, resultant
from .forms import DifferentialForm, d_poly, dual_field, pq_form
from .foliation import (
    FoliationRecord,
    PolyMap,
    count_centers,
    dulac_family,
    expected_center_count,
    find_singularities,
    hamiltonian,
    integrability_obstruction,
    logarithmic,
    pullback_form,
)
from .flow import holonomy, numeric_center_test, section_at, trace_cycle
from .melnikov import m1, m1_sweep, make_problem, perturbed_record, tangency_test
from .monodromy import (
    FibrationModel,
    MonodromyOperator,
    build_model,
    cycle_at_infinity,
    monodromy_generators,
    orbit_ball,
    orbit_span,
    twist_matrix,
)
from .gaussmanin import (
    ConnectionMatrix,
    basis_periods,
    brieskorn_basis,
    brieskorn_reduce,
    gelfand_leray_check,
    period_of_form,
    pf_residual,
    picard_fuchs,
)
from .formats import (
    canonical_json,
    fmt_float,
    load_form,
    load_map,
    load_record,
)
from .acceptance import parallel_map, render_report, run_acceptance

__all__ = [
    "FoliaError",
    "InputError",
    "NumericError",
    "ParseError",
    "GaussianRational",
    "Poly",
    "parse_poly",
    "resultant",
    "DifferentialForm",
    "d_poly",
    "dual_field",
    "pq_form",
    "FoliationRecord",
    "PolyMap",
    "count_centers",
    "dulac_family",
    "expected_center_count",
    "find_singularities",
    "hamiltonian",
    "integrability_obstruction",
    "logarithmic",
    "pullback_form",
    "holonomy",
    "numeric_center_test",
    "section_at",
    "trace_cycle",
    "m1",
    "m1_sweep",
    "make_problem",
    "perturbed_record",
    "tangency_test",
    "FibrationModel",
    "MonodromyOperator",
    "build_model",
    "cycle_at_infinity",
    "monodromy_generators",
    "orbit_ball",
    "orbit_span",
    "twist_matrix",
    "ConnectionMatrix",
    "basis_periods",
    "brieskorn_basis",
    "brieskorn_reduce",
    "gelfand_leray_check",
    "period_of_form",
    "pf_residual",
    "picard_fuchs",
    "canonical_json",
    "fmt_float",
    "load_form",
    "load_map",
    "load_record",
    "parallel_map",
    "render_report",
    "run_acceptance",
    "__version__",
]
