"""Numerical toolkit for weighted periodic-orbit counts of vector fields on
compact embedded manifolds: orbit search, exact rational index sums with
definite-type classification, branch continuation across homotopies with
period blow-up detection, k-tuple lifts that preserve index and multiplicity,
graded symmetry-breaking perturbation systems, and an exponential
period-growth certificate for conformal Reeb homotopies.
"""

__version__ = "0.1.0"

from .config import DEFAULT, ToolConfig, resolve_threads
from .errors import DomainError, FullerkitError, UsageError
from .geometry import (S3, SOLID_TORUS, T2, ContactFormFamily,
                       EmbeddedManifold, VectorFieldFamily, builtin_manifold)
from .orbits import PeriodicOrbit, find_orbit, search_orbits
from .index import (Classification, classify_partial_sums, fixed_point_index,
                    fuller_sum, fuller_terms, orbit_rotation_index,
                    parity_consistent)
from .continuation import Branch, blowup_fit, continue_branch, sky_report
from .correspondence import CorrespondenceReport, correspond
from .reeb import (PerturbationSystem, breaking_homotopy, broken_symmetry_form,
                   growth_bound_check, rescale_homotopy, round_contact)
from .scenarios import Scenario, load_builtin, load_scenario_file, resolve_scenario

__all__ = [
    "__version__", "DEFAULT", "ToolConfig", "resolve_threads",
    "FullerkitError", "DomainError", "UsageError",
    "EmbeddedManifold", "VectorFieldFamily", "ContactFormFamily",
    "S3", "T2", "SOLID_TORUS", "builtin_manifold",
    "PeriodicOrbit", "find_orbit", "search_orbits",
    "Classification", "classify_partial_sums", "fixed_point_index",
    "fuller_sum", "fuller_terms", "orbit_rotation_index", "parity_consistent",
    "Branch", "blowup_fit", "continue_branch", "sky_report",
    "CorrespondenceReport", "correspond",
    "PerturbationSystem", "breaking_homotopy", "broken_symmetry_form",
    "growth_bound_check", "rescale_homotopy", "round_contact",
    "Scenario", "load_builtin", "load_scenario_file", "resolve_scenario",
]
