"""Polynomial vector fields near the hyperplane at infinity.

The package computes the chart field at infinity of a polynomial vector
field, the holonomy form omega_1 and its residues, oriented trajectories with
their height and time integrals, singularity classification at infinity, and
the triangle-group side of Halphen fields.
"""

__version__ = "0.1.0"

from .polyfield import (InfinityChartField, MultiPoly, PolyError, PolyVectorField, field_from_dicts,  # noqa: E402
                        homogeneous_components, line_at_infinity_singular, load_field, rotate_chart,
                        to_infinity_chart)
from .infinity_form import (classify_h_point, classify_line_at_infinity, h_singular_loci,  # noqa: E402
                            numeric_residue, omega_coefficient)
from .trajectory import (Neighborhood, Trajectory, TrajectoryState, area_ratio, confinement_measure,  # noqa: E402
                         contraction_check, time_integral, trace)
from .singularities import (classify_singularity, find_singularities, semicomplete_report,  # noqa: E402
                            siegel_passage_audit, singularity_table)
from .halphen import (build_triangle_group, egyptian_enumerate, geodesic_ray, halphen_spectrum_check,  # noqa: E402
                      leaf_type, poincare_series, verify_relations)

__all__ = [
    "InfinityChartField", "MultiPoly", "PolyError", "PolyVectorField", "field_from_dicts",
    "homogeneous_components", "line_at_infinity_singular", "load_field", "rotate_chart", "to_infinity_chart",
    "classify_h_point", "classify_line_at_infinity", "h_singular_loci", "numeric_residue", "omega_coefficient",
    "Neighborhood", "Trajectory", "TrajectoryState", "area_ratio", "confinement_measure", "contraction_check",
    "time_integral", "trace", "classify_singularity", "find_singularities", "semicomplete_report",
    "siegel_passage_audit", "singularity_table", "build_triangle_group", "egyptian_enumerate", "geodesic_ray",
    "halphen_spectrum_check", "leaf_type", "poincare_series", "verify_relations",
]
