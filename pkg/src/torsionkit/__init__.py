"""Moving frames, geodesic torsion and total-torsion quantization along curves
in Riemannian manifolds given in a single chart."""

from .curve import SampledCurve, curve_length, reparametrize_by_arclength
from .exceptions import *  # noqa: F401,F403
from .frames import (DarbouxData, NormalField, OrthonormalFrameField, darboux_data,
                     detect_direction_field, frenet_data, is_parallel_rotation,
                     is_three_dimensional, parallel_frame_in_H, principal_normal, project,
                     rotate_normal, rotated_darboux_via_lemma, rotation_angle_between)
from .manifold import (ChartManifold, covariant_derivative_along, euclidean, exp_map,
                       hyperbolic, parallel_transport, sphere)
from .surface import (LevelSetSurface, Ribbon, construct_ribbon, ellipsoid, is_convex_along,
                      is_line_of_curvature, is_well_positioned, normal_along, torus,
                      trace_line_of_curvature)
from .torsion import (QuantizationReport, quantization_report, total_geodesic_torsion,
                      total_torsion, verify_theorem_suite)

__version__ = "0.1.0"
