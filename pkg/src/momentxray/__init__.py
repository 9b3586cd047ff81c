"""Numerics for the X-ray transform restricted to moment-curve directions."""

__version__ = "0.1.0"

from .decomposition import (CombinedPiece, DyadicPiece, SlabPiece,
                            combined_decompose, dyadic_decompose,
                            slab_decompose, trim_frequency)
from .exponents import (INF, ExponentTriple, Infinity, InterpConstants,
                        balance_ratio, conj_exponent, interp_constants,
                        interpolated_triple, inv, k0_index, theta_zero,
                        triple_for_theta)
from .field import (Grid, MomentCurve, SampledField, gamma_eval,
                    grid_from_box, interpolate, lorentz_mixed_norm,
                    lorentz_source_norm, lp_norm, mixed_norm, read_field,
                    truncate, write_field)
from .paraball import (Cover, Paraball, conjugate, dual_mixed_norm,
                       fit_paraball, from_symmetry, intersection_volume,
                       membership, mock_distance, partition, quasi_ratio,
                       raster_dual, raster_primal, sample_points, scale,
                       to_symmetry, unit_paraball, volume)
from .search import (SearchConfig, SearchReport, SearchState, ascent_step,
                     dual_map, init_state, localization_report, r95_radius,
                     run_search)
from .symmetry import (Scale, Shear, Symmetry, Translate, compose, identity,
                       inverse, map_source, map_target, normalize_symmetry,
                       pullback_source, pullback_target, shear_matrix,
                       source_jacobian, target_factors)
from .xray import (TransformPlan, apply_X, apply_X_star, bilinear,
                   phi_functional)

__all__ = [n for n in dir() if not n.startswith("_")]
