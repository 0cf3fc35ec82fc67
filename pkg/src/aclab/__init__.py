"""Numerical laboratory for diffuse-interface energy measures.

Solves the stationary forced interface equation on uniform grids and
computes the geometric-measure diagnostics of its energy: equidistribution
of Dirichlet and potential energy, ball and slab monotonicity identities,
density ratios, the first-variation identity, and integer quantization of
layer energy.
"""

__version__ = "0.1.0"

from .fields import (Grid, PERIODIC, Region, RegionError, ScalarField,
                     VectorField, ZERO_FLUX, boundary_profile,
                     cumulative_ball_profile, gradient, integrate,
                     interpolate, laplacian, line_sample)
from .measures import (AnalysisParams, DensityFields, NormReport,
                       corollary_holder_check, density_fields,
                       diffuse_mean_curvature_norm, first_variation_identity,
                       norm_report, smooth_test_field, tilt_excess,
                       transition_region_split)
from .monotonicity import (MonotonicityReport, SlabReport,
                           density_ratio_profile, monotonicity_report,
                           sheet_separation_integral, slab_report)
from .phasefield import (Constants, LayerSpec, PhaseFieldState, SolverError,
                         build_layer_stack, build_radial_layer, constants,
                         double_well, double_well_prime, heteroclinic,
                         make_state, manufactured_forcing, solve_stationary)
from .proofdevices import GDeltaLedger, GDeltaParams, g_delta, g_delta_ledger
from .quantization import (Line, QuantizationReport, detect_layers,
                           quantization_check, smallest_exceeding_integer)
from .scenarios import (ConstantProfile, LayerStackProfile, RadialProfile,
                        Scenario, ScenarioError, SolvedBubbleProfile,
                        SolvedFromForcingProfile, build, standard_corpus,
                        to_config)
