"""Injectivity radii, controlling integrals and sharpness constructions
for local ring Q-homeomorphisms."""

__version__ = "0.1.0"

from .config import RunConfig, load_default_config
from .errors import (InconclusiveError, KorSearchError, NotApplicableError,
                     QuadratureError, UnsupportedMapError)
from .geometry import (INFINITY, Annulus, DimensionConstants, KorCertificate,
                       chordal_diameter, chordal_distance, constants,
                       kor_point, kor_verify, ring_modulus)
from .integrals import (DivergenceClass, IntegralResult, PsiWeight,
                        classify_divergence, controlling_integral_exact,
                        eta_normalize, fubini_rhs, integrate_I,
                        psi_canonical, psi_from_field, psi_fmo, upper_anchor)
from .mappings import (Composition, Exp2D, MapSpec, ProbeTable,
                       RadialStretch, RingCheck, Winding, WindingAxis,
                       Witness, axis_clearance, equicontinuity_probe,
                       exp2d_map, map_eval, noninjectivity_witness,
                       parse_mapspec, radial_stretch_from_q,
                       verify_ring_inequality, winding_map)
from .qfield import (FmoReport, GrowthCheck, QField, RadialProfile,
                     fmo_oscillation, log_growth_check, parse_qspec,
                     pr7_integral, q_average, q_eval, q_profile)
from .radius import (BoundParameters, InjectivityReport, SharpnessPlan,
                     build_sharpness, cap_constant, corollary_report,
                     default_parameters, estimate_delta, fmo_report,
                     zonal_cap_constant)
