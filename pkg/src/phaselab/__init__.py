"""phaselab: a numerical laboratory for geometric phase integrals.

Build sum-of-squares Lagrangians from analytic systems, locate and
classify their critical points, evaluate the stationary-phase model of
the associated oscillatory integral, check it against a brute-force
quadrature oracle, and run the desk-scale rationality-test construction
with its exact critical family and theta series.
"""

from .betaflow import build_surrogate, expansion_term, series_vs_direct
from .critpoints import (CriticalPoint, FinderSettings,
                         classify_critical_point, find_critical_points)
from .errors import PhaselabError
from .exprtext import parse_expression, parse_field, to_text
from .fields import Box, ExpressionField, evaluate_with_derivatives
from .irrational import (CriticalFamily, IrrationalityProblem,
                         exact_zero_family, family_det, family_hessian,
                         family_signature, irrationality_report,
                         make_problem, theta_limit, theta_partial,
                         theta_tail_bound, window_schedule)
from .lagrangian import (GeometricLagrangian, build_algebraic_lagrangian,
                         build_coupled_lagrangian,
                         build_integer_points_lagrangian,
                         build_irrationality_lagrangian,
                         build_norm_lagrangian,
                         build_rational_points_lagrangian)
from .phasetrack import PhaseSequence, geometric_schedule, track_phase
from .quadrature import (QuadratureResult, QuadratureSettings,
                         oscillatory_integral)
from .special import digamma, tetragamma, trigamma
from .stationary import (AsymptoticTerm, PhasePrediction, asymptotic_value,
                         boundary_constant, predict_phase, terms_from_points)

__version__ = "0.1.0"
