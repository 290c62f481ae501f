"""Large deviations of moment-map estimates from Schur-Weyl type measurements.

The package computes the rate function of the outcome distribution of
a compact-group measurement on ``m`` copies of a state, checks it against
closed forms, and simulates the measurement to compare empirical decay
with the rate.
"""

from types import ModuleType as _ModuleType

from .errors import (DegenerateRegion, EnvelopeOverflow, InvalidConfig, InvariantViolation,
                     MaxIterations, MismatchedGroup, MomentLDPError, NotAState, NotDominant,
                     SamplerTimeout, SingularInput, SingularMinor, TooLarge, UnsupportedRep)
from .lie import (SU2, AlgebraVector, DualVector, GroupElement, GroupSpec, Torus, Unitary,
                  coadjoint, haar_sample, iwasawa, random_element)
from .moment import chamber_decompose, chi, log_chi, moment_map, nonlinear_pairing
from .optimize import OptimizerOptions
from .polytope import Polytope
from .rate import (Certificate, RateResult, log_Z, rate_AN, rate_bipartite_pure, rate_contracted,
                   rate_cramer, rate_keyl_closed, rate_maximally_mixed, rate_numeric, tilt_point)
from .regions import ChamberBall, Complement, Everything, HalfSpace, TraceBall, parse_region
from .representations import (Power, Representation, Spin, Standard, TensorProduct, TorusRep,
                              highest_weight_vector, weight_data)
from .simulate import (empirical_rate, estimate_mu, exact_mu, infimum_rate, sample_measurement,
                       sample_measurements, verify_upper_bound)
from .states import diagonal_state, maximally_mixed, pure_state, random_state, validate_state

__version__ = "0.1.0"

__all__ = [n for n, v in dict(globals()).items()
           if not n.startswith("_") and not isinstance(v, _ModuleType)]
