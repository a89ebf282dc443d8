"""Deviation inequalities for martingales and orthomartingales in smooth
Banach spaces: executable bounds, process simulators and verification."""

from .bound_engine import (BoundParams, BoundValue, Constants, constants, field_constant,
                           iterated_weight_I, iteration_lemma_bound, largedev_rhs,
                           lemma1_rhs, theorem1_rhs, theorem2_rhs, theorem2_rhs_condvar,
                           theorem3_rhs, theorem3_rhs_condvar, weak_norm, weak_type_bound,
                           weighted_tail_integral)
from .errors import AnalyticTailUnavailable, DomainError, InputError, ResourceError
from .mc_estimator import (MCEstimate, brute_force_max_tail, estimate_field_max_tail,
                           estimate_max_tail, estimate_max_tails)
from .process_zoo import (FieldModel, IidParetoSym, IidSign, IidUniformSphere,
                          MartingaleModel, VolModulated, model_from_dict,
                          verify_orthomartingale)
from .smooth_space import SmoothSpaceSpec, norm, verify_smoothness
from .tails import parse_tail
from .verify_harness import (BoundReport, Scenario, check_decay, complete_convergence_series,
                             lemma2_property_check, lemma3_property_check, run_scenario)

__version__ = "0.1.0"
