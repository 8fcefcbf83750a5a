"""Gauge-integral functional calculus for self-adjoint operators.

Regulated functions are approximated uniformly by step functions, step
functions are integrated against spectral measures over gauge-fine tagged
partitions, and the resulting calculus ``f -> f(A)`` is checked against
direct spectral sums, mapped to spectra, extended to unbounded symbols by
truncation and used to build mild solutions of linear evolution equations.
"""

from ._domain import Cell, Domain
from .calculus import (HKIntegralResult, HomomorphismReport, apply_calculus, direct_apply,
                       hk_sum, homomorphism_report, integrate_regulated, integrate_step,
                       lipschitz_gap, operator_norm)
from .cauchy import (Datum, SemigroupModel, StepSemigroup, convergence_report, mild_solution,
                     semigroup_apply, step_semigroup)
from .errors import (ArgumentError, ConvergenceError, DivergenceSuspected, DomainError,
                     EssentialDiscontinuityError, GaugeSpectralError, GaugeTooSmallError,
                     NumericalError)
from .gauge import (Gauge, TaggedPartition, build_fine_partition, canonical_step_gauge,
                    is_fine, refine)
from .mapping import (SpectrumApprox, essential_range, hausdorff_distance, kernel_range_check,
                      point_spectrum, spectral_map)
from .regulated import (Break, Piecewise, RegulatedFn, StepFn, AtomicPerturbation,
                        approximate_by_steps, combine, construct, discontinuities, evaluate,
                        heaviside, indicator, side_limits, sup_norm_gap, thomae)
from .spectral_core import (DiscretePVM, GridPVM, ScalarMeasure, SymOperator, grid_model,
                            jacobi_eigh, scalar_measure, spectral_measure)
from .unbounded import (AtomicModel, CertifiedLimit, DensityModel, DomainVerdict,
                        domain_member, limit_integral, position_expectation,
                        truncated_integral)

__version__ = "0.1.0"
