"""Differentially private top-k selection with an adaptively chosen k."""

from stabletopk.accountant import (DEFAULT_ORDERS, Calibration, DpBudget,
                                   PrivacyLedger, RdpCurve, calibrate, compose,
                                   em_bounded_range_rdp, gaussian_rdp,
                                   laplace_rdp, rdp_to_dp, rnm_generic_rdp,
                                   zcdp_to_dp)
from stabletopk.exceptions import (BudgetExhaustedError, CalibrationError,
                                   EmptyDomainError, OutOfRangeError,
                                   ParameterError, ParseError, RankError)
from stabletopk.histogram import (BOTTOM, Histogram, SelectionOutcome,
                                  SortedView, build_histogram, gap,
                                  sorted_view, top_k_indices)
from stabletopk.mechanisms import (AbsDistance, DomainRestriction,
                                   MechanismReceipt, Zero, em_top_k_peel,
                                   pate_label, ptr_gaussian, ptr_laplace,
                                   regularized_large_gap, rnm_select,
                                   stable_top_k_adaptive, stable_top_k_fixed)
from stabletopk.noise import ForcedNoise, Gaussian, Gumbel, Laplace, RngStream
from stabletopk.sensitivity import (local_sensitivity, sensitivity_at_distance,
                                    smooth_sensitivity)

__version__ = "0.1.0"
