"""Collective-measurement CHSH toolkit.

Exact and Monte Carlo reproduction of the many-pair Bell scenario:
independent noisy singlet pairs measured collectively, counts binned by
majority vote or parity, CHSH evaluated and optimized, and the critical
visibility / critical pair-number landscape mapped.
"""

from .binning import (PARITY_BETA_SCALE, PARITY_S_LIMIT, BinningStrategy,
                      ChshEstimate, Majority, Parity, TiePolicy, bin_count,
                      binned_correlator, chsh_from_counts, chsh_value,
                      parity_chsh_analytic)
from .collective import CountDistribution, combine_counts, convolve_counts
from .errors import (FitError, InfeasibleStatisticsError, IngestionError,
                     InsufficientDataError, InvalidArgumentError,
                     ManyPairsError, NoViolationError)
from .optimize import (EXCEEDS_CAP, BinningComparison, CriticalCurve,
                       OptimizationResult, SettingsMode, VcFit,
                       binning_comparison, critical_pairs,
                       critical_visibility, family_chsh, fit_vc_curve,
                       max_chsh, parity_vc_approx,
                       scan_critical_visibilities, violation_ratio)
from .pairstats import (SETTING_PAIRS, CorrelatorTable, MeasurementSettings,
                        PairJointDistribution, joint_table,
                        settings_from_beta, werner_correlators)

__version__ = "0.1.0"
