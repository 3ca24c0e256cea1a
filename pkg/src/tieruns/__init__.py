"""Runs test for regression residuals with repeated measurements.

Residual signs are read in order of the independent variable; observations
sharing a value are put in uniformly random order first.  The package also
holds the Monte Carlo machinery that calibrates this procedure against
layouts without repeats.
"""

from ._backend import BACKEND
from .comparison import (CaseComparison, SidakThreshold, TwoSampleResult, borderline_escalation,
                         compare_case, compare_family, sidak_threshold, two_sample_runs_test)
from .errors import (DegenerateDataError, ExactLimitError, RankDeficientError, TierunsError,
                     ZeroResidualError)
from .regression import LINE, FitResult, ModelSpec, fit_arrays, least_squares_fit
from .runs import (EXACT_LIMIT, Method, RunsStatistic, RunsTestResult, SignSequence, count_runs,
                   exact_runs_pmf, runs_moments, runs_test, runs_test_exact, runs_test_normal)
from .simulation import (ModeCenteredCI, RunsHistogram, SimulationCase, evenly_spaced_equivalent,
                         generate_trial, mode_centered_ci, registry_cases, run_case)
from .ties import (GroupedDataset, Observation, PermutationPlan, ZeroPolicy, classical_runs_test,
                   draw_permutation, extended_runs_test, group_by_time, make_observations,
                   residual_sign_sequence)

__version__ = "0.1.0"
