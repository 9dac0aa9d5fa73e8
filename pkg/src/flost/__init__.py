"""Fourier low-rank and sparse tensor completion."""
from .estimator import (
    BoundReport, FlostModel, ObservationSet, RegularizationConfig, error_bound, fit,
    objective, parameter_count, reconstruct, rescaled_projection, theorem_lambda_schedule,
)
from .metrics import IndexSet, RmseReport, chunked_rmse, localtime_shift, percentile_rmse, rmse
from .prox import SvdFactors, complex_soft_threshold, svt, threshold_stack
from .synthesis import (
    SamplingSpec, SynthesisSpec, flost_truncate, generate_flost_truth, is_flost, sample_observations,
)
from .tensor import (
    SliceIndexPlan, SymmetryViolation, conjugate_symmetrize, extract_slice, frobenius_norm,
    mode3_dft, mode3_idft,
)
from .tuning import TuningResult, TuningSpec, grid_search, split_validation

__version__ = "0.1.0"
