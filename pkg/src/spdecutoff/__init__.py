"""Spectral-Galerkin study of abrupt equilibration for stochastic heat and
damped wave equations under small additive or multiplicative noise."""

__version__ = "0.1.0"

from .spectral_core import (
    EigenSystem,
    ModeCoefficients,
    HeatLeadingData,
    WaveSpectrum,
    WaveState,
    build_box_eigensystem,
    eval_eigenfunction,
    heat_leading_data,
    wave_spectrum,
    wave_decompose,
)
from .semigroup import (
    OverdampedLeader,
    heat_apply,
    heat_leader_error,
    wave_apply,
    wave_mode_propagator,
    wave_overdamped_leader,
    wave_subcritical_norm_sq,
    decay_constants,
)
from .noise_sim import (
    JumpMark,
    NoiseSpec,
    heat_gaussian_convolution_law,
    wave_gaussian_convolution_law,
    sample_heat_gaussian_convolution,
    sample_wave_gaussian_convolution,
    sample_heat_levy_convolution,
    heat_levy_second_moment,
    log_moment_check,
)
from .wasserstein import (
    w2_diag_gaussian,
    w2_gaussian_2x2,
    wp_empirical_1d,
    w2_product,
    shift_bounds,
    shift_linearity_check,
    homogeneity_check,
    ergodic_bound,
)
from .cutoff import (
    CutoffReport,
    heat_cutoff_time,
    heat_profile,
    heat_error_bound,
    renormalized_distance_heat,
    renormalized_distance_wave,
    cutoff_inequality_gap,
    simple_cutoff_scan,
    wave_cutoff_time,
    wave_profile_overdamped,
    wave_error_bound,
    wave_window_diagnostics,
    large_data_identity,
)
from .multiplicative import (
    MultBrownianSpec,
    MultLevySpec,
    LevyMark,
    mult_brownian_flow_sample,
    mult_second_moment_exact,
    mult_profile,
    levy_stochexp_sample,
    levy_flow_oracle,
    levy_second_moment_exact,
    levy_mult_profile,
)
from ._rng import stream
