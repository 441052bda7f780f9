"""convroots: tilted tail grids for convolution-equivalence numerics.

Heavy-tailed distributions on the half line are represented by their
exponentially tilted tails W(x) = exp(gamma0 x) * P(X > x) on uniform
grids.  The package provides certified convolution powers, exponential
moments and the complex transform along a vertical line, exponential
tilting and kernel smoothing, class-membership diagnostics for the
long-tailed / convolution-equivalent / locally subexponential families,
and a turnkey harness reproducing the failure of convolution-root closure.
"""

from .dist_core import (
    GriddedTiltRep,
    MMixtureSpec,
    TailSpec,
    interval_mass,
    make_exp_pareto,
    make_exponential,
    make_m_mixture,
    make_point_mass,
    make_scaled,
    make_xi,
    rep_from_tail_values,
    to_grid,
)
from .convolve import TiltedMassVector, conv, conv_pow, to_masses
from .transforms import (
    SmoothingKernel,
    TransformProfile,
    complex_transform,
    exp_moment,
    exp_moment_quadrature,
    find_zero_candidates,
    moment_is_finite,
    smooth,
    smoothed_tail_at,
    tilt,
)
from .diagnostics import (
    ClassVerdict,
    LimitEstimate,
    RootRatioReport,
    SplitBoundReport,
    conv_root_ratio,
    density_subexp_check,
    epsilon_sweep,
    estimate_limit,
    lattice_limits,
    tail_split_bounds,
    test_L_delta,
    test_L_gamma,
    test_S_delta,
    test_S_gamma,
    test_S_loc,
)
from .counterexample import CounterexampleConfig, ReproductionReport, full_report
from .errors import (
    CapExceededError,
    ConstructionError,
    DivergenceError,
    GridMismatchError,
    ToolkitError,
)

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "ClassVerdict",
    "ConstructionError",
    "CounterexampleConfig",
    "DivergenceError",
    "GriddedTiltRep",
    "GridMismatchError",
    "LimitEstimate",
    "MMixtureSpec",
    "ReproductionReport",
    "RootRatioReport",
    "SmoothingKernel",
    "SplitBoundReport",
    "TailSpec",
    "TiltedMassVector",
    "ToolkitError",
    "TransformProfile",
    "complex_transform",
    "conv",
    "conv_pow",
    "conv_root_ratio",
    "density_subexp_check",
    "epsilon_sweep",
    "estimate_limit",
    "exp_moment",
    "exp_moment_quadrature",
    "find_zero_candidates",
    "full_report",
    "interval_mass",
    "lattice_limits",
    "make_exp_pareto",
    "make_exponential",
    "make_m_mixture",
    "make_point_mass",
    "make_scaled",
    "make_xi",
    "moment_is_finite",
    "rep_from_tail_values",
    "smooth",
    "smoothed_tail_at",
    "tail_split_bounds",
    "test_L_delta",
    "test_L_gamma",
    "test_S_delta",
    "test_S_gamma",
    "test_S_loc",
    "tilt",
    "to_grid",
    "to_masses",
]
