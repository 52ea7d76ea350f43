from parsfm.convex.accel import AccelParams, AccelResult, ball_accel
from parsfm.convex.ball import BallOracleParams, ball_optimize
from parsfm.convex.oracles import (
    FirstOrderOracle,
    FunctionOracle,
    LovaszOracle,
    RegularizedOracle,
    SmoothedOracle,
    distortion_bound,
    norm,
    project_to_ball,
    regularize,
    smoothed_gradient_sample,
    smoothing_radius,
)
from parsfm.convex.solvers import (
    ConvexResult,
    SolverConfig,
    solve_linf_box_constrained,
    solve_linf_unconstrained,
)

__all__ = [
    "AccelParams", "AccelResult", "ball_accel", "BallOracleParams", "ball_optimize",
    "FirstOrderOracle", "FunctionOracle", "LovaszOracle", "RegularizedOracle",
    "SmoothedOracle", "distortion_bound", "norm", "project_to_ball", "regularize",
    "smoothed_gradient_sample", "smoothing_radius", "ConvexResult", "SolverConfig",
    "solve_linf_box_constrained", "solve_linf_unconstrained",
]
