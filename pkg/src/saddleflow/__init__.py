"""saddleflow: saddle-point optimizers, their high-resolution ODE models, and
stability / Lyapunov / convergence-rate verification tools."""

from .problems import (
    BilinearGame,
    Operator,
    QuarticCounterexample,
    ScaledIdentity,
    fd_jacobian,
    make_problem,
    monotonicity_probe,
    random_bilinear,
)
from .optimizers import (
    EG,
    GDA,
    OGDA,
    ImplicitOGDA,
    LookaheadGDA,
    OGDAStateSpace,
    OGDAVariableStep,
    Trajectory,
    gradient_queries,
    run,
)
from .flows import IntegratorConfig, integrate, make_flow, ogda2_w_from_omega, rhs

__all__ = [
    "BilinearGame", "Operator", "QuarticCounterexample", "ScaledIdentity",
    "fd_jacobian", "make_problem", "monotonicity_probe", "random_bilinear",
    "EG", "GDA", "OGDA", "ImplicitOGDA", "LookaheadGDA", "OGDAStateSpace",
    "OGDAVariableStep", "Trajectory", "gradient_queries", "run",
    "IntegratorConfig", "integrate", "make_flow", "ogda2_w_from_omega", "rhs",
]

__version__ = "0.1.0"
