"""Exact sampling and asymptotics of q-weighted random Young diagrams."""

from ._kernels import BACKEND
from .boxed import (
    BoxGeometry,
    LatticePath,
    YoungDiagram,
    diagram_from_path,
    log_prob_joint_even,
    log_prob_marginal_even,
    log_prob_marginal_odd,
    mode_L_sharp,
    path_from_diagram,
    sample_diagram,
    transition_kernel,
)
from .gaussian import GaussianPath, ou_covariance, sample_ou_bridge, sample_stationary_ou
from .harness import (
    ConfigError,
    CovarianceReport,
    ExperimentConfig,
    ShapeReport,
    emit_report,
    load_report,
    run_fluctuations,
    run_limit_shape,
    run_unbounded,
    run_verification_suite,
)
from .qcore import (
    GaussianPolynomial,
    LogZTable,
    QParam,
    build_logz_table,
    enumerate_gaussian_polynomial,
    log_q_binomial,
    log_q_factorial,
    q_integer,
)
from .shape import (
    EnsembleParams,
    ShapeFunction,
    fluctuation_scale_f,
    hessian_F2_at_critical,
    limit_shape,
    universal_embedding,
    universal_shape,
)
from .unbounded import UnboundedSample, sample_unbounded, vershik_distance

__version__ = "0.1.0"
