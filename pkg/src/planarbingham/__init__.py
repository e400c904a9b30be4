"""2-D Bingham distributions on S^2 and a planar-symmetric rotation representation."""
from .bingham2d import (
    DEFAULT_QUAD,
    Bingham2D,
    QuadratureConfig,
    SampleSet,
    analyze,
    confidence,
    log_norm_const,
    log_pdf,
    mode,
    nll,
    nll_and_grad,
    nll_grad_A,
    norm_const,
    norm_const_grad,
    percentile_theta_approx,
    percentile_theta_empirical,
    sample,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateAxisError,
    DegenerateFrameError,
    InvalidArgumentError,
    SamplingError,
)
from .fitting import FitOptions, FitReport, fit_mle
from .mat3 import eig_sym3, gram_schmidt_rotation, triu_pack, triu_unpack
from .special import erfinv
from .symrep import (
    PlanarSymRep,
    confidence_mask,
    flip_rotation,
    flipmin_loss_quat,
    flipmin_loss_rotmat,
    reconstruct_mode,
    reconstruct_sampled,
    rep_loss,
    rep_loss_grad,
)
from .toyfield import ConsistencyReport, FieldScene, SceneConfig, TinyModel, evaluate_field, gen_scene, train_toy

__version__ = "0.1.0"
