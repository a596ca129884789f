"""Adversarial and knowledge transferability between differentiable models.

Small-perturbation attacks are the H-space singular vectors of a model's
Jacobian; the package measures how such attacks transfer between models,
how closely the models' Jacobians and outputs match under affine maps, and
runs the synthetic perturbation experiment around those quantities.
"""

from ._accel import backend
from .attacks import AttackSpectrum, Deviation, attack_spectrum, deviation, pgd_attack
from .dataset import Dataset
from .errors import (
    InvalidInput,
    NotPsd,
    NumericalInconsistency,
    TrainingDiverged,
    XferlabError,
)
from .linalg import EigResult, SvdResult, pinv, svd, sym_eig, trace_inner
from .metric_space import MetricSpace, NormalizedVector, from_psd, identity
from .models import (
    Analytic1D,
    LinearModel,
    MlpOneHidden,
    fit_mlp,
    init_mlp,
    perturb_weights,
    train_full_batch,
)
from .synthdata import MixtureSpec, RbfTarget, make_mixture, make_target, sample_dataset
from .transfer import (
    AffineMap,
    FiniteAlpha1,
    PairStats,
    TransferReport,
    affine_fit,
    alpha1_finite_eps,
    alpha1_small_eps,
    alpha1x2,
    alpha2,
    alpha2_pair_form,
    check_theorem4,
    check_theorem5,
    func_match,
    generalized_a1,
    grad_match_closed,
    grad_match_theorem1,
    knowledge_dist,
    pair_stats,
    theorem1_terms,
    transfer_report,
)

__version__ = "0.1.0"
