"""Low separation rank tensor generalized linear models.

A coefficient tensor constrained to a sum of Tucker-type components with a
shared core is fit to exponential-family responses by block coordinate
descent.  Two factor-update rules are provided: QR-projected gradient steps
(``lsrtr``) and orthogonalized momentum via Newton-Schulz polar iterations
(``lsrtr-m``).
"""

from .dataset_io import VolumeDataset, balanced_subsample, load_npz, load_vessel
from .glm import (
    Dataset,
    GlmFamily,
    LINEAR,
    LOGISTIC,
    POISSON,
    block_gradients,
    full_gradient,
    get_family,
    loss,
    predict,
    predict_many,
    predictor,
    residuals,
    training_loss,
)
from .lsr import (
    LsrParams,
    LsrRank,
    load_params,
    max_orthonormality_residual,
    orthonormalize_qr,
    perturbed_init,
    random_ground_truth,
    reconstruct,
    save_params,
)
from .metrics import (
    ClassificationReport,
    TrialRecord,
    auc_score,
    classification_report,
    convergence_success_rate,
    early_stop_select,
    estimation_error,
    mean_curve_and_band,
    prediction_error,
)
from .optim import (
    ALGORITHMS,
    DivergenceError,
    IterateLog,
    MuonState,
    OptConfig,
    load_checkpoint,
    lsrtr_m_step,
    lsrtr_step,
    newton_schulz_orth,
    run,
    save_checkpoint,
)
from .synth import SynthSpec, generate
from .tensor_ops import fold, inner, kron, mode_product, multi_mode_product, unfold, vec

__version__ = "0.1.0"
