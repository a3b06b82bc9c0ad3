"""ermlab: an empirical-risk-minimization toolkit built from first principles.

Losses and hypothesis spaces, gradient descent with provable step sizes,
closed-form regression, Bayes classifiers, clustering, PCA, and a
Monte-Carlo laboratory for the bias-variance behaviour of linear
regression on a linear-Gaussian toy model.
"""

__version__ = "0.1.0"

from ._accel import BACKEND as ACCEL_BACKEND
from .data import (
    LabeledDataset,
    NormalizationParams,
    SplitPair,
    ToyModelSpec,
    generate_toy,
    load_csv,
    min_max_scale,
    normalize,
    split,
)
from .losses import LossKind, empirical_risk, loss
from .models import (
    AnnSpec,
    DecisionTree,
    FeatureMapSpec,
    KnnModel,
    Leaf,
    LinearModel,
    Split,
    ann_forward,
    apply_feature_map,
    classify,
    knn_predict,
    predict,
    predict_linear,
    tree_predict,
    triangle_ann,
)
from .numerics import SymmetricEvd, condition_number, max_eigenvalue, solve_spd, sym_evd
from .optimize import (
    GdConfig,
    GdTrace,
    auto_step_size,
    gd_step,
    hinge_subgradient,
    linreg_gradient,
    logreg_gradient,
    run_gd,
    sgd_step,
)
from .learners import (
    GaussianClassParams,
    RidgeSpec,
    fit_bayes,
    fit_linreg_closed,
    fit_linreg_minnorm,
    fit_logreg,
    fit_ridge_closed,
    fit_svm,
    gaussian_ml,
    grow_tree,
    predict_proba,
)
from .validate import (
    BiasVarianceResult,
    ModelSelectionReport,
    RidgeBiasVarianceResult,
    bias_variance_experiment,
    diagnose,
    ridge_bias_variance_experiment,
    select_model,
    train_val_errors,
)
from .cluster import (
    GmmParams,
    HardClustering,
    SoftClustering,
    clustering_error,
    elbow_sweep,
    gmm_em,
    gmm_hard_limit_check,
    kmeans,
    kmeans_multi_restart,
)
from .dimred import (
    PcaModel,
    PcaRegressionModel,
    compress,
    fit_pca,
    pca_regression,
    random_projection,
    reconstruct,
    reconstruction_error_direct,
)
