"""Experiment drivers: strategy training, time-series evaluation and downstream detection."""

from .classifiers import (
    GaussianNB,
    LinearSVM,
    gnb_fit,
    gnb_predict,
    knn_predict,
    knn_predict_many,
    linear_svm_fit,
    linear_svm_predict,
)
from .downstream import (
    ClassifierKind,
    ClassifierSpec,
    DownstreamResult,
    GroundTruthStrategy,
    InvertedStrategy,
    VectorSet,
    downstream_experiment,
    downstream_grid,
    fit_classifier,
)
from .evaluation import (
    EVAL_HEADER,
    BestThreshold,
    BruteForceThreshold,
    EvalRow,
    apply_strategy,
    present_truth,
    read_eval_csv,
    timeseries_eval,
    write_eval_csv,
)
from .training import FeatureSet, ForestStrategy, train_strategy, training_rows
