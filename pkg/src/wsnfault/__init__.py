"""PCA-compressed, swarm-trained neural fault detection for sensor data."""

from .dataset import (
    FaultKind,
    FaultSpec,
    LabeledDataset,
    MinMaxScaler,
    carve_validation,
    inject_fault,
    load_dataset,
    min_max_normalize,
    save_dataset,
    stratified_kfold,
    stratified_split,
    synthesize_dataset,
    synthesize_wsn_dataset,
)
from .metrics import (
    ConfusionCounts,
    MetricSet,
    RocCurve,
    classification_metrics,
    confusion,
    paired_t_test,
    roc_auc,
    summary_stats,
)
from .network import (
    ClassProbabilities,
    NetworkSpec,
    ParameterVector,
    flatten,
    forward,
    param_count,
    predict,
    sigmoid,
    softmax,
    unflatten,
)
from .pca import (
    PcaModel,
    covariance,
    cumulative_variance,
    fit_pca,
    select_components,
    standardize,
    sym_eigen,
    transform,
)
from .pipeline import PipelineConfig, run_compare, run_crossval, run_pipeline
from .swarm import (
    GoaConfig,
    Objective,
    OptimizerRun,
    PsoConfig,
    SwarmState,
    comfort_coefficient,
    goa_optimize,
    goa_step,
    pso_optimize,
    social_force,
)
from .trainer import (
    OptimizerKind,
    TrainedModel,
    TrainingTask,
    default_bounds,
    fitness,
    train,
)

__version__ = "0.1.0"
