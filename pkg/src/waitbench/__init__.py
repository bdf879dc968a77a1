"""waitbench: forecasting benchmark for sparse bursty binary event series.

Per-second binary series are binned into counts, clustered to pick the
most dissimilar children as forecast targets, smoothed, and forecast with
four model families built from first principles (elastic net, random
forest, second-order boosted trees, LSTM). A three-metric harness compares
them per (age, category) stratum.
"""

from .accel import BACKEND
from .data import (
    AGES,
    CATEGORIES,
    TASK_SECONDS,
    BinnedSeries,
    Dataset,
    SupervisedFrame,
    UtteranceSeries,
    bin_series,
    build_supervised,
    chronological_split,
    load_dataset,
    normalize,
    write_dataset,
)
from .cluster import (
    ClusterAssignment,
    Dendrogram,
    DistanceMatrix,
    distance_matrix,
    select_k_ch,
    similarity_heatmap,
    split_predictor_response,
    ward_agglomerate,
)
from .linear import EnetConfig, EnetModel, enet_fit, enet_predict, ols_smooth, soft_threshold, var_smooth
from .lstm import LstmConfig, gradient_check, lstm_cell_forward, lstm_forward, lstm_predict, lstm_train
from .metrics import EvalReport, MetricTriple, evaluate_all, mae, mbe, rmse
from .pipeline import RunConfig, render_report, run_pipeline
from .synth import BurstProfile, CohortConfig, generate_child, generate_cohort
from .trees import (
    BoostConfig,
    ForestConfig,
    leaf_weight,
    rf_fit,
    rf_predict,
    split_gain,
    xgb_fit,
    xgb_predict,
)

__version__ = "0.1.0"
