"""Feature-selecting compiler-flag autotuning toolkit.

Pipeline: standardize static program features, select the M most influential
ones by regressing optimal execution times (L1 path / forward greedy /
backward greedy), pick or accept K exhaustively tuned training programs, and
assign every untrained program the best configuration of its nearest training
neighbor in the selected-feature subspace. Evaluation scores plans with the
time-reduction metric TR = Nexec * (T_null - T_auto) - T_exhaustive_K.
"""

__version__ = "0.1.0"

from .dataset import (
    ConfigEntry,
    ConfigurationCatalog,
    DatasetBundle,
    DatasetError,
    FeatureManifest,
    FeatureMatrix,
    ManifestEntry,
    NULL_CONFIG_ID,
    StandardizedMatrix,
    TimingRecord,
    TimingTable,
    default_manifest,
    load_bundle,
    standardize,
)
from .regression import (
    ConvergenceError,
    DegeneratePathError,
    LambdaPath,
    OlsSubsetCv,
    RegressionFit,
    cv_score,
    kkt_violation,
    lambda_max,
    lambda_path,
    lasso_fit,
    lasso_path_fits,
    ols_fit,
)
from .selection import (
    RankedFeature,
    SelectionError,
    SelectionResult,
    all_features_result,
    select,
    select_lasso,
    select_sbs,
    select_sfs,
)
from .clustering import Clustering, ClusteringError, kmeans, select_medoids
from .assignment import (
    Assignment,
    AssignmentError,
    AssignmentPlan,
    OptimalRecord,
    nearest_training,
    optimal_config,
    plan_from_json,
    plan_to_json,
    run_active,
    run_passive,
)
from .evaluation import (
    EvaluationError,
    EvaluationReport,
    SweepPoint,
    TRGrid,
    evaluate_plan,
    sweep_K,
    time_reduction,
    tr_grid,
)
from .measure import (
    CompileError,
    CorpusProgram,
    ExecutionError,
    MeasureError,
    MeasureFailure,
    MeasurePlan,
    MeasureTimeout,
    RunResult,
    Runner,
    SubprocessRunner,
    build_timing_table,
    compile_program,
    load_measure_plan,
    time_execution,
)
from .synthetic import SyntheticBundle, SyntheticSpec, make_bundle
from .seeding import derive_rng, derive_seed
