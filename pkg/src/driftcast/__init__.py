"""driftcast: streaming demand forecasting with drift-adaptive models.

The package covers the full loop: ingest or synthesize an hourly demand
stream, forecast it one step ahead, watch the forecasts (or the
differenced raw demand) with streaming drift detectors, and adapt the
model periodically, on trigger, or via the update-vs-retrain switching
policy, all under a prequential evaluation harness.
"""

__version__ = "0.1.0"

from .detectors import (Adwin, Hdddm, MannKendallStream, Stepd, binarize,
                        hellinger_distance, make_detector, mk_statistic)
from .evaluate import (EvaluationReport, PredictionLog, RunResult,
                       compare_strategies, diebold_mariano, prequential_run,
                       rmse, rolling_metric, smape)
from .features import (FeatureLayout, Standardizer, build_feature_table,
                       build_features, seasonal_difference)
from .ingest import ColumnMap, IngestError, aggregate_trips
from .learners import (LearnerSpec, MlpConfig, MlpForecaster, MlpRegressor,
                       naive_predict, seasonal_naive_predict)
from .stream import (DemandStream, HourlyObservation, PredictionRecord,
                     read_stream_csv, stream_from_observations,
                     write_stream_csv)
from .strategies import (AdaptationAction, AdaptationPolicy, StrategyConfig,
                         apply_action)
from .synth import SplitMix64, SyntheticSpec, derive_seed, generate_synthetic
from .timegrid import (DEFAULT_EPOCH, SlidingWindow, calendar_decompose,
                       datetime_to_hour, hour_to_datetime, parse_hour,
                       slice_window)
