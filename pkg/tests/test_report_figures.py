import numpy as np

from driftcast.evaluate import compare_strategies
from driftcast.learners import LearnerSpec
from driftcast.report import render_report_figures
from driftcast.strategies import StrategyConfig
from driftcast.stream import DemandStream


def test_render_report_figures(tmp_path):
    rng = np.random.default_rng(0)
    demand = rng.poisson(40.0, size=(20000, 2))
    stream = DemandStream(0, (1, 2), demand)
    report = compare_strategies(
        stream, LearnerSpec(kind="naive"),
        [StrategyConfig(kind="static", lambda_years=1),
         StrategyConfig(kind="periodic_update", period="quarterly", lambda_years=1)])
    paths = render_report_figures(report, tmp_path)
    assert [p.name for p in paths] == ["quarterly_rmse.png", "quarterly_smape.png",
                                       "yearly_smape.png"]
    for path in paths:
        assert path.stat().st_size > 5000  # a real rendered figure, not a stub
