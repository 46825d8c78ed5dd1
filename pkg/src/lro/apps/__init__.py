"""The newsvendor and portfolio applications."""
from .newsvendor import (
    DemandModel,
    NewsvendorInstance,
    compare_methods,
    evaluate_decision,
    evaluate_lro_measure,
    newsvendor_band,
    newsvendor_empirical,
    newsvendor_lro,
    newsvendor_scarf,
)
from .portfolio import BacktestReport, BallSupport, BoxSupport, PortfolioInstance, backtest, portfolio_lro, synthetic_returns
