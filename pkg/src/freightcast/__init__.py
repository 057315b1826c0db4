"""Counterfactual freight baselines from seasonal ARIMA models."""

__version__ = "0.1.0"
