"""Seasonal ARIMA with covariates: state-space likelihood, fitting, forecasting."""
from .model import (ConvergenceWarning, FitOptions, FittedModel, Forecast,
                    ModelOrder, ParamVector, ResidualDiagnostics, fit, forecast,
                    kalman_loglik, model_from_params, predict_in_sample, residual_diagnostics,
                    simulate, with_params)

__all__ = [
    "ConvergenceWarning", "FitOptions", "FittedModel", "Forecast", "ModelOrder",
    "ParamVector", "ResidualDiagnostics", "fit", "forecast", "kalman_loglik", "model_from_params",
    "predict_in_sample", "residual_diagnostics", "simulate", "with_params",
]
