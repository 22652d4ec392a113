"""Approximate leave-one-out risk for penalized regression."""

from ._alo import AloError, alo_risk, fit_path, generate, log_grid, loocv_risk

__all__ = ["AloError", "alo_risk", "fit_path", "generate", "log_grid", "loocv_risk"]
