"""Multiple imputation by chained equations with PCR, SPCR, PCovR and PLS imputers."""

from .data import DataMatrix
from .dimred import (ComponentModel, StandardizationStats, alpha_ml, cv_select_threshold,
                     fit_pca, fit_pcovr, fit_pcr, fit_pls, screen_predictors, standardize)
from .imputers import ImputationDraw, ImputerSpec
from .mice import ChainState, ImputedSet, MiceConfig, run_chain, run_mice

__all__ = [
    "DataMatrix", "ComponentModel", "StandardizationStats", "alpha_ml",
    "cv_select_threshold", "fit_pca", "fit_pcovr", "fit_pcr", "fit_pls",
    "screen_predictors", "standardize", "ImputationDraw", "ImputerSpec",
    "ChainState", "ImputedSet", "MiceConfig", "run_chain", "run_mice",
]
__version__ = "0.1.0"
