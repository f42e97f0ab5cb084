"""Intensity model selection for spatial point patterns."""

from ._core import (
    Covariates,
    PpselError,
    fit,
    k_theoretical,
    run_config,
    select,
    simulate,
)

__all__ = [
    "Covariates",
    "PpselError",
    "fit",
    "k_theoretical",
    "run_config",
    "select",
    "simulate",
]
