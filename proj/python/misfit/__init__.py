"""Regression hypothesis classes (GLc / GL / FL, optionally Bayesian) on
synthetic tasks with known ground truth, plus the uncertainty measures
computed from them."""

from ._core import (
    Model,
    gen_dataset,
    ground_truth_log_pdf,
    ground_truth_mean,
    ground_truth_cov,
    mixture_variance,
    nll_glc_1d,
    nll_gl_1d,
    nll_glc_2d,
    nll_gl_2d,
    kl_meanfield_to_prior,
    gaussian_entropy,
    spline_forward,
    spline_inverse,
    train,
    load_model,
    default_config,
    uncertainty_curve,
    reproduce_table,
)

__all__ = [
    "Model",
    "gen_dataset",
    "ground_truth_log_pdf",
    "ground_truth_mean",
    "ground_truth_cov",
    "mixture_variance",
    "nll_glc_1d",
    "nll_gl_1d",
    "nll_glc_2d",
    "nll_gl_2d",
    "kl_meanfield_to_prior",
    "gaussian_entropy",
    "spline_forward",
    "spline_inverse",
    "train",
    "load_model",
    "default_config",
    "uncertainty_curve",
    "reproduce_table",
]
