"""Bayesian AMMI models fitted by variational inference, with a Gibbs sampler for reference."""

from ._core import (
    AmmiError,
    Dataset,
    DegenerateInputError,
    DimensionMismatchError,
    DivergenceError,
    FitResult,
    Hyperparams,
    IoError,
    ModelConfig,
    ParamSummary,
    PosteriorDraws,
    ThetaPoint,
    ValidationError,
    VariationalState,
    default_hyperparams,
    elbo,
    fit_mcmc,
    fit_vi,
    frequentist_fit,
    in_sample_rmse,
    init_state,
    load_csv,
    post_process,
    predict,
    simulate,
    vi_summary,
    write_csv,
)

__all__ = [name for name in dir() if not name.startswith("_")]
