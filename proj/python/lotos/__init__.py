"""Layer-wise orthogonalization toolkit for robust ensembles.

The compiled core lives in ``lotos._lotos``; everything public is re-exported
here.
"""

from ._lotos import (  # noqa: F401
    Ensemble,
    Model,
    __version__,
    autocorrelation_coeffs,
    circulant_spectrum,
    clip_model,
    corollary_gap_bound,
    generate_dataset,
    lemma_gap_bound,
    pgd_attack,
    spectral_norm,
    svd,
    theorem_cross_bound,
    train_ensemble,
    transfer_rate,
    verify_circulant_bounds,
)

__all__ = [
    "Ensemble",
    "Model",
    "autocorrelation_coeffs",
    "circulant_spectrum",
    "clip_model",
    "corollary_gap_bound",
    "generate_dataset",
    "lemma_gap_bound",
    "pgd_attack",
    "spectral_norm",
    "svd",
    "theorem_cross_bound",
    "train_ensemble",
    "transfer_rate",
    "verify_circulant_bounds",
]
