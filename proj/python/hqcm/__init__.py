"""Hybrid quantum-classical image classifier: python surface.

The heavy lifting lives in the compiled ``_hqcm`` extension; this package
re-exports the main operations.
"""

from ._hqcm import (  # noqa: F401
    Model,
    amplitude_embed,
    bce_attention,
    classification_report_json,
    cross_entropy,
    dice_loss,
    generate_synthetic,
    grad_circuit,
    jaccard_at,
    parameter_shift_grad,
    run_circuit,
    wilcoxon_signed_rank,
)

__all__ = [
    "Model",
    "amplitude_embed",
    "bce_attention",
    "classification_report_json",
    "cross_entropy",
    "dice_loss",
    "generate_synthetic",
    "grad_circuit",
    "jaccard_at",
    "parameter_shift_grad",
    "run_circuit",
    "wilcoxon_signed_rank",
]
