"""Python access to the rflab core."""

from ._rflab import (
    __version__,
    construct_and_verify,
    correlation_decay,
    gauss_hermite_rule,
    gauss_legendre_rule,
    legendre_eval,
    legendre_norm_sq,
    linear_residual,
    params,
    psi,
    psi_gaussian_norm,
    psi_properties,
    relu_exp_identity,
    run_cli,
    train_single_neuron,
)

__all__ = [
    "__version__",
    "construct_and_verify",
    "correlation_decay",
    "gauss_hermite_rule",
    "gauss_legendre_rule",
    "legendre_eval",
    "legendre_norm_sq",
    "linear_residual",
    "params",
    "psi",
    "psi_gaussian_norm",
    "psi_properties",
    "relu_exp_identity",
    "run_cli",
    "train_single_neuron",
]
