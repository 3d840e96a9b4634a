"""Python bindings for the sgdct library."""

from ._sgdct import (
    __version__,
    binomial_american,
    black_scholes_european,
    learning_rate,
    ou1d_drift,
    ou1d_gbar,
    ou1d_grad_gbar,
    quantile,
    run_config,
)

__all__ = [
    "__version__",
    "binomial_american",
    "black_scholes_european",
    "learning_rate",
    "ou1d_drift",
    "ou1d_gbar",
    "ou1d_grad_gbar",
    "quantile",
    "run_config",
]
