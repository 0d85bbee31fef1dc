"""Variational preparation of spin-chain Gibbs states with engineered
nonunitary channels, plus the symmetry, entropy-estimation and jump-operator
verification toolkits that support it."""

__version__ = "0.1.0"

from . import channels, entropy, harness, models, qcore, qoft, symmetry, vqt

__all__ = ["channels", "entropy", "harness", "models", "qcore", "qoft",
           "symmetry", "vqt", "__version__"]
