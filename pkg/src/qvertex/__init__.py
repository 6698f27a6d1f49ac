"""Exact free-field computations for level-two modules of the quantum affine sl2."""

from .scalars import (
    ONE,
    ZERO,
    Scalar,
    X_coeff,
    eta,
    expand_poch_ratio,
    gamma_coeff,
    minus_one_pow,
    pfaffian,
    q,
    q_int,
    qpow,
    verify_X_identity,
    zeta,
)

__version__ = "0.1.0"
