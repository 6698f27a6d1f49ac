import cmath
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qvertex.scalars import (
    ONE,
    ZERO,
    Scalar,
    SingularDenominatorError,
    X_coeff,
    det,
    eta,
    expand_poch_ratio,
    gamma_coeff,
    minus_one_pow,
    pfaffian,
    poch,
    q,
    q_int,
    qpow,
    verify_X_identity,
    zeta,
)

from conftest import from_q_coeffs, nonzero_scalars, scalars


# -- field axioms ---------------------------------------------------------------


@given(scalars(), scalars(), scalars())
def test_ring_laws(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    assert a - a == ZERO


@given(nonzero_scalars(), scalars())
def test_division_inverts_multiplication(a, b):
    assert (b * a) / a == b
    assert a * a.inverse() == ONE


@given(scalars(), st.sampled_from([0.37, 0.6, 1.3, 2.5]))
def test_evaluate_is_a_ring_map(a, x):
    b = a * a + qpow(Fraction(1, 2))
    assert b.evaluate(x) == pytest.approx(a.evaluate(x) ** 2 + x**0.5, rel=1e-11, abs=1e-11)


def test_zero_division_raises():
    with pytest.raises(ZeroDivisionError):
        ONE / ZERO


def test_zeta_is_primitive_eighth_root():
    assert zeta**8 == ONE
    assert zeta**4 == -ONE
    assert zeta.evaluate(0.5) == pytest.approx(cmath.exp(1j * cmath.pi / 4))


def test_half_integer_powers():
    s = qpow(Fraction(1, 2))
    assert s * s == q
    assert qpow(Fraction(-3, 2)) * qpow(Fraction(3, 2)) == ONE
    with pytest.raises(ValueError):
        qpow(Fraction(1, 3))


def test_serialize_roundtrip_shape():
    num, den = q_int(3).serialize()
    assert num == "1 + q^2 + q^4"
    assert den == "q^2"


# -- special values ------------------------------------------------------------


def test_q_integers():
    assert q_int(0) == ZERO
    assert q_int(1) == ONE
    assert q_int(2) == q + q.inverse()
    assert q_int(3) == qpow(2) + ONE + qpow(-2)
    assert q_int(-2) == -q_int(2)


def test_eta_values():
    assert eta(0) == Scalar.coerce(2)
    assert eta(Fraction(1, 2)) == q + qpow(-1)
    assert eta(1) == qpow(2) + qpow(-2)


@given(st.integers(-8, 8).map(lambda k: Fraction(k, 4)), st.integers(-8, 8).map(lambda k: Fraction(k, 4)))
def test_minus_one_pow_is_a_homomorphism(r1, r2):
    assert minus_one_pow(r1) * minus_one_pow(r2) == minus_one_pow(r1 + r2)


def test_minus_one_pow_branch():
    assert minus_one_pow(1) == -ONE
    assert minus_one_pow(Fraction(1, 2)) ** 2 == -ONE
    assert minus_one_pow(Fraction(1, 2)) == zeta**2
    assert minus_one_pow(4) == ONE
    with pytest.raises(ValueError):
        minus_one_pow(Fraction(1, 8))


def test_X_coeff_singular():
    with pytest.raises(SingularDenominatorError):
        X_coeff(1, -1)
    assert X_coeff(1, 0) == -ONE


# -- q-series ---------------------------------------------------------------------

# Coefficients of (a u; q^4)_inf / (b u; q^4)_inf from the q-binomial theorem
# (a/b; q^4)_n b^n / (q^4; q^4)_n, simplified independently and frozen.
POCH_RATIO_ORACLE = {
    ("q5", "q7"): [
        ((1,), (1,)),
        ((0, 0, 0, 0, 0, -1), (1, 0, 1)),
        ((0,) * 12 + (-1,), (1, 0, 2, 0, 2, 0, 2, 0, 1)),
        ((0,) * 19 + (-1,), (1, 0, 2, 0, 2, 0, 3, 0, 3, 0, 2, 0, 2, 0, 1)),
    ],
    ("q2", "1"): [
        ((1,), (1,)),
        ((1,), (1, 0, 1)),
        ((1, 0, 1, 0, 1), (1, 0, 2, 0, 2, 0, 2, 0, 1)),
        ((1, 0, 1, 0, 1, 0, 1, 0, 1), (1, 0, 2, 0, 2, 0, 3, 0, 3, 0, 2, 0, 2, 0, 1)),
    ],
}


def test_poch_ratio_matches_q_binomial_oracle():
    got = expand_poch_ratio(qpow(5), qpow(7), 3)
    for n, (num, den) in enumerate(POCH_RATIO_ORACLE[("q5", "q7")]):
        assert got[n] == from_q_coeffs(num, den)
    got = expand_poch_ratio(qpow(2), ONE, 3)
    for n, (num, den) in enumerate(POCH_RATIO_ORACLE[("q2", "1")]):
        assert got[n] == from_q_coeffs(num, den)


def test_poch_ratio_terminates_when_ratio_is_a_negative_base_power():
    # (q^-1 u; q^4)_inf / (q^3 u; q^4)_inf = 1 - q^-1 u
    got = expand_poch_ratio(qpow(-1), qpow(3), 6)
    assert got[0] == ONE
    assert got[1] == -qpow(-1)
    assert all(c == ZERO for c in got.coeffs[2:])


@given(st.integers(0, 6))
def test_gamma_coeff_is_euler_route(n):
    assert expand_poch_ratio(qpow(2), ONE, n)[n] == gamma_coeff(n)


@given(st.integers(-4, 4), st.integers(-4, 4), st.integers(-4, 4))
def test_poch_ratio_is_multiplicative(a, b, c):
    # (a;p)/(b;p) * (b;p)/(c;p) = (a;p)/(c;p)
    N = 4
    lhs = expand_poch_ratio(qpow(a), qpow(b), N) * expand_poch_ratio(qpow(b), qpow(c), N)
    rhs = expand_poch_ratio(qpow(a), qpow(c), N)
    assert lhs.coeffs == rhs.coeffs


def test_poch_finite():
    assert poch(q, qpow(2), 0) == ONE
    assert poch(q, qpow(2), 2) == (ONE - q) * (ONE - qpow(3))


def test_X_identity_small():
    assert verify_X_identity(0, 1)
    assert verify_X_identity(2, 3)
    ok, info = verify_X_identity(1, 2, details=True)
    assert ok and all(info["tails"])


def test_X_identity_rejects_bad_indices():
    with pytest.raises(ValueError):
        verify_X_identity(0, 0)


# -- determinants and Pfaffians ---------------------------------------------------


@st.composite
def antisymmetric(draw):
    n = 2 * draw(st.integers(1, 3))
    B = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            x = draw(scalars(max_terms=2, max_exp=3, with_zeta=False))
            B[i][j] = x
            B[j][i] = -x
    return B


@given(antisymmetric())
def test_pfaffian_squares_to_determinant(B):
    assert pfaffian(B) ** 2 == det(B)


def test_pfaffian_four_by_four_expansion():
    a, b, c, d, e, f = (qpow(k) + k for k in range(1, 7))
    B = [
        [ZERO, a, b, c],
        [-a, ZERO, d, e],
        [-b, -d, ZERO, f],
        [-c, -e, -f, ZERO],
    ]
    assert pfaffian(B) == a * f - b * e + c * d


def test_det_of_triangular():
    M = [[q, ONE, qpow(3)], [ZERO, qpow(2), q], [ZERO, ZERO, qpow(-1)]]
    assert det(M) == qpow(2)
