from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qvertex.currents import (
    B_I,
    B_II,
    EXCHANGE_RELATIONS,
    E_factor,
    F_II,
    K_op,
    a_mode,
    apply_exponential,
    chevalley,
    current_x,
    normal_order_pair,
    phi_mode,
    psi_mode,
    verify_drinfeld,
    verify_exchange_relations,
    x_mode,
)
from qvertex.fock import MODULES, hw_state, module_basis
from qvertex.scalars import ONE, ZERO, q, q_int, qpow

TAGS = tuple(MODULES)
VAC = {hw_state("2L0"): ONE}


def vsub(a, b):
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, ZERO) - c
    return {k: c for k, c in out.items() if c}


def vscale(c, v):
    return {k: c * x for k, x in v.items() if c * x}


# -- exponential factors --------------------------------------------------------


def test_annihilation_factor_fixes_vacuum():
    assert apply_exponential(E_factor(-1, ">"), VAC, 1).terms == {(Fraction(0),): VAC}


def test_creation_factor_first_order():
    s = apply_exponential(E_factor(1, "<"), VAC, 1)
    a1 = ((1,), (), 0)
    assert s.coeff((1,)) == {a1: qpow(-1) / q_int(2)}
    s = apply_exponential(B_I("<"), VAC, 1)
    assert s.coeff((1,)) == {a1: qpow(5) * q_int(1) / q_int(2) ** 2}


def test_creation_factor_respects_level():
    s = apply_exponential(E_factor(1, "<"), VAC, 2)
    assert max(e[0] for e in s.terms) == 2


# -- exchange functions ----------------------------------------------------------


def test_all_exchange_relations():
    ok, results = verify_exchange_relations(8, details=True)
    assert len(results) == 14
    assert ok, [r for r in results if not r[1]]


def test_terminating_exchange_function():
    f = normal_order_pair(F_II(">"), E_factor(-1, "<"), 8)
    assert f[1] == -qpow(-2)
    assert all(c == ZERO for c in f.coeffs[2:])


def test_normal_order_pair_rejects_wrong_sides():
    with pytest.raises(ValueError):
        normal_order_pair(E_factor(1, "<"), E_factor(1, ">"), 2)


@pytest.mark.parametrize("idx", range(len(EXCHANGE_RELATIONS)))
def test_exchange_function_from_operator_action(idx):
    # <vac| left(x) right(y) |vac>: apply right, then left, read off the vacuum
    # coefficient; the x,y dependence is through y/x only.
    f = EXCHANGE_RELATIONS[idx]
    N = 4
    right = apply_exponential(f.right, VAC, N, var="y")
    want = f.closed_form(N)
    vac = hw_state("2L0")
    for (n,), vec in right.terms.items():
        left = apply_exponential(f.left, vec, N, var="x")
        got = left.coeff((-n,), default={}).get(vac, ZERO)
        assert got == want[int(n)]


# -- psi and phi currents -------------------------------------------------------


@pytest.mark.parametrize("tag", TAGS)
def test_psi_phi_leading_modes(tag):
    for st_ in module_basis(tag, 2):
        v = {st_: ONE}
        assert psi_mode(0, v) == K_op(v)
        assert phi_mode(0, v) == K_op(v, -1)
        assert psi_mode(1, v) == vscale(q - qpow(-1), K_op(a_mode(1, v)))
        assert psi_mode(-1, v) == {} and phi_mode(1, v) == {}


# -- x currents -----------------------------------------------------------------


@given(st.sampled_from(TAGS), st.sampled_from([1, -1]), st.integers(-2, 2), st.data())
def test_x_modes_shift_charge_and_K_weight(tag, sign, k, data):
    st_ = data.draw(st.sampled_from(module_basis(tag, 2)))
    out = x_mode(sign, k, {st_: ONE})
    for s2 in out:
        assert s2[2] == st_[2] + 2 * sign
    lhs = K_op(x_mode(sign, k, K_op({st_: ONE}, -1)))
    assert lhs == vscale(qpow(2 * sign), out)


def test_x_plus_raises_from_highest_weight_of_2L1_only_to_zero():
    # hw of V(2L1) is killed by x^+_0 (highest weight condition)
    assert x_mode(1, 0, {hw_state("2L1"): ONE}) == {}


def test_current_series_matches_modes():
    v = {hw_state("L0L1"): ONE}
    s = current_x(-1, v, 2)
    for k in range(-2, 3):
        assert s.coeff((-k,), default={}) == x_mode(-1, k, v)


@pytest.mark.parametrize("tag", TAGS)
def test_x_commutator_zero_modes(tag):
    for st_ in module_basis(tag, 1):
        v = {st_: ONE}
        lhs = vsub(x_mode(1, 0, x_mode(-1, 0, v)), x_mode(-1, 0, x_mode(1, 0, v)))
        rhs = vscale(ONE / (q - qpow(-1)), vsub(K_op(v), K_op(v, -1)))
        assert lhs == rhs


@pytest.mark.parametrize("tag", TAGS)
def test_chevalley_sl2_relation(tag):
    for st_ in module_basis(tag, 1):
        v = {st_: ONE}
        lhs = vsub(chevalley("e0", chevalley("f0", v)), chevalley("f0", chevalley("e0", v)))
        t0 = chevalley("t0", v)
        t0inv = {s: c * qpow(st_[2] - 2) for s, c in v.items()}
        assert lhs == vscale(ONE / (q - qpow(-1)), vsub(t0, t0inv))


@pytest.mark.parametrize("tag", TAGS)
def test_drinfeld_small_window(tag):
    ok, fails = verify_drinfeld(tag, L=2, M=1, details=True)
    assert ok, fails[:5]
