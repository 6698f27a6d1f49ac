import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qvertex.scalars import ONE, ZERO, Scalar, q, qpow
from qvertex.series import (
    FormalSeries,
    Geometric,
    PoleExpansion,
    ResidueLatticeError,
    WindowError,
    exponent,
    expand_rational_factor,
    geometric_coefficient,
    residue_w,
    series_mul,
    solve_indices,
)


def poly(vars, terms):
    return FormalSeries(vars, {k: Scalar.coerce(v) if not isinstance(v, Scalar) else v for k, v in terms.items()})


def test_exponent_lattice():
    assert exponent("3/4") == Fraction(3, 4)
    with pytest.raises(ValueError):
        exponent(Fraction(1, 3))


def test_zero_terms_are_dropped():
    f = poly(("z",), {(1,): 0, (2,): 3})
    assert list(f.terms) == [(Fraction(2),)]


def test_precision_window_hides_high_terms():
    f = FormalSeries(("z",), {(0,): ONE, (5,): ONE}, lo=(0,), hi=(3,))
    assert len(f) == 1
    with pytest.raises(WindowError):
        f.coeff((4,))


def test_terms_below_support_bound_rejected():
    with pytest.raises(WindowError):
        FormalSeries(("z",), {(-1,): ONE}, lo=(0,))


def test_truncated_product_window():
    # (1 + z + z^2 + ...)(1 - z) = 1, known to the smaller precision
    geo = FormalSeries(("z",), {(k,): ONE for k in range(6)}, lo=(0,), hi=(5,))
    lin = FormalSeries(("z",), {(0,): ONE, (1,): -ONE}, lo=(0,))
    prod = series_mul(geo, lin)
    assert prod.hi == (Fraction(5),)
    assert prod.terms == {(Fraction(0),): ONE}


def test_unbounded_factor_needs_exact_partner():
    a = FormalSeries(("z",), {(0,): ONE}, hi=(2,))
    b = FormalSeries(("z",), {(0,): ONE}, lo=(0,), hi=(2,))
    with pytest.raises(WindowError):
        series_mul(a, b)


@given(
    st.dictionaries(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.integers(-4, 4), max_size=5),
    st.dictionaries(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), st.integers(-4, 4), max_size=5),
)
def test_polynomial_product_matches_brute_force(a, b):
    f = poly(("z", "w"), a)
    g = poly(("z", "w"), b)
    want = {}
    for (e1, c1), (e2, c2) in itertools.product(a.items(), b.items()):
        key = (e1[0] + e2[0], e1[1] + e2[1])
        want[key] = want.get(key, 0) + c1 * c2
    got = f * g
    assert got == poly(("z", "w"), want)


def test_vector_coefficients():
    v = FormalSeries(("z",), {(1,): {"a": ONE, "b": q}})
    s = FormalSeries(("z",), {(0,): qpow(2), (2,): ONE})
    out = series_mul(s, v)
    assert out.coeff((1,)) == {"a": qpow(2), "b": qpow(3)}
    assert out.coeff((3,)) == {"a": ONE, "b": q}
    with pytest.raises(WindowError):
        series_mul(v, v)


def test_residue_picks_minus_one():
    f = poly(("w", "z"), {(-1, 2): 5, (0, 1): 1, (-1, 0): 2})
    r = residue_w(f, "w")
    assert r.vars == ("z",)
    assert r.terms == {(Fraction(2),): Scalar.coerce(5), (Fraction(0),): Scalar.coerce(2)}


def test_residue_lattice_mismatch():
    f = FormalSeries(("w",), {(Fraction(-1, 2),): ONE})
    with pytest.raises(ResidueLatticeError):
        residue_w(f, "w")


def test_pole_expansion_directions():
    # 1/(1 - q z/w) inside: sum (q z/w)^j ; outside: 1/(1 - w/(q z)) = sum (w/(q z))^j
    inside = expand_rational_factor(PoleExpansion(q, "w", "z", True), 3)
    assert inside.coeff((-2, 2)) == qpow(2)
    outside = expand_rational_factor(PoleExpansion(q, "w", "z", False), 3)
    assert outside.coeff((3, -3)) == qpow(-3)


def test_contour_integral_of_simple_pole():
    # Res_w of (1/w) * 1/(1 - c z / w) = 1 for any c (pole inside)
    c = qpow(3)
    geo = expand_rational_factor(PoleExpansion(c, "w", "z", True), 4)
    f = series_mul(FormalSeries.monomial(("w", "z"), (-1, 0)), geo)
    assert residue_w(f, "w").terms == {(Fraction(0),): ONE}


# -- exact geometric coefficients -------------------------------------------------


def brute_geometric(factors, target, free, J=8):
    out = {}
    for js in itertools.product(range(J), repeat=len(factors)):
        exps = {}
        c = ONE
        for g, j in zip(factors, js):
            c = c * g.c**j
            for v, e in g.exps.items():
                exps[v] = exps.get(v, 0) + Fraction(e) * j
        if all(exps.get(v, 0) == Fraction(t) for v, t in target.items()):
            key = tuple(exps.get(v, Fraction(0)) for v in free)
            out[key] = out.get(key, ZERO) + c
    return {k: v for k, v in out.items() if v}


@given(st.integers(-3, 3), st.integers(0, 4))
def test_geometric_coefficient_matches_brute_force(tw, tz):
    factors = [
        Geometric(q, {"z": 1, "w": -1}),
        Geometric(qpow(2), {"w": 1}),
        Geometric(qpow(-1), {"z": 1}),
    ]
    target = {"w": tw, "z": tz}
    assert geometric_coefficient(factors, target) == brute_geometric(factors, target, ())


def test_geometric_coefficient_with_free_variable():
    factors = [Geometric(q, {"z": 1, "w": -1}), Geometric(qpow(2), {"w": 1, "x": 1})]
    target = {"w": 0, "z": 3}
    got = geometric_coefficient(factors, target, free=("x",))
    assert got == brute_geometric(factors, target, ("x",), J=6)
    assert got == {(Fraction(3),): qpow(9)}


def test_solve_indices_unbounded():
    with pytest.raises(ValueError):
        solve_indices([[1, -1]], [0])


def test_solve_indices_enumerates():
    sols = solve_indices([[1, 2]], [4])
    assert sorted(sols) == [(0, 2), (2, 1), (4, 0)]
