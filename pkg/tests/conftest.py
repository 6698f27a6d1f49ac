from fractions import Fraction

from hypothesis import settings, strategies as st

from qvertex.scalars import ONE, ZERO, Scalar, qpow, zeta

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


def from_q_coeffs(num, den=(1,)):
    """Scalar from integer coefficient lists in ``q`` (index = power)."""
    def poly(cs):
        acc = ZERO
        for k, c in enumerate(cs):
            if c:
                acc = acc + qpow(k) * c
        return acc
    return poly(num) / poly(den)


@st.composite
def scalars(draw, max_terms=3, max_exp=6, with_zeta=True):
    """Small Laurent polynomials in ``q^(1/2)`` with optional powers of ``zeta``."""
    acc = ZERO
    for _ in range(draw(st.integers(1, max_terms))):
        c = draw(st.fractions(min_value=-3, max_value=3, max_denominator=4))
        e = Fraction(draw(st.integers(-2 * max_exp, 2 * max_exp)), 2)
        z = draw(st.integers(0, 7)) if with_zeta else 0
        acc = acc + qpow(e) * (zeta**z) * Scalar.coerce(c)
    return acc


@st.composite
def nonzero_scalars(draw, **kw):
    x = draw(scalars(**kw))
    return x if x else ONE


# -- acceptance summary -------------------------------------------------------------

ACCEPTANCE_LINES = {}


def record_acceptance(number, ok, detail, variant=""):
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[(number, variant)] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
