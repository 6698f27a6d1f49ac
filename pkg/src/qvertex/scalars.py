"""Exact coefficient field and q-combinatorics.

Every coefficient in the package lives in ``Q(zeta)(s)`` where ``zeta`` is a
primitive 8th root of unity (``zeta**4 == -1``) and ``s = q**(1/2)``.  Storing
``q`` with half-step granularity lets expressions such as ``q**(3/2)`` or
``(-q**6 z)**(-1/4)`` stay exact.  ``zeta**2`` plays the role of ``(-1)**(1/2)``
and ``zeta`` that of ``(-1)**(1/4)``.

A :class:`Scalar` is kept in canonical form ``N / D`` with ``N`` a polynomial in
``s`` with coefficients in ``Q(zeta)`` (stored as four rational polynomials, one
per power of ``zeta``) and ``D`` a monic rational polynomial in ``s`` coprime to
``N``.  Equality is therefore structural.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from flint import fmpq, fmpq_poly

__all__ = [
    "Scalar",
    "ZERO",
    "ONE",
    "q",
    "qpow",
    "zeta",
    "minus_one_pow",
    "q_int",
    "eta",
    "poch",
    "gamma_coeff",
    "X_coeff",
    "QSeriesExpansion",
    "expand_poch_ratio",
    "pfaffian",
    "det",
    "verify_X_identity",
    "SingularDenominatorError",
]

_ZP = fmpq_poly([])
_ONEP = fmpq_poly([1])


class SingularDenominatorError(ZeroDivisionError):
    """Raised when a formula is evaluated at a point where its denominator vanishes."""


def _galois(num, k):
    # zeta -> zeta**k on the four zeta-components
    out = [_ZP, _ZP, _ZP, _ZP]
    for j, p in enumerate(num):
        if p.is_zero():
            continue
        e = (k * j) % 8
        if e >= 4:
            out[e - 4] = out[e - 4] - p
        else:
            out[e] = out[e] + p
    return tuple(out)


def _nmul(a, b):
    # product in Q[s][zeta]/(zeta^4 + 1)
    if a[1].is_zero() and a[2].is_zero() and a[3].is_zero():
        x = a[0]
        return (x * b[0], x * b[1], x * b[2], x * b[3])
    if b[1].is_zero() and b[2].is_zero() and b[3].is_zero():
        y = b[0]
        return (a[0] * y, a[1] * y, a[2] * y, a[3] * y)
    out = [_ZP, _ZP, _ZP, _ZP]
    for i in range(4):
        if a[i].is_zero():
            continue
        for j in range(4):
            if b[j].is_zero():
                continue
            t = a[i] * b[j]
            k = i + j
            if k >= 4:
                out[k - 4] = out[k - 4] - t
            else:
                out[k] = out[k] + t
    return tuple(out)


class Scalar:
    """Element of ``Q(zeta_8)(q**(1/2))`` in canonical reduced form."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den=_ONEP, _reduced=False):
        if not _reduced:
            num, den = _normalize(tuple(num), den)
        self.num = num
        self.den = den
        self._hash = None

    # -- construction -------------------------------------------------
    @classmethod
    def coerce(cls, x) -> "Scalar":
        if isinstance(x, Scalar):
            return x
        if isinstance(x, (int, Fraction, fmpq)):
            if isinstance(x, Fraction):
                x = fmpq(x.numerator, x.denominator)
            if x == 0:
                return ZERO
            return cls((fmpq_poly([x]), _ZP, _ZP, _ZP), _ONEP, _reduced=True)
        raise TypeError(f"cannot coerce {type(x).__name__} to Scalar")

    # -- predicates ---------------------------------------------------
    def is_zero(self) -> bool:
        n = self.num
        return n[0].is_zero() and n[1].is_zero() and n[2].is_zero() and n[3].is_zero()

    def __bool__(self):
        return not self.is_zero()

    def is_real(self) -> bool:
        """True when no power of zeta occurs."""
        n = self.num
        return n[1].is_zero() and n[2].is_zero() and n[3].is_zero()

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        a, b = self, other
        if a.den == b.den:
            num = tuple(x + y for x, y in zip(a.num, b.num))
            return Scalar(num, a.den)
        g = a.den.gcd(b.den)
        da = a.den // g
        db = b.den // g
        num = tuple(x * db + y * da for x, y in zip(a.num, b.num))
        return Scalar(num, a.den * db)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(tuple(-x for x in self.num), self.den, _reduced=True)

    def __sub__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return Scalar.coerce(other) - self

    def __mul__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return ZERO
        if other.den.is_one() and other.is_real() and other.num[0].is_constant():
            c = other.num[0]
            if c.is_one():
                return self
            return Scalar(tuple(x * c for x in self.num), self.den, _reduced=True)
        return Scalar(_nmul(self.num, other.num), self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "Scalar":
        if self.is_zero():
            raise ZeroDivisionError("Scalar division by zero")
        n = self.num
        if self.is_real():
            return Scalar((self.den, _ZP, _ZP, _ZP), n[0])
        c3 = _galois(n, 3)
        c5 = _galois(n, 5)
        c7 = _galois(n, 7)
        conj = _nmul(_nmul(c3, c5), c7)
        norm = _nmul(n, conj)
        # norm lies in Q[s]
        return Scalar(_nmul(conj, (self.den, _ZP, _ZP, _ZP)), norm[0])

    def __truediv__(self, other):
        try:
            other = Scalar.coerce(other)
        except TypeError:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return Scalar.coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("Scalar powers must be integers")
        if k < 0:
            return self.inverse() ** (-k)
        result = ONE
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # -- comparison ---------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Scalar):
            try:
                other = Scalar.coerce(other)
            except TypeError:
                return NotImplemented
        return self.den == other.den and all(x == y for x, y in zip(self.num, other.num))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(
                (tuple(tuple(p.coeffs()) for p in self.num), tuple(self.den.coeffs()))
            )
        return self._hash

    # -- evaluation and printing ---------------------------------------
    def evaluate(self, qval: float) -> complex:
        """Numerical value at ``q = qval`` (positive real), with zeta = exp(i pi/4)."""
        s = math.sqrt(qval)
        z = cmath.exp(1j * math.pi / 4)
        num = sum(complex(_peval(p, s)) * z**j for j, p in enumerate(self.num))
        return num / _peval(self.den, s)

    def integer_parts(self):
        """Numerator components and denominator as integer-coefficient polynomials.

        Returns ``(num_components, den)`` with a common positive scale so that
        the integer coefficients have gcd one and ``den`` has positive leading
        coefficient.
        """
        lcm = 1
        for p in (*self.num, self.den):
            lcm = lcm * int(p.denom()) // math.gcd(lcm, int(p.denom()))
        nums = [[int(c * lcm) for c in p.coeffs()] for p in self.num]
        den = [int(c * lcm) for c in self.den.coeffs()]
        g = 0
        for cs in (*nums, den):
            for c in cs:
                g = math.gcd(g, c)
        g = g or 1
        nums = [[c // g for c in cs] for cs in nums]
        den = [c // g for c in den]
        return nums, den

    def serialize(self) -> tuple[str, str]:
        """Canonical ``(numerator, denominator)`` strings in ``q`` and ``zeta``."""
        nums, den = self.integer_parts()
        terms = []
        for j, cs in enumerate(nums):
            for k, c in enumerate(cs):
                if c:
                    terms.append((k, j, c))
        terms.sort()
        num_s = _format_terms(terms)
        den_s = _format_terms([(k, 0, c) for k, c in enumerate(den) if c])
        return num_s, den_s

    def __repr__(self):
        n, d = self.serialize()
        if d == "1":
            return f"Scalar({n})"
        return f"Scalar(({n})/({d}))"

    __str__ = __repr__


def _format_terms(terms):
    if not terms:
        return "0"
    out = []
    for k, j, c in terms:
        mono = []
        if k:
            mono.append("q" if k == 2 else (f"q^{k // 2}" if k % 2 == 0 else f"q^({k}/2)"))
        if j:
            mono.append("zeta" if j == 1 else f"zeta^{j}")
        body = "*".join(mono)
        if not body:
            out.append(str(c))
        elif c == 1:
            out.append(body)
        elif c == -1:
            out.append("-" + body)
        else:
            out.append(f"{c}*{body}")
    s = " + ".join(out)
    return s.replace("+ -", "- ")


def _peval(p, x):
    acc = 0.0
    for c in reversed(p.coeffs()):
        acc = acc * x + float(c)
    return acc


def _normalize(num, den):
    if den.is_zero():
        raise ZeroDivisionError("zero denominator")
    if all(p.is_zero() for p in num):
        return (_ZP, _ZP, _ZP, _ZP), _ONEP
    if not den.is_constant():
        g = den
        for p in num:
            if not p.is_zero():
                g = g.gcd(p)
                if g.is_one():
                    break
        if not g.is_one():
            den = den // g
            num = tuple(p // g for p in num)
    lc = den.leading_coefficient()
    if lc != 1:
        inv = 1 / lc
        den = den * inv
        num = tuple(p * inv for p in num)
    return num, den


ZERO = Scalar((_ZP, _ZP, _ZP, _ZP), _ONEP, _reduced=True)
ONE = Scalar((_ONEP, _ZP, _ZP, _ZP), _ONEP, _reduced=True)


@lru_cache(maxsize=None)
def _spow(k: int) -> Scalar:
    if k >= 0:
        return Scalar((fmpq_poly([0] * k + [1]), _ZP, _ZP, _ZP), _ONEP, _reduced=True)
    return Scalar((_ONEP, _ZP, _ZP, _ZP), fmpq_poly([0] * (-k) + [1]), _reduced=True)


def qpow(e) -> Scalar:
    """``q**e`` for integer or half-integer ``e``."""
    e2 = Fraction(e) * 2
    if e2.denominator != 1:
        raise ValueError(f"q exponent {e} is not a half-integer")
    return _spow(int(e2))


q = qpow(1)
zeta = Scalar((_ZP, _ONEP, _ZP, _ZP), _ONEP, _reduced=True)


@lru_cache(maxsize=None)
def _zeta_pow(k: int) -> Scalar:
    k %= 8
    if k >= 4:
        return -_zeta_pow(k - 4)
    comps = [_ZP, _ZP, _ZP, _ZP]
    comps[k] = _ONEP
    return Scalar(tuple(comps), _ONEP, _reduced=True)


def minus_one_pow(r) -> Scalar:
    """``(-1)**r`` for ``r`` in ``Z/4``, fixed as ``zeta**(4r)`` (so ``(-1)**(1/2) = zeta**2``)."""
    r4 = Fraction(r) * 4
    if r4.denominator != 1:
        raise ValueError(f"(-1)**{r} needs a root of unity of order above 8")
    return _zeta_pow(int(r4))


@lru_cache(maxsize=None)
def q_int(n: int) -> Scalar:
    """q-integer ``[n] = (q**n - q**-n) / (q - q**-1)``."""
    if n == 0:
        return ZERO
    return (qpow(n) - qpow(-n)) / (q - qpow(-1))


@lru_cache(maxsize=None)
def eta(m) -> Scalar:
    """``q**(2m) + q**(-2m)``; ``m`` integer or half-integer."""
    m = Fraction(m)
    return qpow(2 * m) + qpow(-2 * m)


def poch(x: Scalar, base: Scalar, n: int) -> Scalar:
    """Finite q-shifted factorial ``(x; base)_n``."""
    acc = ONE
    t = x
    for _ in range(n):
        acc = acc * (ONE - t)
        t = t * base
    return acc


@lru_cache(maxsize=None)
def gamma_coeff(n: int) -> Scalar:
    """``(q**2; q**4)_n / (q**4; q**4)_n``, the coefficients of ``(q**2 u)_inf / (u)_inf``."""
    if n < 0:
        raise ValueError("gamma_coeff needs n >= 0")
    return poch(qpow(2), qpow(4), n) / poch(qpow(4), qpow(4), n)


@lru_cache(maxsize=None)
def X_coeff(k, l) -> Scalar:
    """``(q**(4k) - q**(4l)) / (1 - q**(4(k+l)))`` for integer or half-integer ``k, l``."""
    k = Fraction(k)
    l = Fraction(l)
    if k + l == 0:
        raise SingularDenominatorError(f"X_coeff({k}, {l}) has a vanishing denominator")
    return (qpow(4 * k) - qpow(4 * l)) / (ONE - qpow(4 * (k + l)))


@dataclass(frozen=True)
class QSeriesExpansion:
    """Coefficients ``c_0..c_N`` of a one-variable power series in ``u``."""

    coeffs: tuple
    base: Scalar
    order: int

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def __mul__(self, other: "QSeriesExpansion") -> "QSeriesExpansion":
        n = min(self.order, other.order)
        out = []
        for k in range(n + 1):
            acc = ZERO
            for i in range(k + 1):
                acc = acc + self.coeffs[i] * other.coeffs[k - i]
            out.append(acc)
        return QSeriesExpansion(tuple(out), self.base, n)


def _euler_numerator(a: Scalar, p: Scalar, N: int):
    # (a u; p)_inf = sum_n (-1)^n p^(n(n-1)/2) a^n u^n / (p; p)_n
    out = []
    for n in range(N + 1):
        c = (a**n) * (p ** (n * (n - 1) // 2)) / poch(p, p, n)
        out.append(-c if n % 2 else c)
    return out


def _euler_denominator(b: Scalar, p: Scalar, N: int):
    # 1 / (b u; p)_inf = sum_n b^n u^n / (p; p)_n
    return [(b**n) / poch(p, p, n) for n in range(N + 1)]


def expand_poch_ratio(a, b, N: int, base: Scalar | None = None) -> QSeriesExpansion:
    """Series coefficients of ``(a u; base)_inf / (b u; base)_inf`` up to ``u**N``.

    Each infinite product is expanded with Euler's product formulas, whose
    coefficients are rational in ``q``; the two series are then convolved.
    ``base`` defaults to ``q**4``.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    a = Scalar.coerce(a)
    b = Scalar.coerce(b)
    p = qpow(4) if base is None else base
    if a == b:
        return QSeriesExpansion((ONE,) + (ZERO,) * N, p, N)
    num = _euler_numerator(a, p, N)
    den = _euler_denominator(b, p, N)
    out = []
    for k in range(N + 1):
        acc = ZERO
        for i in range(k + 1):
            if num[i] and den[k - i]:
                acc = acc + num[i] * den[k - i]
        out.append(acc)
    return QSeriesExpansion(tuple(out), p, N)


def det(M: Sequence[Sequence[Scalar]]) -> Scalar:
    """Determinant by Gaussian elimination over the field."""
    n = len(M)
    A = [[Scalar.coerce(x) for x in row] for row in M]
    sign = ONE
    acc = ONE
    for c in range(n):
        piv = next((r for r in range(c, n) if A[r][c]), None)
        if piv is None:
            return ZERO
        if piv != c:
            A[c], A[piv] = A[piv], A[c]
            sign = -sign
        p = A[c][c]
        acc = acc * p
        inv = p.inverse()
        for r in range(c + 1, n):
            if A[r][c]:
                f = A[r][c] * inv
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return sign * acc


def pfaffian(B: Sequence[Sequence[Scalar]]) -> Scalar:
    """Pfaffian of an antisymmetric matrix of even size.

    Uses skew-symmetric Schur complements:
    ``Pf(A) = a12 * Pf(C + (v u^T - u v^T) / a12)`` after pivoting.
    """
    n = len(B)
    if n % 2:
        raise ValueError("pfaffian needs an even-sized matrix")
    A = [[Scalar.coerce(x) for x in row] for row in B]
    for i in range(n):
        if len(A[i]) != n:
            raise ValueError("pfaffian needs a square matrix")
        for j in range(i, n):
            if A[i][j] != -A[j][i]:
                raise ValueError("pfaffian needs an antisymmetric matrix")
    return _pf(A)


def _pf(A):
    n = len(A)
    if n == 0:
        return ONE
    sign = ONE
    piv = next((j for j in range(1, n) if A[0][j]), None)
    if piv is None:
        return ZERO
    if piv != 1:
        # swap index 1 and piv (rows and columns)
        A = [row[:] for row in A]
        A[1], A[piv] = A[piv], A[1]
        for row in A:
            row[1], row[piv] = row[piv], row[1]
        sign = -sign
    a = A[0][1]
    if n == 2:
        return sign * a
    inv = a.inverse()
    u = A[0][2:]
    v = A[1][2:]
    m = n - 2
    C = [[ZERO] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            x = A[i + 2][j + 2] + (v[i] * u[j] - u[i] * v[j]) * inv
            C[i][j] = x
            C[j][i] = -x
    return sign * a * _pf(C)


def verify_X_identity(n: int, m: int, *, details: bool = False):
    """Check the finite-sum representation of ``X_{m,n}`` with ``t = q**2``.

    The sum ``1 + (1 - 1/t)(1 + t^(2n)) * sum_{a=1..m} ...`` is evaluated
    literally and compared with ``(t^(2m) - t^(2n)) / (1 - t^(2(n+m)))``.
    Each tail sum over ``a = m, m-1, ..., m-k`` is compared with its closed form
    as well.  Returns a bool, or ``(bool, info)`` when ``details`` is set.
    """
    if n < 0 or m < 0 or n + m == 0:
        raise ValueError("verify_X_identity needs n, m >= 0 and n + m > 0")
    t = qpow(2)
    t2 = qpow(4)
    one = ONE

    def term(a):
        r1 = poch(t ** (1 + 2 * n), t2, a - 1) / poch(t ** (2 + 2 * n), t2, a - 1)
        r2 = poch(t ** (2 * m - 2 * a + 2), t2, a) / poch(t ** (2 * m - 2 * a + 1), t2, a)
        return r1 * r2 * t**a / (one - t ** (2 * (n + a)))

    pref = (one - t ** (-1)) * (one + t ** (2 * n))
    terms = {a: term(a) for a in range(1, m + 1)}
    total = one + pref * sum((terms[a] for a in terms), ZERO)
    closed = (t ** (2 * m) - t ** (2 * n)) / (one - t ** (2 * (n + m)))
    ok = total == closed and closed == X_coeff(m, n)
    tails = []
    acc = ZERO
    for k in range(m):
        acc = acc + terms[m - k]
        tail_closed = _tail_closed_form(n, m, k)
        tails.append(acc == tail_closed)
    ok = ok and all(tails)
    if details:
        return ok, {"sum": total, "closed": closed, "tails": tails}
    return ok


def _tail_closed_form(n, m, k):
    # sum over a = m, m-1, ..., m-k of the summand
    t = qpow(2)
    t2 = qpow(4)
    r1 = poch(t ** (1 + 2 * n), t2, m - k - 1) / poch(t ** (2 + 2 * n), t2, m - k - 1)
    r2 = poch(t ** (2 * k + 2), t2, m - k) / poch(t ** (2 * k + 1), t2, m - k)
    geo = sum((t**j for j in range(2 * k + 1)), ZERO)
    return t ** (m - k) * r1 * r2 * geo / (ONE - t ** (2 * (n + m)))
