"""Sparse formal Laurent series and contour-residue extraction.

Exponents are Fractions with denominator dividing 4.  A :class:`FormalSeries`
keeps, per variable, a window ``(lo, hi)``: ``lo`` is a certified lower bound of
the support (``None`` when the series is unbounded below) and ``hi`` is the
precision, meaning coefficients above it are unknown (``None`` for an exact,
polynomial series).  Coefficients are either :class:`Scalar` or vectors
(``dict state -> Scalar``).

Contour integrals are handled by :class:`PoleExpansion` (one geometric series
per pole, direction fixed by whether the pole lies inside the contour) and by
:func:`geometric_coefficient`, which sums a product of geometric series exactly
at a prescribed exponent by enumerating the finitely many index tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .scalars import ONE, ZERO, Scalar

__all__ = [
    "exponent",
    "FormalSeries",
    "WindowError",
    "ResidueLatticeError",
    "series_mul",
    "PoleExpansion",
    "expand_rational_factor",
    "residue_w",
    "Geometric",
    "geometric_coefficient",
    "solve_indices",
]


class WindowError(ValueError):
    """Operands of a series operation have incompatible variables or windows."""


class ResidueLatticeError(ValueError):
    """The exponents in a residue variable cannot reach -1."""


def exponent(x) -> Fraction:
    e = Fraction(x)
    if 4 % e.denominator:
        raise ValueError(f"exponent {x} is not a quarter-integer")
    return e


def _is_vec(c):
    return isinstance(c, dict)


def _cadd(a, b):
    if _is_vec(a):
        out = dict(a)
        for k, x in b.items():
            y = out.get(k)
            out[k] = x if y is None else y + x
        return {k: x for k, x in out.items() if x}
    return a + b


def _cmul(a, b):
    # scalar * scalar, scalar * vector or vector * scalar
    if _is_vec(a) and _is_vec(b):
        raise WindowError("cannot multiply two vector-valued series")
    if _is_vec(a):
        a, b = b, a
    if _is_vec(b):
        return {k: a * x for k, x in b.items() if a * x}
    return a * b


def _nonzero(c):
    return bool(c) if _is_vec(c) else not c.is_zero()


class FormalSeries:
    """Sparse Laurent series ``sum c_e x^e`` in named variables."""

    __slots__ = ("vars", "terms", "lo", "hi")

    def __init__(self, vars, terms: Mapping | None = None, lo=None, hi=None):
        self.vars = tuple(vars)
        n = len(self.vars)
        self.lo = tuple(lo) if lo is not None else (None,) * n
        self.hi = tuple(hi) if hi is not None else (None,) * n
        if len(self.lo) != n or len(self.hi) != n:
            raise WindowError("window length does not match the variables")
        out = {}
        for e, c in (terms or {}).items():
            e = tuple(exponent(x) for x in (e if isinstance(e, tuple) else (e,)))
            if len(e) != n:
                raise WindowError("exponent tuple does not match the variables")
            if not _nonzero(c):
                continue
            if any(h is not None and x > h for x, h in zip(e, self.hi)):
                continue
            if any(l is not None and x < l for x, l in zip(e, self.lo)):
                raise WindowError(f"term {e} lies below the declared support bound")
            prev = out.get(e)
            out[e] = c if prev is None else _cadd(prev, c)
        self.terms = {e: c for e, c in out.items() if _nonzero(c)}

    # -- constructors -------------------------------------------------
    @classmethod
    def monomial(cls, vars, exps, coeff=ONE):
        exps = tuple(exps) if isinstance(exps, (tuple, list)) else (exps,)
        return cls(vars, {exps: coeff}, lo=exps)

    @classmethod
    def one(cls, vars):
        return cls.monomial(vars, (0,) * len(tuple(vars)))

    # -- access -------------------------------------------------------
    def coeff(self, exps, default=None):
        exps = tuple(exponent(x) for x in (exps if isinstance(exps, tuple) else (exps,)))
        for x, h in zip(exps, self.hi):
            if h is not None and x > h:
                raise WindowError(f"coefficient at {exps} lies outside the precision window")
        c = self.terms.get(exps)
        if c is None:
            return ZERO if default is None else default
        return c

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, FormalSeries):
            return NotImplemented
        return self.vars == other.vars and self.hi == other.hi and self.terms == other.terms

    def __repr__(self):
        return f"FormalSeries({self.vars}, {len(self.terms)} terms, lo={self.lo}, hi={self.hi})"

    # -- arithmetic ---------------------------------------------------
    def _check(self, other):
        if self.vars != other.vars:
            raise WindowError(f"variables differ: {self.vars} vs {other.vars}")

    def __add__(self, other):
        self._check(other)
        hi = tuple(_min(a, b) for a, b in zip(self.hi, other.hi))
        lo = tuple(None if a is None or b is None else min(a, b) for a, b in zip(self.lo, other.lo))
        terms = dict(self.terms)
        for e, c in other.terms.items():
            prev = terms.get(e)
            terms[e] = c if prev is None else _cadd(prev, c)
        return FormalSeries(self.vars, terms, lo=lo, hi=hi)

    def scale(self, c):
        return FormalSeries(
            self.vars, {e: _cmul(c, x) for e, x in self.terms.items()}, lo=self.lo, hi=self.hi
        )

    def __neg__(self):
        return self.scale(-ONE)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        return series_mul(self, other)

    def truncate(self, hi):
        hi = tuple(hi) if isinstance(hi, (tuple, list)) else (hi,)
        hi = tuple(_min(a, None if b is None else exponent(b)) for a, b in zip(self.hi, hi))
        return FormalSeries(self.vars, self.terms, lo=self.lo, hi=hi)

    def map_coeffs(self, fn):
        return FormalSeries(
            self.vars, {e: fn(c) for e, c in self.terms.items()}, lo=self.lo, hi=self.hi
        )

    def residue(self, var):
        return residue_w(self, var)


def _min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def series_mul(f: FormalSeries, g: FormalSeries) -> FormalSeries:
    """Exact product of two truncated series.

    The result is known up to ``min(hi_f + lo_g, hi_g + lo_f)`` in each
    variable.  A factor that is unbounded below may only meet an exact
    (polynomial) factor in that variable, otherwise infinitely many products
    would feed one coefficient.
    """
    f._check(g)
    hi = []
    lo = []
    for lf, hf, lg, hg in zip(f.lo, f.hi, g.lo, g.hi):
        if (lf is None and hg is not None) or (lg is None and hf is not None):
            raise WindowError("an unbounded-below factor needs an exact partner")
        if lf is None and lg is None and (hf is not None or hg is not None):
            raise WindowError("two unbounded-below factors")
        cand = []
        if hf is not None:
            cand.append(hf + lg)
        if hg is not None:
            cand.append(hg + lf)
        hi.append(min(cand) if cand else None)
        lo.append(None if lf is None or lg is None else lf + lg)
    out = {}
    for e1, c1 in f.terms.items():
        for e2, c2 in g.terms.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            if any(h is not None and x > h for x, h in zip(e, hi)):
                continue
            c = _cmul(c1, c2)
            prev = out.get(e)
            out[e] = c if prev is None else _cadd(prev, c)
    return FormalSeries(f.vars, out, lo=lo, hi=hi)


@dataclass(frozen=True)
class PoleExpansion:
    """Pole of ``1/(1 - ...)`` at ``var = coeff * ref`` with its contour side.

    ``inside=True`` means the pole is enclosed by the contour, so the factor is
    expanded in nonnegative powers of ``coeff * ref / var``; otherwise in
    nonnegative powers of ``var / (coeff * ref)``.
    """

    coeff: Scalar
    var: str = "w"
    ref: str = "z"
    inside: bool = True

    def ratio(self) -> tuple[Scalar, dict]:
        """The geometric ratio as ``(constant, {variable: exponent})``."""
        if self.inside:
            return self.coeff, {self.ref: Fraction(1), self.var: Fraction(-1)}
        return self.coeff.inverse(), {self.var: Fraction(1), self.ref: Fraction(-1)}

    def geometric(self) -> "Geometric":
        c, exps = self.ratio()
        return Geometric(c, exps)


def expand_rational_factor(p: PoleExpansion, N: int, vars=None) -> FormalSeries:
    """Geometric expansion of the factor with pole ``p``, truncated at order ``N``.

    The result is returned as a polynomial in ``(var, ref)`` (or the given
    variable order) with terms of order ``0..N`` in the geometric ratio.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    vars = tuple(vars) if vars is not None else (p.var, p.ref)
    c, exps = p.ratio()
    terms = {}
    cj = ONE
    for j in range(N + 1):
        e = tuple(exps.get(v, 0) * j for v in vars)
        terms[e] = cj
        cj = cj * c
    return FormalSeries(vars, terms)


def residue_w(f: FormalSeries, var: str = "w") -> FormalSeries:
    """Coefficient of ``var**-1``, as a series in the remaining variables.

    Raises :class:`ResidueLatticeError` when the exponents of ``var`` present
    in ``f`` are not integer-spaced from ``-1`` (a sign of a mismatched
    fractional power somewhere upstream).
    """
    try:
        i = f.vars.index(var)
    except ValueError:
        raise WindowError(f"{var} is not a variable of the series") from None
    if f.hi[i] is not None and f.hi[i] < -1:
        raise WindowError("the residue lies above the precision window")
    if f.lo[i] is None and f.hi[i] is not None:
        raise WindowError("cannot take a residue of a series unbounded in both directions")
    rest = f.vars[:i] + f.vars[i + 1:]
    out = {}
    for e, c in f.terms.items():
        if (e[i] + 1).denominator != 1:
            raise ResidueLatticeError(f"{var}-exponent {e[i]} is off the integer lattice of -1")
        if e[i] != -1:
            continue
        key = e[:i] + e[i + 1:]
        prev = out.get(key)
        out[key] = c if prev is None else _cadd(prev, c)
    lo = f.lo[:i] + f.lo[i + 1:]
    hi = f.hi[:i] + f.hi[i + 1:]
    return FormalSeries(rest, out, lo=lo, hi=hi)


# -- exact sums of products of geometric series ------------------------------


@dataclass(frozen=True)
class Geometric:
    """The series ``sum_{j>=0} (c * prod x^e)^j`` for the ratio ``c * prod x^e``."""

    c: Scalar
    exps: Mapping = field(default_factory=dict)

    def exp_of(self, var) -> Fraction:
        return Fraction(self.exps.get(var, 0))


def solve_indices(rows, rhs, limit=10**6):
    """Nonnegative integer solutions ``j`` of ``rows @ j == rhs``.

    ``rows`` is a list of integer coefficient lists (one per constrained
    variable).  The solution set must be finite; an unknown is fixed only once
    some row (or the sum or difference of two rows) bounds it, and
    :class:`ValueError` is raised when no such bound exists.
    """
    r = len(rows[0]) if rows else 0
    sols = []

    def bounded(rows_, rhs_, free):
        cands = list(zip(rows_, rhs_))
        for a in range(len(rows_)):
            for b in range(a + 1, len(rows_)):
                cands.append(([x + y for x, y in zip(rows_[a], rows_[b])], rhs_[a] + rhs_[b]))
                cands.append(([x - y for x, y in zip(rows_[a], rows_[b])], rhs_[a] - rhs_[b]))
        best = None
        for row, b in cands:
            coeffs = [row[k] for k in free]
            if all(c >= 0 for c in coeffs) or all(c <= 0 for c in coeffs):
                sgn = 1 if any(c > 0 for c in coeffs) else -1
                for k in free:
                    c = row[k] * sgn
                    if c > 0:
                        bound = (b * sgn) // c
                        if best is None or bound < best[1]:
                            best = (k, bound)
        return best

    def rec(fixed, rows_, rhs_):
        free = [k for k in range(r) if k not in fixed]
        if not free:
            if all(x == 0 for x in rhs_):
                sols.append(tuple(fixed[k] for k in range(r)))
            return
        # infeasible when some row has no free unknowns but nonzero rhs
        for row, b in zip(rows_, rhs_):
            if all(row[k] == 0 for k in free) and b != 0:
                return
        pick = bounded(rows_, rhs_, free)
        if pick is None:
            # unknowns absent from every row contribute only at index 0
            idle = [k for k in free if all(row[k] == 0 for row in rows_)]
            if idle:
                k = idle[0]
                rec({**fixed, k: 0}, rows_, rhs_)
                return
            raise ValueError("geometric index system has an unbounded solution set")
        k, bound = pick
        if bound < 0:
            return
        if bound > limit:
            raise ValueError("geometric index bound too large")
        for v in range(bound + 1):
            rec({**fixed, k: v}, rows_, [b - row[k] * v for row, b in zip(rows_, rhs_)])

    rec({}, [list(x) for x in rows], list(rhs))
    return sols


def geometric_coefficient(factors: Iterable[Geometric], target: Mapping, free=()) -> dict:
    """Coefficient extraction from a product of geometric series.

    Returns ``{exponents of the free variables: Scalar}`` collecting all terms
    of ``prod_i sum_j (c_i x^{e_i})^j`` whose exponents in the constrained
    variables equal ``target``.  Constrained exponents must be integer
    combinations (a fractional mismatch gives no solutions).
    """
    factors = list(factors)
    cvars = list(target)
    if not factors:
        return {tuple(Fraction(0) for _ in free): ONE} if all(
            Fraction(target[v]) == 0 for v in cvars
        ) else {}
    # scale fractional exponents to integers
    den = 1
    for g in factors:
        for v in cvars:
            den = _lcm(den, g.exp_of(v).denominator)
    for v in cvars:
        den = _lcm(den, Fraction(target[v]).denominator)
    rows = [[int(g.exp_of(v) * den) for g in factors] for v in cvars]
    rhs = [Fraction(target[v]) * den for v in cvars]
    if any(b.denominator != 1 for b in rhs):
        return {}
    rhs = [int(b) for b in rhs]
    out = {}
    for sol in solve_indices(rows, rhs):
        c = ONE
        key = []
        for v in free:
            key.append(sum((g.exp_of(v) * j for g, j in zip(factors, sol)), Fraction(0)))
        for g, j in zip(factors, sol):
            if j:
                c = c * g.c**j
        key = tuple(key)
        prev = out.get(key)
        out[key] = c if prev is None else prev + c
    return {k: c for k, c in out.items() if c}


def _lcm(a, b):
    from math import gcd

    return a * b // gcd(a, b)
