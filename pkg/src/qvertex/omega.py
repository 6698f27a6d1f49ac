"""Fermion emission operators between the NS and R fermion Fock spaces.

Two directions are supported:

* ``"NS->R"``: ``Omega^R_NS(z) = <NS| e^Y |R>``, mapping NS states to R states;
* ``"R->NS"``: ``Omega^NS_R(z) = <R| e^{Y'} |NS>``, mapping R states to NS states.

Fermion states are decreasing tuples of doubled positive modes, as in
:mod:`qvertex.fock`.  Matrix elements are homogeneous,
``<out|Omega(z)|in> = c * z^(E_out - E_in)`` with ``E`` the fermion mode sum,
and the functions here return the coefficient ``c``.  The value at the base
point ``z = q^-4`` is ``c * q^(-4 (E_out - E_in))``.

The direct route expands ``e^Y`` in a single Clifford algebra containing both
sectors (NS modes ordered to the left of R modes, the R zero mode
anticommuting with every other mode).  Since every mode in ``Y`` except
``phi^R_0`` anticommutes with every other, the series terminates.  The Wick
route evaluates Pfaffians of two-point values obtained independently.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .fock import fermion_mode_on_set, fermion_sets
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
    qpow,
)

__all__ = [
    "DIRECTIONS",
    "fermion_energy",
    "normalization",
    "y_terms",
    "omega_apply",
    "omega_matrix_element",
    "omega_base_value",
    "omega_two_point_oracle",
    "two_point_closed_form",
    "omega_pfaffian_element",
    "omega_rescale",
    "omega_vacuum_sandwich",
    "verify_omega_intertwining",
    "verify_auxiliary_annihilation",
    "verify_two_point",
    "verify_wick",
]

DIRECTIONS = ("NS->R", "R->NS")

SQRT_M1 = minus_one_pow(Fraction(1, 2))  # (-1)^(1/2) = zeta^2


def _sectors(direction):
    if direction == "NS->R":
        return "NS", "R"
    if direction == "R->NS":
        return "R", "NS"
    raise ValueError(f"unknown direction {direction!r}")


def fermion_energy(modes) -> Fraction:
    return Fraction(sum(modes), 2)


# -- normalized modes ---------------------------------------------------------


@lru_cache(maxsize=None)
def normalization(sector: str, n2: int) -> Scalar:
    """Factor ``c`` in ``varphi_n = c * phi_n`` for the doubled mode ``n2``.

    R: ``varphi_0 = phi_0``, ``varphi_-m = gamma_m q^5m / eta_m phi_-m`` and
    ``varphi_m = gamma_m q^-3m / eta_m phi_m``.  NS (``n = k + 1/2``):
    ``varphi_{k+1/2} = -(-1)^(1/2) gamma_k q^(-3k-2) / eta_{k+1/2} phi_{k+1/2}`` and
    ``varphi_{-k-1/2} = (-1)^(1/2) gamma_k q^(5k+2) / eta_{k+1/2} phi_{-k-1/2}``,
    used for every ``k >= 0``.
    """
    if sector == "R":
        if n2 % 2:
            raise ValueError("R modes are integers")
        m = abs(n2) // 2
        if m == 0:
            return ONE
        p = 5 * m if n2 < 0 else -3 * m
        return gamma_coeff(m) * qpow(p) / eta(m)
    if n2 % 2 == 0:
        raise ValueError("NS modes are half-integers")
    k = (abs(n2) - 1) // 2
    h = Fraction(abs(n2), 2)
    if n2 > 0:
        return -SQRT_M1 * gamma_coeff(k) * qpow(-3 * k - 2) / eta(h)
    return SQRT_M1 * gamma_coeff(k) * qpow(5 * k + 2) / eta(h)


# -- joint Clifford algebra -----------------------------------------------------
# A joint state is (ns, r): NS creation modes then R creation modes, each a
# decreasing tuple of doubled modes.  An operator is (sector, n2).


def _joint_act(op, js):
    sector, n2 = op
    ns, r = js
    if sector == "NS":
        out = []
        for f, c in fermion_mode_on_set(n2, ns, "NS"):
            out.append(((f, r), c))
        return out
    sign = -ONE if len(ns) % 2 else ONE
    if n2 == 0:
        return [(js, sign if len(r) % 2 == 0 else -sign)]
    return [((ns, f), sign * c) for f, c in fermion_mode_on_set(n2, r, "R")]


def y_terms(direction: str, in_modes, out_max2: int):
    """Quadratic terms of ``Y`` (or ``Y'``) restricted to the relevant modes.

    Returns ``[(coeff, z_exponent, op_left, op_right)]`` with
    ``coeff`` including the mode normalizations.  Annihilated modes are
    restricted to ``in_modes``; created modes to doubled modes ``<= out_max2``.
    Modes outside these sets cannot contribute to a matrix element with the
    given input and an output of bounded energy.
    """
    terms = []
    if direction == "NS->R":
        rmodes = [n2 for n2 in range(2, out_max2 + 1, 2)]  # created R modes (doubled)
        rcre = rmodes + [0]
        nsann = sorted(in_modes, reverse=True)
        # -X_{m,n} varphi^R_{-m} varphi^R_{-n} z^{m+n}, m > n >= 0
        for i, a in enumerate(rcre):
            for b in rcre[i + 1:]:
                m, n = a // 2, b // 2
                c = -X_coeff(m, n) * normalization("R", -a) * normalization("R", -b)
                terms.append((c, Fraction(m + n), ("R", -a), ("R", -b)))
        # -X_{k+1/2,l+1/2} varphi^NS_{k+1/2} varphi^NS_{l+1/2} z^{-k-l-1}, k > l
        for i, a in enumerate(nsann):
            for b in nsann[i + 1:]:
                c = -X_coeff(Fraction(a, 2), Fraction(b, 2))
                c = c * normalization("NS", a) * normalization("NS", b)
                terms.append((c, -Fraction(a + b, 2), ("NS", a), ("NS", b)))
        # +X_{m,-k-1/2} varphi^R_{-m} varphi^NS_{k+1/2} z^{m-k-1/2}
        for a in rcre:
            for b in nsann:
                c = X_coeff(a // 2, -Fraction(b, 2))
                c = c * normalization("R", -a) * normalization("NS", b)
                terms.append((c, Fraction(a - b, 2), ("R", -a), ("NS", b)))
        return terms
    if direction == "R->NS":
        nscre = [n2 for n2 in range(out_max2 - (1 - out_max2 % 2), 0, -2)]
        rann = sorted(in_modes, reverse=True) + [0]
        # X_{k+1/2,l+1/2} varphi^NS_{-k-1/2} varphi^NS_{-l-1/2} z^{k+l+1}, k > l
        for i, a in enumerate(nscre):
            for b in nscre[i + 1:]:
                c = X_coeff(Fraction(a, 2), Fraction(b, 2))
                c = c * normalization("NS", -a) * normalization("NS", -b)
                terms.append((c, Fraction(a + b, 2), ("NS", -a), ("NS", -b)))
        # X_{m,n} varphi^R_m varphi^R_n z^{-m-n}, m > n >= 0
        for i, a in enumerate(rann):
            for b in rann[i + 1:]:
                m, n = a // 2, b // 2
                c = X_coeff(m, n) * normalization("R", a) * normalization("R", b)
                terms.append((c, -Fraction(m + n), ("R", a), ("R", b)))
        # -X_{-k-1/2,m} varphi^NS_{-k-1/2} varphi^R_m z^{k-m+1/2}
        for a in nscre:
            for b in rann:
                c = -X_coeff(-Fraction(a, 2), b // 2)
                c = c * normalization("NS", -a) * normalization("R", b)
                terms.append((c, Fraction(a - b, 2), ("NS", -a), ("R", b)))
        return terms
    raise ValueError(f"unknown direction {direction!r}")


@lru_cache(maxsize=None)
def omega_apply(direction: str, in_modes: tuple, out_bound) -> tuple:
    """``Omega |in>`` restricted to outputs of fermion energy ``<= out_bound``.

    Returns a tuple of ``(out_modes, c)`` pairs sorted by ``out_modes``, where
    ``<out|Omega(z)|in> = c * z^(E_out - E_in)``.  Computed by expanding the
    exponential of ``Y`` (``Y'``) as a product of its factors.
    """
    src, dst = _sectors(direction)
    out_bound = Fraction(out_bound)
    if out_bound < 0:
        return ()
    out_max2 = int(out_bound * 2)
    terms = y_terms(direction, in_modes, out_max2)
    e_in = fermion_energy(in_modes)
    if direction == "NS->R":
        start = (tuple(in_modes), ())
    else:
        start = ((), tuple(in_modes))
    dst_index = 1 if dst == "R" else 0

    def dst_energy(js):
        return fermion_energy(js[dst_index])

    # Terms without the R zero mode are nilpotent and commute with all others;
    # the zero-mode terms sum to phi_0 B with (phi_0 B)^2 = 0.  Hence
    # e^Y = prod_t (1 + t) * (1 + T0), applied factor by factor.
    zero_terms = [t for t in terms if ("R", 0) in (t[2], t[3])]
    plain = [t for t in terms if ("R", 0) not in (t[2], t[3])]
    total = {start: (ONE, Fraction(0))}
    for group in [zero_terms] + [[t] for t in plain]:
        add = {}
        for js, (c, ze) in total.items():
            for coef, zexp, op_l, op_r in group:
                for js1, c1 in _joint_act(op_r, js):
                    for js2, c2 in _joint_act(op_l, js1):
                        if dst_energy(js2) > out_bound:
                            continue
                        val = c * coef * (c1 * c2)
                        prev = add.get(js2)
                        if prev is None:
                            add[js2] = (val, ze + zexp)
                        else:
                            if prev[1] != ze + zexp:
                                raise AssertionError("Y is not homogeneous in z")
                            add[js2] = (prev[0] + val, prev[1])
        for js, (c, ze) in add.items():
            prev = total.get(js)
            if prev is None:
                total[js] = (c, ze)
            else:
                if prev[1] != ze:
                    raise AssertionError("Y is not homogeneous in z")
                total[js] = (prev[0] + c, ze)
        total = {js: v for js, v in total.items() if v[0]}
    out = []
    for js, (c, ze) in total.items():
        if not c:
            continue
        if js[1 - dst_index]:
            continue  # source sector must be back at its vacuum
        modes = js[dst_index]
        if ze != fermion_energy(modes) - e_in:
            raise AssertionError("z-power does not match the energy difference")
        out.append((modes, c))
    out.sort()
    return tuple(out)


def omega_matrix_element(direction: str, out_modes, in_modes) -> tuple[Scalar, Fraction]:
    """``(c, e)`` with ``<out|Omega(z)|in> = c * z^e`` from the direct expansion."""
    out_modes = tuple(out_modes)
    in_modes = tuple(in_modes)
    e = fermion_energy(out_modes) - fermion_energy(in_modes)
    for modes, c in omega_apply(direction, in_modes, fermion_energy(out_modes)):
        if modes == out_modes:
            return c, e
    return ZERO, e


def omega_base_value(c: Scalar, e: Fraction) -> Scalar:
    """Value of ``c * z^e`` at ``z = q^-4``."""
    return c * qpow(-4 * e)


def omega_rescale(zeta_: Scalar, c: Scalar, e: Fraction) -> tuple[Scalar, Fraction]:
    """Conjugate ``c z^e`` by the fermionic grading: ``zeta^{d_out} (c z^e) zeta^{-d_in}``.

    ``d = -E`` on the fermion states, so the coefficient gains ``zeta^-e``; the
    result represents the element of ``Omega(z / zeta)``.
    """
    if e.denominator != 1:
        raise ValueError("rescaling by a q-monomial needs an integer exponent here")
    return c * zeta_ ** (-int(e)), e


# -- two-point values -----------------------------------------------------------


@lru_cache(maxsize=None)
def _inv_f_plus(N):
    # 1 / f_+(x) = (q^3 x; q^4)_inf / (q x; q^4)_inf
    return expand_poch_ratio(qpow(3), q, N).coeffs


@lru_cache(maxsize=None)
def two_point_closed_form(direction: str, kind: str, i: int, j: int) -> Scalar:
    """Closed-form two-point values at ``z = q^-4`` for each direction.

    ``R->NS``: ``RR (n,m) = <NS|Omega phi_-n phi_-m|R>``,
    ``NR (k,n) = <NS|phi_{k+1/2} Omega phi_-n|R>``,
    ``NN (k,l) = <NS|phi_{k+1/2} phi_{l+1/2} Omega|R>``.
    ``NS->R``: ``RR (n,m) = <R|phi_n phi_m Omega|NS>``,
    ``RN (n,k) = <R|phi_n Omega phi_{-k-1/2}|NS>``,
    ``NN (k,l) = <R|Omega phi_{-k-1/2} phi_{-l-1/2}|NS>``.
    """
    g = gamma_coeff
    h = Fraction(1, 2)
    if direction == "R->NS":
        if kind == "RR":
            n, m = i, j
            if n == m:
                return ONE if n == 0 else ZERO  # phi_0^2 = 1
            return X_coeff(m, n) * g(n) * g(m) * qpow(n + m)
        if kind == "NR":
            k, n = i, j
            return -SQRT_M1 * X_coeff(-k - h, n) * g(n) * g(k) * qpow(n + k)
        if kind == "NN":
            k, l = i, j
            return ZERO if k == l else -X_coeff(l + h, k + h) * g(l) * g(k) * qpow(l + k)
    if direction == "NS->R":
        if kind == "RR":
            n, m = i, j
            if n == m:
                return ONE if n == 0 else ZERO
            return X_coeff(n, m) * g(n) * g(m) * qpow(n + m)
        if kind == "RN":
            n, k = i, j
            return SQRT_M1 * X_coeff(-k - h, n) * g(n) * g(k) * qpow(n + k)
        if kind == "NN":
            k, l = i, j
            return ZERO if k == l else X_coeff(l + h, k + h) * g(l) * g(k) * qpow(l + k)
    raise ValueError(f"unknown two-point kind {direction} {kind}")


@lru_cache(maxsize=None)
def omega_two_point_oracle(direction: str, n: int, m: int) -> Scalar:
    """R-R two-point value at ``z = q^-4`` from the generating-function route.

    ``R->NS``: coefficient of ``z^n w^m`` in
    ``{(1-qw)/(1-q^2w/z) + (1-w/q)/(1-w/(q^2 z)) - 1} / (f_+(z) f_+(w))``.
    ``NS->R``: coefficient of ``z^-n w^-m`` in the mirrored expression with
    ``1/z`` in the numerators and ``f_+(1/z) f_+(1/w)``.
    """
    N = n + m + 2
    g = _inv_f_plus(N)
    acc = ZERO
    if direction == "R->NS":
        # z: i - a = n; w: j + a + d = m
        for a in range(m + 1):
            i = n + a
            for d, c1, c2 in ((0, ONE, ONE), (1, -q, -qpow(-1))):
                j = m - a - d
                if j < 0:
                    continue
                t = c1 * qpow(2 * a) + c2 * qpow(-2 * a)
                acc = acc + t * g[i] * g[j]
        acc = acc - g[n] * g[m]
        return acc
    if direction == "NS->R":
        # w: -j + a = -m; z: -i - a - d = -n
        for a in range(n + 1):
            j = m + a
            for d, c1, c2 in ((0, ONE, ONE), (1, -q, -qpow(-1))):
                i = n - a - d
                if i < 0:
                    continue
                t = c1 * qpow(2 * a) + c2 * qpow(-2 * a)
                acc = acc + t * g[i] * g[j]
        acc = acc - g[n] * g[m]
        return acc
    raise ValueError(f"unknown direction {direction!r}")


def verify_two_point(N: int = 5, details: bool = False):
    """Direct expansion versus the closed-form two-point values and the series oracle."""
    fails = []
    for n in range(N + 1):
        for m in range(N + 1):
            # R->NS, RR: state phi_-n phi_-m |R>
            for direction in DIRECTIONS:
                want = two_point_closed_form(direction, "RR", n, m)
                oracle = omega_two_point_oracle(direction, n, m)
                if want != oracle:
                    fails.append((direction, "RR-oracle", n, m))
                got = _direct_two_point(direction, "RR", n, m)
                if got != want:
                    fails.append((direction, "RR", n, m))
            for direction, kind in (("R->NS", "NR"), ("R->NS", "NN"), ("NS->R", "RN"), ("NS->R", "NN")):
                want = two_point_closed_form(direction, kind, n, m)
                got = _direct_two_point(direction, kind, n, m)
                if got != want:
                    fails.append((direction, kind, n, m))
    return (not fails, fails) if details else not fails


def _ordered_state(ops, sector):
    """Act with creation operators ``ops`` (rightmost first) on the vacuum.

    Returns ``(modes, sign)`` for a single basis state, or ``None`` when zero.
    Zero modes act by the parity sign (``phi_0 |vac> = |vac>``).
    """
    st = ()
    sign = ONE
    for n2 in reversed(ops):
        res = fermion_mode_on_set(n2, st, sector)
        if not res:
            return None
        st, c = res[0]
        sign = sign * c
    return st, sign


def _bra_pairing(ops, sector, modes):
    """``<vac| ops |modes>`` for annihilators ``ops`` (applied right to left)."""
    st = modes
    c = ONE
    for n2 in reversed(ops):
        res = fermion_mode_on_set(n2, st, sector)
        if not res:
            return ZERO
        st, c1 = res[0]
        c = c * c1
    return c if not st else ZERO


def _direct_two_point(direction, kind, i, j):
    """Two-point value at ``z = q^-4`` from :func:`omega_apply`."""
    if direction == "R->NS":
        if kind == "RR":
            ket = _ordered_state([-2 * i, -2 * j], "R")
            bra_ops = []
        elif kind == "NR":
            ket = _ordered_state([-2 * j], "R")
            bra_ops = [2 * i + 1]
        else:  # NN
            ket = ((), ONE)
            bra_ops = [2 * i + 1, 2 * j + 1]
        bra_sector = "NS"
    else:
        if kind == "RR":
            ket = ((), ONE)
            bra_ops = [2 * i, 2 * j]
        elif kind == "RN":
            ket = _ordered_state([-(2 * j + 1)], "NS")
            bra_ops = [2 * i]
        else:
            ket = _ordered_state([-(2 * i + 1), -(2 * j + 1)], "NS")
            bra_ops = []
        bra_sector = "R"
    if ket is None:
        return ZERO
    in_modes, sign = ket
    e_in = fermion_energy(in_modes)
    acc = ZERO
    bound = Fraction(sum(abs(x) for x in bra_ops), 2)
    for modes, c in omega_apply(direction, in_modes, bound):
        pair = _bra_pairing(bra_ops, bra_sector, modes)
        if pair:
            acc = acc + pair * omega_base_value(c, fermion_energy(modes) - e_in)
    return acc * sign


# -- Wick / Pfaffian route -------------------------------------------------------------


def _pair_value(direction, a, b):
    """Two-point value for the ordered operator pair ``(a, b)``.

    Operators are ``(side, sector, n2)`` with side ``"L"`` (left of Omega) or
    ``"R"`` (right of Omega).
    """
    sa, seca, na = a
    sb, secb, nb = b
    if direction == "R->NS":
        if sa == "L" and sb == "L":
            return two_point_closed_form(direction, "NN", (na - 1) // 2, (nb - 1) // 2)
        if sa == "L" and sb == "R":
            return two_point_closed_form(direction, "NR", (na - 1) // 2, -nb // 2)
        if sa == "R" and sb == "R":
            return omega_two_point_oracle(direction, -na // 2, -nb // 2)
    else:
        if sa == "L" and sb == "L":
            return omega_two_point_oracle(direction, na // 2, nb // 2)
        if sa == "L" and sb == "R":
            return two_point_closed_form(direction, "RN", na // 2, (-nb - 1) // 2)
        if sa == "R" and sb == "R":
            return two_point_closed_form(direction, "NN", (-na - 1) // 2, (-nb - 1) // 2)
    raise ValueError("operator pair out of order")


def omega_pfaffian_element(direction: str, out_modes, in_modes) -> tuple[Scalar, Fraction]:
    """``(c, e)`` for ``<out|Omega(z)|in>`` via Wick's theorem on two-point values."""
    src, dst = _sectors(direction)
    out_modes = tuple(out_modes)
    in_modes = tuple(in_modes)
    left = [("L", dst, b) for b in reversed(out_modes)]
    right = [("R", src, -a) for a in in_modes]
    ops = left + right
    if len(ops) % 2:
        if direction == "R->NS":
            ops.append(("R", "R", 0))
        else:
            ops.insert(0, ("L", "R", 0))
    n = len(ops)
    M = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            v = _pair_value(direction, ops[i], ops[j])
            M[i][j] = v
            M[j][i] = -v
    val = pfaffian(M) if n else ONE
    norm = ONE
    for b in out_modes:
        norm = norm * eta(Fraction(b, 2))
    e = fermion_energy(out_modes) - fermion_energy(in_modes)
    base = val / norm
    return base * qpow(4 * e), e


def verify_wick(max_modes: int = 6, max_energy=Fraction(9, 2), details: bool = False):
    """Direct expansion equals the Pfaffian route for all elements with at most ``max_modes`` modes."""
    fails = []
    count = 0
    for direction in DIRECTIONS:
        src, dst = _sectors(direction)
        bud = int(max_energy * 2)
        for ins in fermion_sets(src, bud):
            res = dict(omega_apply(direction, ins, max_energy))
            for outs in fermion_sets(dst, bud):
                if len(ins) + len(outs) > max_modes:
                    continue
                if fermion_energy(ins) + fermion_energy(outs) > max_energy:
                    continue
                got = res.get(outs, ZERO)
                want, _ = omega_pfaffian_element(direction, outs, ins)
                count += 1
                if got != want:
                    fails.append((direction, outs, ins))
    return (not fails, fails, count) if details else not fails


# -- intertwining --------------------------------------------------------------


@lru_cache(maxsize=None)
def _s_coeffs(N):
    # (q^5 u)_inf / (q^7 u)_inf, u = z/w
    return expand_poch_ratio(qpow(5), qpow(7), N).coeffs


@lru_cache(maxsize=None)
def _t_coeffs(N):
    # (u/q^3)_inf / (u/q)_inf, u = w/z
    return expand_poch_ratio(qpow(-3), qpow(-1), N).coeffs


def _bra_mode(sector, n2, out_modes):
    """Row of ``<out| phi_n``: ``[(out', coeff)]`` with ``<out|phi_n|out'> = coeff``."""
    if n2 > 0:
        if n2 in out_modes:
            return []
        cand = tuple(sorted(out_modes + (n2,), reverse=True))
    elif n2 < 0:
        if -n2 not in out_modes:
            return []
        cand = tuple(x for x in out_modes if x != -n2)
    else:
        cand = out_modes
    res = []
    for f, c in fermion_mode_on_set(n2, cand, sector):
        if f == out_modes:
            res.append((cand, c))
    return res


@lru_cache(maxsize=None)
def _omega_row(direction, in_modes, bound):
    return dict(omega_apply(direction, in_modes, bound))


def _omega_coeff(direction, out_modes, in_modes, bound=None):
    if bound is None:
        bound = fermion_energy(out_modes)
    return _omega_row(direction, in_modes, bound).get(out_modes, ZERO)


def verify_omega_intertwining(direction: str, order: int = 6, details: bool = False):
    """Mode-by-mode exchange relation of the tilde currents through ``Omega(z)``.

    For ``R->NS`` the relation is ``phi~NS_n Omega = Omega phi~R_n`` with
    ``phi~NS(w) = (-q^4 z/w)^(-1/2) (q^5z/w)_inf/(q^7z/w)_inf phi^NS(w)`` and
    ``phi~R(w) = (w/q^3z)_inf/(w/qz)_inf phi^R(w)``; for ``NS->R`` the sectors
    are exchanged.  Checked on all states of fermion energy ``<= order`` and
    modes ``|n| <= order``.  Both sides are homogeneous, so only the
    coefficient of the single z-power is compared.
    """
    src, dst = _sectors(direction)
    fails = []
    checked = 0
    N = 4 * order + 4
    s = _s_coeffs(N)
    t = _t_coeffs(N)
    pref = SQRT_M1.inverse() * qpow(-2)
    two_order = 2 * order
    dst_states = fermion_sets(dst, two_order)
    src_states = fermion_sets(src, two_order)
    # n ranges over the dst-sector-adjacent lattice: integers when src is R
    shift = Fraction(0) if src == "R" else Fraction(1, 2)
    ns = [Fraction(k) + shift for k in range(-order, order + 1)]
    # bra modes add at most order + 1 to outputs of energy <= order
    row_bound = Fraction(2 * order + 1)
    for outs in dst_states:
        for ins in src_states:
            for n in ns:
                # LHS: sum_j pref s_j z^{j-1/2} <out| phi^dst_{n+1/2-j} Omega |in>
                lhs = ZERO
                for j in range(0, N + 1):
                    p = n + Fraction(1, 2) - j
                    if -p > fermion_energy(outs) + 1:
                        break
                    p2 = int(p * 2)
                    for outp, c in _bra_mode(dst, p2, outs):
                        om = _omega_coeff(direction, outp, ins, row_bound)
                        if om:
                            lhs = lhs + pref * s[j] * c * om
                # RHS: sum_j t_j z^{-j} <out| Omega phi^src_{n+j} |in>
                rhs = ZERO
                for j in range(0, N + 1):
                    p = n + j
                    if p > fermion_energy(ins) + 1:
                        break
                    p2 = int(p * 2)
                    for inp, c in fermion_mode_on_set(p2, ins, src):
                        om = _omega_coeff(direction, outs, inp, row_bound)
                        if om:
                            rhs = rhs + t[j] * c * om
                checked += 1
                if lhs != rhs:
                    fails.append((outs, ins, n))
    if details:
        return not fails, fails, checked
    return not fails


def omega_vacuum_sandwich(direction: str, order: int) -> dict:
    """``<vac|Omega(z) phi(w)|vac>`` at ``z = q^-4`` as ``{w-exponent: Scalar}``.

    The current acts in the source sector; exponents run up to ``order``.
    """
    src, dst = _sectors(direction)
    out = {}
    start = 1 if src == "NS" else 0
    for n2 in range(start, 2 * order + 1, 2):
        # phi_{-n} |vac> contributes w^{n}
        res = fermion_mode_on_set(-n2, (), src) if n2 else fermion_mode_on_set(0, (), src)
        for st, c in res:
            v = _omega_coeff(direction, (), st)
            val = omega_base_value(v, -fermion_energy(st)) * c
            if val:
                out[Fraction(n2, 2)] = val
    return out


def verify_auxiliary_annihilation(order: int = 6, details: bool = False):
    """Vacuum conditions of the auxiliary currents at ``z = q^-4``.

    ``R->NS``: ``<NS| phi~NS_n = 0`` for ``n < 0``, ``phi~R_n |R> = 0`` for
    ``n > 0`` and ``phi~R_0 |R> = |R>``.  ``NS->R``: ``<R| phi~R_n = 0`` for
    ``n < 0``, ``<R| phi~R_0 = <R|`` and ``phi~NS_n |NS> = 0`` for ``n > 0``.
    In each direction the current carrying ``w^(+-1/2)`` has its modes shifted
    by one half, so every ``n`` here is an integer.
    """
    fails = []
    N = 4 * order + 4
    s = _s_coeffs(N)  # (q/w; q^4)_inf / (q^3/w; q^4)_inf, powers of 1/w
    t = _t_coeffs(N)  # (q w; q^4)_inf / (q^3 w; q^4)_inf, powers of w
    h = Fraction(1, 2)
    for direction in DIRECTIONS:
        src, dst = _sectors(direction)
        # bra current sits in dst, ket current in src; the NS one carries w^(+-1/2)
        bra_shift = h if dst == "NS" else Fraction(0)
        ket_shift = -h if src == "NS" else Fraction(0)
        for n in range(-order, order + 1):
            if n <= 0:
                row = {}
                for j in range(N + 1):
                    p2 = int((n + bra_shift - j) * 2)
                    for outp, c in _bra_mode(dst, p2, ()):
                        row[outp] = row.get(outp, ZERO) + s[j] * c
                row = {k: v for k, v in row.items() if v}
                want = {(): ONE} if (n == 0 and dst == "R") else {}
                if n < 0 and row:
                    fails.append(("bra", direction, n))
                if n == 0 and dst == "R" and row != want:
                    fails.append(("bra0", direction, n))
            if n >= 0:
                vec = {}
                for j in range(N + 1):
                    p2 = int((n + j + ket_shift) * 2)
                    if p2 > 2 * order + 2:
                        break
                    for st, c in fermion_mode_on_set(p2, (), src):
                        vec[st] = vec.get(st, ZERO) + t[j] * c
                vec = {k: v for k, v in vec.items() if v}
                if n > 0 and vec:
                    fails.append(("ket", direction, n))
                if n == 0 and src == "R" and vec != {(): ONE}:
                    fails.append(("ket0", direction, n))
    return (not fails, fails) if details else not fails
