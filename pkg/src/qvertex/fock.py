"""Truncated graded Fock realizations of the three level-two modules.

A basis state is a triple ``(bosons, fermions, charge)``:

* ``bosons`` -- partition (non-increasing tuple of positive ints), the state
  ``a_{-l1} a_{-l2} ... |vac>``;
* ``fermions`` -- strictly decreasing tuple of *doubled* positive creation
  modes; the state is ``phi_{-n1} phi_{-n2} ... |NS or R>`` with ``n_i`` equal
  to half the stored integers.  NS modes are odd (half-integer modes), R modes
  are even.  The R zero mode is not an occupation label: ``phi_0 |R> = |R>``;
* ``charge`` -- the integer ``m`` of ``e^{m alpha/2}``, i.e. the eigenvalue of
  ``partial``.

The fermion sector is fixed by the charge: even charge means NS, odd means R.
Vectors are plain dicts ``state -> Scalar``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable

from .scalars import ONE, ZERO, Scalar, eta, q_int, qpow

__all__ = [
    "Module",
    "MODULES",
    "module_of",
    "energy",
    "raw_energy",
    "grade",
    "module_basis",
    "hw_state",
    "vec_add",
    "vec_scale",
    "vec_axpy",
    "vec_clean",
    "apply_linear",
    "boson_act",
    "fermion_act",
    "lattice_act",
    "partial_eigen",
    "K_act",
    "boson_bracket",
    "partitions",
    "fermion_sets",
    "ModuleError",
    "verify_module",
    "character_dimensions",
]

State = tuple  # (bosons, fermions, charge)
Vector = dict


class ModuleError(ValueError):
    pass


@dataclass(frozen=True)
class Module:
    tag: str
    sector: str  # "NS" or "R"
    hw_charge: int
    label: str

    @property
    def hw_raw(self) -> Fraction:
        return Fraction(self.hw_charge**2, 8)

    def contains(self, state: State) -> bool:
        return module_of(state) == self.tag


MODULES = {
    "2L0": Module("2L0", "NS", 0, "V(2Lambda_0)"),
    "2L1": Module("2L1", "NS", 2, "V(2Lambda_1)"),
    "L0L1": Module("L0L1", "R", 1, "V(Lambda_0+Lambda_1)"),
}


def _module(tag) -> Module:
    if isinstance(tag, Module):
        return tag
    try:
        return MODULES[tag]
    except KeyError:
        raise ModuleError(f"unknown module tag {tag!r}") from None


def module_of(state: State) -> str:
    """Module tag of a basis state (even charge: NS modules, split by parity)."""
    _, ferm, m = state
    if m % 2:
        return "L0L1"
    # V(2L0): even fermions with charge in 4Z, odd fermions with charge in 2+4Z
    return "2L0" if (m // 2 + len(ferm)) % 2 == 0 else "2L1"


def raw_energy(state: State) -> Fraction:
    """``m^2/8`` plus boson and fermion mode sums (no highest-weight shift)."""
    bos, ferm, m = state
    return Fraction(m * m, 8) + sum(bos) + Fraction(sum(ferm), 2)


def energy(state: State) -> Fraction:
    """Energy ``-d`` relative to the highest weight vector of the state's module."""
    return raw_energy(state) - MODULES[module_of(state)].hw_raw


def grade(state: State) -> Fraction:
    """Eigenvalue of the grading operator ``d``; zero on every highest weight vector."""
    return -energy(state)


def hw_state(tag) -> State:
    mod = _module(tag)
    return ((), (), mod.hw_charge)


# -- enumeration ----------------------------------------------------------


@lru_cache(maxsize=None)
def partitions(n: int, maxpart: int | None = None) -> tuple:
    """All partitions of ``n`` as non-increasing tuples."""
    if maxpart is None:
        maxpart = n
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, maxpart), 0, -1):
        for rest in partitions(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def fermion_sets(sector: str, budget2: int) -> tuple:
    """Decreasing tuples of doubled modes with doubled sum at most ``budget2``."""
    start = 1 if sector == "NS" else 2
    modes = list(range(start, budget2 + 1, 2))
    out = []

    def rec(idx, remaining, acc):
        out.append(tuple(sorted(acc, reverse=True)))
        for j in range(idx, len(modes)):
            mode = modes[j]
            if mode > remaining:
                break
            acc.append(mode)
            rec(j + 1, remaining - mode, acc)
            acc.pop()

    rec(0, budget2, [])
    return tuple(out)


def _state_key(state):
    bos, ferm, m = state
    return (energy(state), m, ferm, bos)


@lru_cache(maxsize=None)
def module_basis(tag, L) -> tuple:
    """Basis states of a module with energy at most ``L``, in a fixed order.

    The order is lexicographic on (energy, charge, fermion modes, partition).
    """
    mod = _module(tag)
    L = Fraction(L)
    if L < 0:
        return ()
    out = []
    bound = L + mod.hw_raw
    mmax = 0
    while Fraction((mmax + 2) ** 2, 8) <= bound:
        mmax += 2
    charges = range(-(mmax + 2), mmax + 3, 1)
    for m in charges:
        if (m % 2) != (mod.hw_charge % 2):
            continue
        lat = Fraction(m * m, 8)
        if lat > bound:
            continue
        rem = bound - lat
        for ferm in fermion_sets(mod.sector, int(rem * 2)):
            st0 = ((), ferm, m)
            if module_of(st0) != mod.tag:
                continue
            frem = rem - Fraction(sum(ferm), 2)
            for n in range(int(frem) + 1):
                for bos in partitions(n):
                    out.append((bos, ferm, m))
    out.sort(key=_state_key)
    return tuple(out)


# -- vectors -----------------------------------------------------------------


def vec_clean(v: Vector) -> Vector:
    return {k: c for k, c in v.items() if c}


def vec_add(a: Vector, b: Vector) -> Vector:
    out = dict(a)
    for k, c in b.items():
        x = out.get(k)
        out[k] = c if x is None else x + c
    return vec_clean(out)


def vec_scale(c, v: Vector) -> Vector:
    c = Scalar.coerce(c)
    if not c:
        return {}
    return {k: c * x for k, x in v.items()}


def vec_axpy(out: Vector, c, v: Vector) -> None:
    """In-place ``out += c * v`` (zero entries are left for the caller to clean)."""
    for k, x in v.items():
        y = c * x
        prev = out.get(k)
        out[k] = y if prev is None else prev + y


def apply_linear(op: Callable[[State], Iterable], v: Vector) -> Vector:
    """Extend a basis-state map ``state -> [(state', coeff), ...]`` linearly."""
    out: Vector = {}
    for st, c in v.items():
        for st2, d in op(st):
            y = c * d
            prev = out.get(st2)
            out[st2] = y if prev is None else prev + y
    return vec_clean(out)


# -- elementary modes ------------------------------------------------------------


@lru_cache(maxsize=None)
def boson_bracket(m: int) -> Scalar:
    """``[a_m, a_{-m}] = [2m]^2 / m``."""
    return q_int(2 * m) ** 2 / m


def boson_mode_on_partition(m: int, bos: tuple):
    """``a_m`` on a partition state; returns ``[(partition, coeff)]``."""
    if m == 0:
        raise ValueError("a_0 is not part of the Heisenberg algebra here")
    if m < 0:
        return [(tuple(sorted(bos + (-m,), reverse=True)), ONE)]
    k = bos.count(m)
    if k == 0:
        return []
    lst = list(bos)
    lst.remove(m)
    return [(tuple(lst), boson_bracket(m) * k)]


def boson_act(m: int, v: Vector) -> Vector:
    """Action of the boson mode ``a_m`` on a vector of full states."""

    def op(st):
        bos, ferm, ch = st
        return [((b, ferm, ch), c) for b, c in boson_mode_on_partition(m, bos)]

    return apply_linear(op, v)


def fermion_mode_on_set(n2: int, ferm: tuple, sector: str):
    """``phi_n`` (``n = n2/2``) on a fermion occupation tuple.

    Returns ``[(tuple, coeff)]``; the creation order is decreasing modes from the
    left, so inserting or removing at position ``p`` costs ``(-1)**p``.
    """
    if (sector == "NS") != (n2 % 2 == 1):
        raise ModuleError(f"mode {Fraction(n2, 2)} does not belong to the {sector} sector")
    if n2 == 0:
        return [(ferm, ONE if len(ferm) % 2 == 0 else -ONE)]
    if n2 < 0:
        mode = -n2
        if mode in ferm:
            return []
        p = sum(1 for x in ferm if x > mode)
        new = ferm[:p] + (mode,) + ferm[p:]
        return [(new, ONE if p % 2 == 0 else -ONE)]
    if n2 not in ferm:
        return []
    p = ferm.index(n2)
    new = ferm[:p] + ferm[p + 1:]
    c = eta(Fraction(n2, 2))
    return [(new, c if p % 2 == 0 else -c)]


def fermion_act(n, v: Vector) -> Vector:
    """Action of ``phi_n`` on a vector of full states (sector read from the charge)."""
    n2 = int(Fraction(n) * 2)
    if Fraction(n) * 2 != n2:
        raise ValueError("fermion modes are integers or half-integers")

    def op(st):
        bos, ferm, ch = st
        sector = "R" if ch % 2 else "NS"
        return [((bos, f, ch), c) for f, c in fermion_mode_on_set(n2, ferm, sector)]

    return apply_linear(op, v)


def lattice_act(shift: int, v: Vector, target=None) -> Vector:
    """``e^{shift * alpha / 2}``: adds ``shift`` to the charge.

    With ``target`` given, every image state must lie in that module.
    """
    out = {(b, f, m + shift): c for (b, f, m), c in v.items()}
    if target is not None:
        tag = _module(target).tag
        for st in out:
            if module_of(st) != tag:
                raise ModuleError(f"state {st} is not in module {tag}")
    return out


def partial_eigen(state: State) -> int:
    return state[2]


def K_act(v: Vector, power: int = 1) -> Vector:
    """``K^power = q^(power * partial)``."""
    return {st: qpow(power * st[2]) * c for st, c in v.items()}


# -- module checks ---------------------------------------------------------------


def _parity_ok(tag, state: State) -> bool:
    # F^(0)_+: even fermions over F[2Q] (charge in 4Z), odd ones over e^alpha F[2Q]
    _, ferm, m = state
    if tag == "L0L1":
        return m % 2 == 1
    if m % 2:
        return False
    even_lattice = m % 4 == 0
    even_ferm = len(ferm) % 2 == 0
    return (even_lattice == even_ferm) == (tag == "2L0")


def character_dimensions(tag, L) -> list:
    """Dimensions of the energy spaces ``0, 1/2, 1, ..., L`` from the character.

    The count multiplies the generating functions of partitions, of fermion
    occupations split by parity, and of the lattice theta series, in powers of
    ``t = x^(1/2)``; it never enumerates states.
    """
    mod = _module(tag)
    n = int(2 * Fraction(L))

    def mul(a, b):
        out = [0] * (n + 1)
        for i, x in enumerate(a):
            if x:
                for j in range(n + 1 - i):
                    out[i + j] += x * b[j]
        return out

    bos = [1] + [0] * n
    for m in range(1, n // 2 + 1):
        # 1/(1 - t^{2m})
        nxt = list(bos)
        for i in range(2 * m, n + 1):
            nxt[i] += nxt[i - 2 * m]
        bos = nxt
    # fermions by parity: prod (1 + y t^k), k odd for NS and even positive for R;
    # a lattice point below the highest weight needs fermion terms beyond n
    hw = mod.hw_charge
    nf = n + hw * hw // 4
    even, odd = [1] + [0] * nf, [0] * (nf + 1)
    step0 = 1 if mod.sector == "NS" else 2
    for k in range(step0, nf + 1, 2):
        e2, o2 = list(even), list(odd)
        for i in range(k, nf + 1):
            e2[i] += odd[i - k]
            o2[i] += even[i - k]
        even, odd = e2, o2
    # lattice points may sit below the highest weight when fermions make up the difference
    total = [0] * (n + 1)
    for m in range(-2 * n - hw - 4, 2 * n + hw + 5):
        shift = Fraction(m * m - hw * hw, 4)
        if shift.denominator != 1 or shift > n:
            continue
        s = int(shift)
        for ferm_series, probe in ((even, ()), (odd, (1,))):
            if not _parity_ok(tag, ((), probe, m)):
                continue
            for i in range(max(0, -s), n - s + 1):
                total[i + s] += ferm_series[i]
    return mul(total, bos)


def _enumerated_dimensions(tag, L) -> list:
    n = int(2 * Fraction(L))
    out = [0] * (n + 1)
    for st in module_basis(tag, L):
        out[int(2 * energy(st))] += 1
    return out


def verify_module(tag, L: int = 4, details: bool = False):
    """Exact checks of one truncated module.

    * ``[a_m, a_n] = delta_{m+n,0} [2m]^2/m`` on every basis state, ``|m|, |n| <= L``;
    * ``{phi_m, phi_n} = delta_{m+n,0} eta_m`` in the module's sector;
    * every basis state obeys the parity decomposition of its module, and the
      bilinears ``a``, ``phi phi`` keep states inside it;
    * creation of energy ``e`` lowers ``grade`` by exactly ``e``;
    * dimensions per energy equal :func:`character_dimensions`.

    Failures are ``(check, detail)`` pairs.
    """
    mod = _module(tag)
    basis = module_basis(tag, L)
    fails = []
    Lf = Fraction(L)
    for st in basis:
        if not _parity_ok(mod.tag, st):
            fails.append(("parity", st))
    bmodes = [m for m in range(-int(Lf), int(Lf) + 1) if m]
    for st in basis:
        v = {st: ONE}
        for m in bmodes:
            am_v = boson_act(m, v)
            for n in bmodes:
                lhs = vec_add(boson_act(m, boson_act(n, v)), vec_scale(-1, boson_act(n, am_v)))
                want = vec_scale(q_int(2 * m) ** 2 / m, v) if m + n == 0 else {}
                if vec_add(lhs, vec_scale(-1, want)):
                    fails.append(("boson commutator", (st, m, n)))
    # NS modes are half-integers, R modes integers (zero mode included)
    parity = 1 if mod.sector == "NS" else 0
    fmodes = [Fraction(k, 2) for k in range(-int(2 * Lf), int(2 * Lf) + 1) if k % 2 == parity]
    for st in basis:
        v = {st: ONE}
        for a in fmodes:
            for b in fmodes:
                lhs = vec_add(fermion_act(a, fermion_act(b, v)), fermion_act(b, fermion_act(a, v)))
                want = vec_scale(eta(a), v) if a + b == 0 else {}
                if vec_add(lhs, vec_scale(-1, want)):
                    fails.append(("fermion anticommutator", (st, a, b)))
                # bilinears preserve the module
                for st2 in fermion_act(a, fermion_act(b, v)):
                    if module_of(st2) != mod.tag or not _parity_ok(mod.tag, st2):
                        fails.append(("parity closure", (st, a, b)))
    for st in basis:
        g = grade(st)
        for m in range(1, int(Lf) + 1):
            for st2 in boson_act(-m, {st: ONE}):
                if grade(st2) != g - m:
                    fails.append(("grade", (st, "a", -m)))
        # single fermions change the module, so creators are checked in pairs
        pos = [a for a in fmodes if a > 0]
        for i, a in enumerate(pos):
            for b in pos[i + 1:]:
                for st2 in fermion_act(-a, fermion_act(-b, {st: ONE})):
                    if grade(st2) != g - a - b:
                        fails.append(("grade", (st, "phi phi", -a, -b)))
    if _enumerated_dimensions(tag, L) != character_dimensions(tag, L):
        fails.append(("dimensions", (_enumerated_dimensions(tag, L), character_dimensions(tag, L))))
    if details:
        return not fails, fails
    return not fails
