"""Walk through the three level-two modules as truncated Fock spaces.

Run with ``python demos/01_level_two_modules.py``.
"""

from fractions import Fraction

from qvertex.fock import (
    MODULES,
    boson_act,
    character_dimensions,
    energy,
    fermion_act,
    hw_state,
    module_basis,
    verify_module,
)
from qvertex.scalars import ONE


def show(v):
    return " + ".join(f"({c}) {st}" for st, c in v.items()) or "0"


print("Basis sizes per energy, from enumeration and from the character:")
for tag, mod in MODULES.items():
    counts = [0] * 5
    for st in module_basis(tag, 4):
        counts[int(energy(st))] += 1
    print(f"  {mod.label:22s} enumerated {counts}  character {character_dimensions(tag, 4)[::2]}")

# V(2L1) has a three-dimensional top: e^alpha, e^-alpha and phi_{-1/2} |NS>
print("\nTop of V(2Lambda_1):", module_basis("2L1", 0))

vac = {hw_state("2L0"): ONE}
print("\nBosons: a_1 a_-1 |vac> =", show(boson_act(1, boson_act(-1, vac))))

half = Fraction(1, 2)
print("NS fermions: phi_1/2 phi_-1/2 |NS> =", show(fermion_act(half, fermion_act(-half, vac))))

r = {hw_state("L0L1"): ONE}
one = fermion_act(-1, r)
print("R zero mode: phi_0 |R> =", show(fermion_act(0, r)))
print("             phi_0 phi_-1 |R> =", show(fermion_act(0, one)))

print("\nFull module checks at energy 4:")
for tag in MODULES:
    print(f"  {tag}: {'ok' if verify_module(tag, 4) else 'FAILED'}")
