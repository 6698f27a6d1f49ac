"""Spin-1 type II components and the top component Psi_2.

Psi_0 and Psi_1 are built from closed forms.  Psi_2 can be taken either from
its closed form or by raising Psi_1 with x^+_0; this script shows where the two
disagree and that the raised operator satisfies the defining conditions.
"""

from qvertex.vertex import verify_intertwining_spin1

for r in verify_intertwining_spin1(L=1, Z=1):
    status = "ok" if r.ok else f"FAILED on {len(r.failures)} entries"
    print(f"{r.name:50s} {r.source:5s} {status}")
    if not r.ok:
        for e, st, lhs, rhs in r.failures[:2]:
            print(f"    z^{e} {st}: {lhs} vs {rhs}")
