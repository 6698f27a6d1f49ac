"""Type I vertex operator components and their normalization.

Phi_0 has a closed form as a contour integral and a second construction as
the q-commutator of Phi_1 with x^-_0.  Both are computed and compared, then the
highest weight matrix elements of all normalized operators are audited.
"""

from fractions import Fraction

from qvertex.fock import hw_state
from qvertex.scalars import ONE
from qvertex.vertex import compare_phi0_routes, normalization_audit, phi0_from_phi1, phi0_typeI

v = {hw_state("L0L1"): ONE}
closed = phi0_typeI(v, 1)
raised = phi0_from_phi1(v, 1)
print("Phi_0 on the highest weight vector of V(Lambda_0+Lambda_1):")
for e in sorted(closed):
    for st, c in closed[e].items():
        print(f"  z^{e}  {st}: {c}")
print("Commutator route agrees:", closed == raised)

print("\nBoth routes on every source state up to energy 2:")
for r in compare_phi0_routes(L=2, Z=2):
    print(f"  {r.source}: {'ok' if r.ok else 'FAILED'} ({r.checked} states)")

print("\nNormalized highest weight elements:")
for entry in normalization_audit():
    value = entry.get("normalized")
    flag = "1" if entry["ok"] else f"{value}  (prefactor needed: {entry.get('required_prefactor')})"
    print(f"  {entry['element']:24s} {flag}")
