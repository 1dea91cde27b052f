"""Where does a negative transmission come from?

Three small tables with known structure, built in exact-counts mode so the
numbers are exact rather than sampled.
"""

from thsynergy.entropy import entropy_terms, transmission2, transmission3
from thsynergy.synthgen import (
    DiagonalCoupled, Independent, ParityCoupled, SynthSpec, exact_counts_mode,
)

cube = dict(cardinalities=(2, 2, 2), mode="exact", n_records=0)

for name, structure in [("independent", Independent()),
                        ("parity (z = x xor y)", ParityCoupled()),
                        ("all three equal", DiagonalCoupled())]:
    t = exact_counts_mode(SynthSpec(structure=structure, **cube))
    h = entropy_terms(t)
    print(f"{name:22s} cells={t.cells}")
    print(f"{'':22s} H = {', '.join(f'{v:.0f}' for v in h)} mbits")
    print(f"{'':22s} T_xy = {transmission2(t, (0, 1)):.1f}   T_xyz = {transmission3(t):.1f}")
    print()

# In the parity table every pair of dimensions is independent (T_xy = 0),
# yet knowing two of them fixes the third.  That reduction of uncertainty
# that exists only in the three-way relation is what the negative sign marks.
