"""
Sign audit of Lagrange basis integrals on the reference simplex
===============================================================

Whether coefficient-wise non-negativity of a discontinuous Lagrange control
survives mesh refinement comes down to one exactly decidable question: does
every basis function of degree k have a non-negative integral over the
reference simplex?

This script audits every supported (dimension, degree) pair in exact rational
arithmetic and prints the verdicts.  Note the surprises: in 1D the first
failure is degree 8 (the classic sign flip of closed Newton-Cotes weights),
in 2D it is degree 4, and in 3D already the quadratic element fails.
"""

from fractions import Fraction

from ctrldisc import audit_degrees

RANGES = {1: 11, 2: 8, 3: 6}

for dim, k_max in RANGES.items():
    report = audit_degrees(dim, k_max)
    print(f"\ndimension {dim} (degrees 1..{k_max})")
    print(f"  non-negative for k in {report.nonnegative_degrees()}")
    for record in report.records:
        verdict = "ok " if record.all_nonnegative else "NEG"
        worst = min(record.integrals)
        print(
            f"  k={record.degree:2d} [{verdict}] "
            f"min integral = {worst!s:>8}   "
            f"negative indices: {list(record.negative_indices)}"
        )

# The quadratic tetrahedron in detail: every vertex function integrates to
# exactly -1/120 while the edge functions carry 1/30 each.
print("\nquadratic tetrahedron integrals:")
from ctrldisc import basis_integrals, lagrange_basis

spec = lagrange_basis(3, 2)
for node, value in zip(spec.nodes, basis_integrals(spec)):
    kind = "vertex" if all(x in (0, 1) for x in node) else "edge  "
    print(f"  {kind} node {tuple(str(x) for x in node)}: {value}")
assert sum(basis_integrals(spec), Fraction(0)) == Fraction(1, 6)  # = 1/3!
