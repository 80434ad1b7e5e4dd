"""The genus-2 identity for T^4, checked twice: in the strata algebra and with the rewriter."""
import os
from fractions import Fraction

from tautrr.linalg import membership, rref_modular, vectors_to_rows
from tautrr.pixton import iter_relation_rows
from tautrr.strata import basis_index, basis_keys
from tautrr.gwcalc import (
    DATA_DIR, CorrelatorExpr, default_rules, normal_form, psi_power_identity,
    read_expression_file, verify_identity,
)

lhs, rhs = psi_power_identity(2, 0)
print(lhs.to_text(), "=", rhs.to_text())

# strata side: the difference lies in the span of the relations on (2,1) at codimension 4
keys, index = basis_keys(2, 1, 4), basis_index(2, 1, 4)
res = rref_modular(vectors_to_rows(iter_relation_rows(2, 1, 4), index), len(keys))
print("rank", res.rank, "of", len(keys))
print("in the row space:", membership(lhs.to_strata(2) - rhs.to_strata(2), res, index))

# rewriter side: both sides reduce to the same genus-0 expression
sec = read_expression_file(os.path.join(DATA_DIR, "g2_identity.txt"))
normal = CorrelatorExpr.parse(sec["normal"])
print("lhs ->", normal_form(lhs, prefer=normal).to_text())
print("rhs ->", normal_form(rhs, prefer=normal).to_text())
print("verified:", verify_identity(lhs, rhs)[0])

# scaling the genus-1 rule by 24/23 breaks it
bad = default_rules().perturbed(1, Fraction(24, 23))
ok, residual = verify_identity(lhs, rhs, rules=bad)
print("with a wrong genus-1 rule:", ok, residual.to_text())
