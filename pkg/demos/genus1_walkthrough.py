"""From stable graphs to the genus-1 recursion, one step at a time."""
from fractions import Fraction

from tautrr.graphs import automorphism_count, enumerate_stable_graphs
from tautrr.linalg import kappa_free_relations, rref, SparseMatrix, solve_for, vectors_to_rows
from tautrr.pixton import relation_set, valid_inputs, pixton_relation
from tautrr.strata import basis_index, basis_keys, key_code, psi_power
from tautrr.gwcalc import translate

# the two stable graphs of genus 1 with one leg: smooth, and a nodal rational curve
for gr in enumerate_stable_graphs(1, 1):
    print(gr, "aut =", automorphism_count(gr))

# codimension-1 strata: kappa_1, psi_1 and the boundary point
keys = basis_keys(1, 1, 1)
for k in keys:
    print(key_code(k), k)

# the relations at this codimension
for inp in valid_inputs(1, 1, 1):
    print(inp.sigma, inp.a, dict(pixton_relation(inp).coeffs))

# eliminate kappa and write psi_1 in boundary terms
rows = relation_set(1, 1, 1)
res = rref(SparseMatrix(len(keys), vectors_to_rows(rows, basis_index(1, 1, 1))))
print("rank", res.rank, "of", len(keys))
kf = kappa_free_relations(res, keys)
rhs = solve_for(psi_power(1, 1, [1]), kf)
print("psi_1 =", dict(rhs.coeffs))

# in correlator language psi becomes T and the node becomes a contracted pair
expr = translate(rhs)
print("<<T(W)>>_1 =", expr.to_text())
assert list(expr.coeffs.values()) == [Fraction(1, 24)]
