import pytest

from tautrr.linalg import rref_modular, vectors_to_rows
from tautrr.pixton import PixtonInput, is_valid_input, pixton_relation, relation_set, valid_inputs
from tautrr.strata import basis_index, basis_keys, canonicalize
from oracles import integrate

KAPPA1 = canonicalize((1,), [(1,)], [(0, 0)], [])
PSI1 = canonicalize((1,), [()], [(0, 1)], [])
DELTA = canonicalize((0,), [()], [(0, 0)], [(0, 0, 0, 0)])


def test_hand_relations_on_m11():
    rels = {(i.sigma, i.a): pixton_relation(i).coeffs for i in valid_inputs(1, 1, 1)}
    assert rels == {
        ((1,), (0,)): {KAPPA1: 204, PSI1: -60, DELTA: -6},
        ((), (1,)): {KAPPA1: 60, PSI1: 84, DELTA: -6},
    }


def test_input_validation():
    assert is_valid_input(1, 1, 1, (1,), (0,))
    assert not is_valid_input(1, 1, 1, (2,), (0,))      # 2 mod 3
    assert not is_valid_input(1, 1, 1, (), (0,))        # wrong parity
    assert not is_valid_input(1, 1, 1, (4,), (0,))      # too large
    with pytest.raises(ValueError):
        PixtonInput(1, 1, 1, (), (0, 0)).validate()


# top degree relations are numbers, and a relation must be the number 0
@pytest.mark.parametrize("g,n", [(1, 1), (1, 2), (2, 0), (1, 3), (0, 5)])
def test_top_degree_relations_integrate_to_zero(g, n):
    r = 3 * g - 3 + n
    for inp in valid_inputs(g, n, r):
        assert integrate(pixton_relation(inp)) == 0


# dimensions of the tautological rings, known independently
KNOWN = [
    ((1, 1, 1), 1), ((1, 2, 1), 2), ((1, 2, 2), 1), ((0, 5, 1), 5), ((0, 5, 2), 1),
    ((2, 0, 1), 2), ((2, 0, 2), 2), ((2, 1, 1), 3), ((2, 1, 2), 5), ((2, 1, 3), 3),
    ((1, 3, 2), 5),
]


@pytest.mark.parametrize("gnr,dim", KNOWN)
def test_quotient_dimensions(gnr, dim):
    g, n, r = gnr
    keys = basis_keys(g, n, r)
    res = rref_modular(vectors_to_rows(relation_set(g, n, r), basis_index(g, n, r)), len(keys))
    assert len(keys) - res.rank == dim


def test_kappa_hat_variants_give_same_relations():
    for inp in valid_inputs(2, 1, 2):
        assert pixton_relation(inp, "printed") == pixton_relation(inp, "per-vertex")
