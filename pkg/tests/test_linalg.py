import os
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings, strategies as st

from tautrr.linalg import (
    CheckpointError, Echelon, SparseMatrix, dense_rref, membership, rref, rref_modular,
    solve_for,
)
from tautrr.strata import StrataVector

small = st.fractions(min_value=-4, max_value=4, max_denominator=3)


@st.composite
def matrices(draw, max_rows=7, max_cols=7):
    nr = draw(st.integers(1, max_rows))
    nc = draw(st.integers(1, max_cols))
    # sparse-ish entries with repeated rows now and then
    rows = [draw(st.lists(st.one_of(st.just(Fraction(0)), small), min_size=nc, max_size=nc))
            for _ in range(nr)]
    if nr > 1 and draw(st.booleans()):
        rows.append([2 * x - y for x, y in zip(rows[0], rows[1])])
    return rows


def _sympy_rref(dense):
    m, piv = sympy.Matrix(dense).rref()
    rows = [[Fraction(int(sympy.fraction(x)[0]), int(sympy.fraction(x)[1])) for x in m.row(i)]
            for i in range(len(piv))]
    return rows, list(piv)


@given(matrices())
@settings(max_examples=80, deadline=None)
def test_rref_matches_sympy(dense):
    want_rows, want_piv = _sympy_rref(dense)
    res = rref(SparseMatrix.from_dense(dense))
    assert res.pivots == want_piv
    assert res.to_dense() == want_rows
    rows, piv = dense_rref(dense)
    assert piv == want_piv and rows == want_rows


@given(matrices())
@settings(max_examples=60, deadline=None)
def test_rref_idempotent(dense):
    res = rref(SparseMatrix.from_dense(dense))
    again = rref(SparseMatrix(res.ncols, res.rows))
    assert again.pivots == res.pivots and again.rows == res.rows


@given(matrices(max_rows=12, max_cols=9), st.integers(2, 6))
@settings(max_examples=40, deadline=None)
def test_thread_count_does_not_change_result(dense, threads):
    m = SparseMatrix.from_dense(dense)
    a, b = rref(m, threads=1), rref(m, threads=threads)
    assert a.pivots == b.pivots and a.rows == b.rows


@given(matrices(max_rows=10, max_cols=8))
@settings(max_examples=60, deadline=None)
def test_modular_equals_exact(dense):
    m = SparseMatrix.from_dense(dense)
    a = rref(m)
    b = rref_modular(m.rows, m.ncols, check_prime=1000003)
    assert a.pivots == b.pivots and a.rows == b.rows


def test_modular_prefilter_unlucky_prime():
    # rows that agree mod 7 but not over Q
    rows = [{0: Fraction(1), 1: Fraction(1)}, {0: Fraction(1), 1: Fraction(8)}]
    res = rref_modular(rows, 2, p=7)
    assert res.rank == 1
    with pytest.raises(ArithmeticError):
        rref_modular(rows, 2, p=7, check_prime=1000003)


def test_reduce_and_membership():
    res = rref(SparseMatrix.from_dense([[1, 1, 0], [0, 1, 1]]))
    assert res.reduce({0: 1, 1: 2, 2: 1}) == {}
    assert res.reduce({2: 1}) != {}
    idx = {"a": 0, "b": 1, "c": 2}
    v = StrataVector(0, 3, {"a": 1, "c": -1})
    assert membership(v, res, idx)


def test_solve_for():
    # on M_{1,1}: psi = delta / 24 once kappa_1 is eliminated
    from tautrr.pixton import pixton_relation, valid_inputs
    from tautrr.strata import canonicalize
    psi = canonicalize((1,), [()], [(0, 1)], [])
    delta = canonicalize((0,), [()], [(0, 0)], [(0, 0, 0, 0)])
    rels = [pixton_relation(i) for i in valid_inputs(1, 1, 1)]
    assert solve_for(psi, rels, allowed=[delta]) == StrataVector(1, 1, {delta: Fraction(1, 24)})
    assert solve_for(psi, rels[:1], allowed=[delta]) is None


def test_checkpoint_roundtrip(tmp_path):
    dense = [[1, 2, 3, 0], [0, 0, 1, 5], [2, 4, 7, 5]]
    ech = Echelon(4)
    ech.absorb_many(SparseMatrix.from_dense(dense).rows)
    p = tmp_path / "ckpt.json"
    ech.save(str(p), 3, meta={"job": "x"})
    back, nxt = Echelon.load(str(p), expect_meta={"job": "x"})
    assert nxt == 3
    assert back.result() == ech.result()
    with pytest.raises(CheckpointError):
        Echelon.load(str(p), expect_meta={"job": "y"})


def test_checkpoint_corruption_detected(tmp_path):
    ech = Echelon(3)
    ech.absorb_many(SparseMatrix.from_dense([[1, 1, 0], [0, 1, 1]]).rows)
    p = tmp_path / "ckpt.json"
    ech.save(str(p), 2)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(CheckpointError):
        Echelon.load(str(p))
    p.write_text("not json\n")
    with pytest.raises(CheckpointError):
        Echelon.load(str(p))
    assert not [f for f in os.listdir(tmp_path) if f.startswith(".ckpt-")]
