import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cnf_formulas
from proofdoors.absorption import (AbsorptionMatrix, absorbs_formula, absorption_fraction, heatmap,
                                   incrementality_score, is_absorbed, partition_trace)
from proofdoors.chunking import ChunkError, var_chunk_map
from proofdoors.cnf import CnfFormula
from proofdoors.door import strongest_proofdoor
from proofdoors.solver import DratTrace, solve
from proofdoors.synthetic import chunked, gadget_chain, simple_chain

F = CnfFormula.from_clauses
X, Y = 1, 2


def test_is_absorbed_examples():
    assert is_absorbed(F([(X,)], 2), (X, Y))
    # f entails x but no unit propagation fires
    assert not is_absorbed(F([(X, Y), (X, -Y)]), (X,))
    f = F([(X, -Y), (Y, 3)])
    for c in f.clauses:
        assert is_absorbed(f, c)


def test_empty_clause_absorption():
    assert is_absorbed(F([(X,), (-X,)]), ())
    assert not is_absorbed(F([(X, Y)]), ())


def test_absorption_fraction_examples():
    f = F([(X,), (-X, Y)])
    assert absorption_fraction(f, F([(X,), (-X, Y)])) == 1.0
    assert absorption_fraction(F([], 1), F([(X,)])) == 0.0
    assert absorption_fraction(F([(X,)], 2), F([(X,), (Y,)])) == 0.5
    assert absorption_fraction(f, F([], 2)) == 1.0


@st.composite
def formula_and_clause(draw):
    f = draw(cnf_formulas(max_vars=6, max_clauses=10))
    n = f.num_vars
    lit = st.integers(1, n).flatmap(lambda v: st.sampled_from((v, -v)))
    c = tuple(draw(st.lists(lit, max_size=4, unique_by=abs)))
    return f, c


@settings(max_examples=300, deadline=None)
@given(formula_and_clause(), st.lists(st.lists(st.integers(-6, 6).filter(bool), min_size=1, max_size=3),
                                      max_size=4))
def test_absorption_monotone_in_formula(case, extra):
    f, c = case
    extra = [tuple(e) for e in extra if all(abs(l) <= f.num_vars for l in e)]
    if is_absorbed(f, c):
        assert is_absorbed(F(list(f.clauses) + extra, f.num_vars), c)


@settings(max_examples=300, deadline=None)
@given(formula_and_clause(), st.data())
def test_subsumption_preserves_absorption(case, data):
    f, p = case
    if not is_absorbed(f, p):
        return
    n = f.num_vars
    free = [v for v in range(1, n + 1) if v not in {abs(l) for l in p}]
    more = data.draw(st.lists(st.sampled_from(free), unique=True)) if free else []
    c = tuple(p) + tuple(v if data.draw(st.booleans()) else -v for v in more)
    assert is_absorbed(f, c)


def test_absorbs_formula():
    f = F([(X,), (-X, Y)])
    assert absorbs_formula(f, F([(Y,), (X, 3)], 3))
    assert not absorbs_formula(F([(X, Y)]), F([(X,)]))


# -- partitioning

def test_partition_direct_rule():
    base = F([(3, 4)], 4)
    pp = partition_trace(DratTrace([(1,), (2,)]), {1: 1, 2: 2, 3: 0, 4: 0}, 3, base)
    assert pp.prefix(0).clauses == base.clauses
    assert pp.prefix(1).clauses == base.clauses + ((1,),)
    assert pp.prefix(2).clauses == base.clauses + ((1,), (2,))


def test_partition_empty_clause_conventions():
    t = DratTrace([(1,), ()])
    m = {1: 1}
    first = partition_trace(t, m, 3, empty_clause="first")
    assert all(() in p.clauses for p in first.prefixes)
    last = partition_trace(t, m, 3)
    assert [() in p.clauses for p in last.prefixes] == [False, False, True]


def test_partition_empty_trace():
    base = F([(1, 2)])
    pp = partition_trace(DratTrace([]), {1: 0, 2: 1}, 2, base)
    assert all(p.clauses == base.clauses for p in pp.prefixes)


def test_partition_unknown_variable():
    with pytest.raises(ChunkError, match="addition 0"):
        partition_trace(DratTrace([(7,)]), {1: 0}, 2)


def test_partition_prefixes_nest():
    cf = chunked(gadget_chain(6))
    r = solve(cf.base)
    pp = partition_trace(r.trace, var_chunk_map(cf), cf.k, cf.base)
    for i in range(cf.k - 1):
        assert set(pp.prefix(i).clauses) <= set(pp.prefix(i + 1).clauses)
    for c, ch in zip(pp.additions, pp.chunk_of):
        for i in range(cf.k):
            assert (c in pp.added_upto(i)) == (i >= ch)


# -- heatmap

def _chain_heatmap(k, jobs=1, empty_clause="last"):
    cf = chunked(gadget_chain(k))
    pd = strongest_proofdoor(cf)
    r = solve(cf.base)
    pp = partition_trace(r.trace, var_chunk_map(cf), cf.k, cf.base, empty_clause)
    return heatmap(pp, pd, jobs=jobs)


def test_chain_heatmap_is_staircase():
    h = _chain_heatmap(5)
    assert h.shape == (5, 4)
    expected = np.array([[1.0 if i >= j else 0.0 for j in range(4)] for i in range(5)])
    assert np.array_equal(h.h, expected)
    assert incrementality_score(h) == 1.0
    assert h.first_full_rows() == [0, 1, 2, 3]


def test_heatmap_parallel_matches_serial():
    assert np.array_equal(_chain_heatmap(6).h, _chain_heatmap(6, jobs=2).h)


def test_heatmap_all_ones_when_base_absorbs():
    cf = chunked(simple_chain(4))
    pd = strongest_proofdoor(cf)
    pp = partition_trace(DratTrace([]), var_chunk_map(cf), cf.k, cf.base)
    assert np.all(heatmap(pp, pd).h == 1.0)


def test_heatmap_empty_interpolants():
    pp = partition_trace(DratTrace([]), {1: 0}, 3, F([(1, 2)]))
    assert np.all(heatmap(pp, [F([], 2), F([], 2)]).h == 1.0)


def test_heatmap_dimension_mismatch():
    pp = partition_trace(DratTrace([]), {1: 0}, 3, F([(1,)]))
    with pytest.raises(ValueError):
        heatmap(pp, [F([], 1)])


def test_heatmap_columns_nondecreasing_random():
    rng = random.Random(8)
    for _ in range(30):
        n = 8
        clauses = [tuple(rng.choice((v, -v)) for v in rng.sample(range(1, n + 1), 3)) for _ in range(40)]
        f = F(clauses, n)
        r = solve(f)
        if not r.unsat:
            continue
        m = {v: (v - 1) * 3 // n for v in range(1, n + 1)}
        pp = partition_trace(r.trace, m, 3, f)
        itps = [F([tuple(rng.choice((v, -v)) for v in rng.sample(range(1, n + 1), 2))], n) for _ in range(2)]
        h = heatmap(pp, itps).h
        assert np.all(np.diff(h, axis=0) >= 0)
        assert np.all((0 <= h) & (h <= 1))


def test_incrementality_score_examples():
    assert incrementality_score(np.ones((3, 2))) == 1.0
    assert incrementality_score(np.zeros((3, 2))) == 0.0
    assert incrementality_score([[1, 0], [1, 1]]) == 1.0


def test_outputs():
    h = AbsorptionMatrix(np.array([[1.0, 0.0], [1.0, 0.5], [1.0, 1.0]]))
    assert h.to_csv() == "row,I_1,I_2\nPi_0,1,0\nPi_1,1,0.5\nPi_2,1,1\n"
    svg = h.to_svg()
    assert svg.startswith("<svg") and svg.count("<rect") == 1 + 6
    assert "rgb(0,0,0)" in svg and "rgb(255,255,255)" in svg and "rgb(128,128,128)" in svg
    s = h.summary()
    assert s["first_full_absorption_row"] == [0, 2]
    assert s["incrementality_score"] == pytest.approx((1 + 1 + 0.5 + 1 + 1) / 5)
