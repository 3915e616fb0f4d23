import json
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import cnf_formulas
from proofdoors.chunking import (ChunkError, ChunkSpec, build_chunked, clause_chunk, var_chunk_map)
from proofdoors.cnf import CnfFormula

# x0..x2 are variables 1..3
CHAIN = CnfFormula.from_clauses([(1,), (-1, 2), (-2, 3), (-3,)])
CHAIN_SPEC = ChunkSpec.from_ranges([(0, 2), (2, 3), (3, 4)])


def test_chain_decomposition():
    cf = build_chunked(CHAIN, CHAIN_SPEC)
    assert cf.k == 3
    assert cf.chunks == (((1,), (-1, 2)), ((-2, 3),), ((-3,),))
    assert cf.cut_vars == (frozenset({2}), frozenset({3}))
    assert cf.local_vars == (frozenset({1}), frozenset({2}), frozenset({3}))


def test_chain_var_chunk_map():
    assert var_chunk_map(build_chunked(CHAIN, CHAIN_SPEC)) == {1: 0, 2: 1, 3: 2}


def test_var_in_every_chunk_maps_to_last():
    f = CnfFormula.from_clauses([(1, 2), (1, 3), (1, -2)])
    cf = build_chunked(f, ChunkSpec.from_ranges([(0, 1), (1, 2), (2, 3)]))
    m = var_chunk_map(cf)
    assert m[1] == 2 and m[3] == 1


def test_two_chunk_cut_is_intersection():
    f = CnfFormula.from_clauses([(1, 2), (2, 3), (-3, 4), (-4, 1)])
    cf = build_chunked(f, ChunkSpec.from_ranges([(0, 2), (2, 4)]))
    assert cf.cut_vars[0] == {1, 2, 3} & {1, 3, 4}


@pytest.mark.parametrize("ranges, msg", [
    ([(0, 2), (1, 3)], "overlapping"),
    ([(0, 1), (2, 4)], "not covered"),
    ([(0, 2), (2, 3)], "cover"),
    ([(0, 4)], "at least 2"),
    ([(0, 2), (2, 2), (2, 4)], "no clauses"),
])
def test_bad_ranges(ranges, msg):
    with pytest.raises(ChunkError, match=msg):
        build_chunked(CHAIN, ChunkSpec.from_ranges(ranges))


def test_variable_map_mode_assigns_clauses_by_latest_variable():
    spec = ChunkSpec.from_var_map({1: 0, 2: 1, 3: 2})
    cf = build_chunked(CHAIN, spec)
    assert cf.chunks == (((1,),), ((-1, 2),), ((-2, 3), (-3,)))


def test_variable_map_must_cover_all_variables():
    with pytest.raises(ChunkError, match="not covered"):
        build_chunked(CHAIN, ChunkSpec.from_var_map({1: 0, 2: 1}))


def test_clause_chunk_rule():
    assert clause_chunk((5, 7), {5: 0, 7: 2}) == 2
    assert clause_chunk((-5,), {5: 1}) == 1
    assert clause_chunk((), {}) == 0
    with pytest.raises(ChunkError):
        clause_chunk((9,), {1: 0})


@given(st.dictionaries(st.integers(1, 10), st.integers(0, 5), min_size=1),
       st.lists(st.integers(1, 10), max_size=5), st.integers(1, 10))
def test_clause_chunk_monotone_under_extension(m, clause, extra):
    clause = [v for v in clause if v in m]
    if extra not in m:
        return
    assert clause_chunk(clause + [extra], m) >= clause_chunk(clause, m)


def test_json_round_trip(tmp_path):
    spec = ChunkSpec.from_json('{"mode":"clause-ranges","ranges":[[0,2],[2,3],[3,4]]}')
    assert spec == CHAIN_SPEC
    vm = ChunkSpec.from_json({"mode": "variable-map", "vars": {"1": 0, "2": 1}})
    assert vm.var_to_chunk == {1: 0, 2: 1}
    path = tmp_path / "m.json"
    labelled = ChunkSpec.from_ranges([(0, 2), (2, 4)], ["Initial", "T_1"])
    labelled.dump(path)
    assert ChunkSpec.load(path) == labelled
    assert json.loads(path.read_text())["labels"] == ["Initial", "T_1"]


def test_json_rejects_unknown_mode():
    with pytest.raises(ChunkError):
        ChunkSpec.from_json({"mode": "by-magic"})


def _random_split(rng, n):
    cuts = sorted(rng.sample(range(1, n), rng.randint(1, min(4, n - 1))))
    bounds = [0] + cuts + [n]
    return list(zip(bounds, bounds[1:]))


@settings(max_examples=150, deadline=None)
@given(cnf_formulas(max_vars=8, max_clauses=12, min_clauses=2), st.randoms(use_true_random=False))
def test_reconstruction_and_cut_consistency(f, rnd):
    ranges = _random_split(rnd, len(f.clauses))
    cf = build_chunked(f, ChunkSpec.from_ranges(ranges))
    assert Counter(c for ch in cf.chunks for c in ch) == Counter(f.clauses)
    # brute-force occurrence scan
    occ = [{abs(l) for c in ch for l in c} for ch in cf.chunks]
    for j in range(cf.k - 1):
        before = set().union(*occ[: j + 1])
        after = set().union(*occ[j + 1:])
        assert cf.cut_vars[j] == before & after
    for i in range(cf.k):
        later = set().union(*occ[i + 1:]) if i + 1 < cf.k else set()
        assert cf.local_vars[i] == occ[i] - later
        if i < cf.k - 1:
            assert not (cf.local_vars[i] & cf.cut_vars[i])


def test_prefix_and_suffix_partition():
    rng = random.Random(7)
    f = CnfFormula.from_clauses([(rng.choice((1, -1)) * rng.randint(1, 5),) for _ in range(9)], 5)
    cf = build_chunked(f, ChunkSpec.from_ranges([(0, 3), (3, 6), (6, 9)]))
    for i in range(1, cf.k):
        assert cf.prefix(i - 1).clauses + cf.suffix(i).clauses == f.clauses
