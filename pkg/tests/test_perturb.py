import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_sat, cnf_formulas, random_cnf
from proofdoors.chunking import ChunkSpec, build_chunked
from proofdoors.cnf import CnfFormula
from proofdoors.perturb import (BY_CLAUSE, BY_ITERATION, ScrambleError, ScrambleRecord, SplitMix64, permutation,
                                scramble_by_clause, scramble_by_iteration, scrambled_chunk_spec, unscramble)
from proofdoors.synthetic import chunked, gadget_chain

F = CnfFormula.from_clauses


def test_splitmix_reference_stream():
    # published first outputs of SplitMix64 seeded with 0
    g = SplitMix64(0)
    assert [g.next() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_below_is_in_range():
    g = SplitMix64(7)
    assert all(0 <= g.below(n) < n for n in range(1, 200))


def test_permutation_is_bijection_and_deterministic():
    for n in (0, 1, 2, 17):
        p = permutation(n, 99)
        assert sorted(p) == list(range(n))
        assert p == permutation(n, 99)


def _identity_seed(n):
    return next(s for s in range(10_000) if permutation(n, s) == list(range(n)))


def _cf(k=4):
    f = F([(1, 2), (-1,), (2, 3), (-3,), (4, -2), (-4,)], 4)
    ranges = {2: [(0, 3), (3, 6)], 3: [(0, 2), (2, 4), (4, 6)], 4: [(0, 1), (1, 2), (2, 4), (4, 6)]}[k]
    return build_chunked(f, ChunkSpec.from_ranges(ranges))


def test_by_iteration_identity_seed():
    cf = _cf(3)
    seed = _identity_seed(3)
    out, rec = scramble_by_iteration(cf, seed)
    assert out.clauses == cf.base.clauses
    assert rec.permutation == (0, 1, 2)


def test_by_iteration_two_chunk_swap():
    cf = _cf(2)
    out, rec = scramble_by_iteration(cf, 0, perm=[1, 0])
    assert out.clauses == cf.chunks[1] + cf.chunks[0]
    assert unscramble(out, rec).clauses == cf.base.clauses


def test_by_clause_identity_and_single_clause():
    f = F([(1, 2), (-1,), (3,)])
    out, _ = scramble_by_clause(f, _identity_seed(3))
    assert out.clauses == f.clauses
    one = F([(3, -1, 2)])
    for seed in range(20):
        assert scramble_by_clause(one, seed)[0].clauses == one.clauses


def test_literal_order_untouched():
    f = F([(3, -1, 2), (2, 1), (-2, -3)])
    out, _ = scramble_by_clause(f, 5)
    assert set(out.clauses) == set(f.clauses)


def test_identity_record_unscramble():
    f = F([(1,), (2,), (3,)])
    rec = ScrambleRecord(BY_CLAUSE, 0, (0, 1, 2))
    assert unscramble(f, rec).clauses == f.clauses


def test_wrong_domain_size():
    f = F([(1,), (2,), (3,)])
    with pytest.raises(ScrambleError):
        unscramble(f, ScrambleRecord(BY_CLAUSE, 0, (1, 0)))
    with pytest.raises(ScrambleError):
        scramble_by_clause(f, 0, perm=[0, 1])
    with pytest.raises(ScrambleError):
        ScrambleRecord(BY_CLAUSE, 0, (0, 0, 1))
    with pytest.raises(ScrambleError):
        ScrambleRecord("sideways", 0, (0,))


def test_record_json_round_trip(tmp_path):
    cf = chunked(gadget_chain(5))
    _, rec = scramble_by_iteration(cf, 42)
    assert rec.kind == BY_ITERATION and len(rec.block_sizes) == cf.k
    rec.dump(tmp_path / "r.json")
    assert ScrambleRecord.load(tmp_path / "r.json") == rec
    _, rec = scramble_by_clause(cf.base, 42)
    assert "block_sizes" not in rec.to_json()
    assert ScrambleRecord.from_json(rec.to_json()) == rec
    with pytest.raises(ScrambleError):
        ScrambleRecord.from_json({"kind": BY_CLAUSE})


def test_scrambled_chunk_spec_follows_chunks():
    cf = chunked(gadget_chain(5))
    out, rec = scramble_by_iteration(cf, 3)
    spec = scrambled_chunk_spec(cf, rec)
    moved = build_chunked(out, spec)
    assert moved.chunks == tuple(cf.chunks[i] for i in rec.permutation)
    with pytest.raises(ScrambleError):
        scrambled_chunk_spec(cf, scramble_by_clause(cf.base, 3)[1])


@settings(max_examples=200, deadline=None)
@given(cnf_formulas(max_vars=6, max_clauses=12), st.integers(0, 2 ** 64 - 1))
def test_by_clause_multiset_determinism_round_trip(f, seed):
    out, rec = scramble_by_clause(f, seed)
    assert Counter(out.clauses) == Counter(f.clauses)
    assert scramble_by_clause(f, seed)[0].clauses == out.clauses
    assert unscramble(out, rec).clauses == f.clauses


@st.composite
def chunked_formulas(draw):
    f = draw(cnf_formulas(max_vars=6, max_clauses=12, min_clauses=2))
    m = len(f.clauses)
    cuts = sorted(draw(st.sets(st.integers(1, m - 1), min_size=1, max_size=m - 1)))
    bounds = [0] + cuts + [m]
    return build_chunked(f, ChunkSpec.from_ranges(list(zip(bounds, bounds[1:]))))


@settings(max_examples=200, deadline=None)
@given(chunked_formulas(), st.integers(0, 2 ** 64 - 1))
def test_by_iteration_multiset_determinism_round_trip(cf, seed):
    out, rec = scramble_by_iteration(cf, seed)
    assert Counter(out.clauses) == Counter(cf.base.clauses)
    assert scramble_by_iteration(cf, seed)[0].clauses == out.clauses
    assert unscramble(out, rec).clauses == cf.base.clauses
    # each chunk appears contiguously with its internal order intact
    pos = 0
    for i in rec.permutation:
        assert out.clauses[pos:pos + len(cf.chunks[i])] == cf.chunks[i]
        pos += len(cf.chunks[i])


def test_satisfiability_preserved():
    rng = random.Random(3)
    for _ in range(40):
        f = random_cnf(rng, 5, rng.randint(5, 20))
        out, _ = scramble_by_clause(f, rng.getrandbits(64))
        assert brute_sat(out.clauses) == brute_sat(f.clauses)
