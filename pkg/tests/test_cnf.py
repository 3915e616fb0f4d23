import io
import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_up, cnf_formulas
from proofdoors.cnf import (Assignment, CnfFormula, DimacsError, Literal, Propagator, cvr, emit_dimacs,
                            is_tautology, parse_dimacs, read_dimacs, unit_propagate, write_dimacs)


# -- literals and clauses

def test_literal_negation_is_involution():
    for lit in (1, -1, 7, -42):
        l = Literal.from_int(lit)
        assert -(-l) == l
        assert int(-l) == -lit
    with pytest.raises(ValueError):
        Literal.from_int(0)


def test_formula_rejects_out_of_range_literal():
    with pytest.raises(ValueError):
        CnfFormula(((3,),), 2)


def test_duplicate_literals_collapse_but_tautologies_stay():
    f = CnfFormula.from_clauses([(1, 1, -2), (2, -2)])
    assert f.clauses == ((1, -2), (2, -2))
    assert is_tautology(f.clauses[1])
    assert not is_tautology(f.clauses[0])


def test_duplicate_clauses_are_preserved():
    f = parse_dimacs("p cnf 1 2\n1 0\n1 0\n")
    assert f.clauses == ((1,), (1,))


# -- DIMACS

def test_parse_simple():
    f = parse_dimacs("p cnf 2 2\n1 0\n-1 2 0\n")
    assert f.clauses == ((1,), (-1, 2))
    assert f.num_vars == 2


def test_parse_collapses_duplicate_literal():
    assert parse_dimacs("p cnf 1 1\n1 1 0\n").clauses == ((1,),)


def test_parse_count_mismatch():
    with pytest.raises(DimacsError, match="count mismatch"):
        parse_dimacs("p cnf 1 2\n1 0\n")


def test_parse_comments_and_multiline_clauses():
    f = parse_dimacs("c hello\np cnf 3 2\n1 -2\n 3 0\n-3 0\n")
    assert f.clauses == ((1, -2, 3), (-3,))


def test_parse_percent_terminator(caplog):
    f = parse_dimacs("p cnf 2 1\n1 2 0\n%\n0\n")
    assert f.clauses == ((1, 2),)
    assert "terminator" in caplog.text


@pytest.mark.parametrize("text, line", [
    ("p cnf x 1\n1 0\n", 1),
    ("p dnf 1 1\n1 0\n", 1),
    ("p cnf 1 1\n2 0\n", 2),
    ("p cnf 2 1\n1 2\n", 2),
    ("c c\np cnf 2 1\n1 0\n2 0\n", 4),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(DimacsError) as e:
        parse_dimacs(text)
    assert e.value.line == line


def test_parse_stream_and_file_round_trip(tmp_path):
    f = CnfFormula.from_clauses([(1, -3), (2,), ()], 4)
    path = tmp_path / "f.cnf"
    write_dimacs(f, path, ["generated"])
    assert read_dimacs(path) == f
    assert parse_dimacs(io.StringIO(emit_dimacs(f))) == f


def test_emission_is_deterministic():
    f = CnfFormula.from_clauses([(3, -1), (2, 1)], 3)
    assert emit_dimacs(f) == "p cnf 3 2\n3 -1 0\n2 1 0\n"


@settings(max_examples=200, deadline=None)
@given(cnf_formulas(max_vars=8, max_clauses=12, max_len=4))
def test_dimacs_round_trip_preserves_clause_multiset(f):
    g = parse_dimacs(emit_dimacs(f))
    assert Counter(g.clauses) == Counter(f.clauses)
    assert g.num_vars == f.num_vars


# -- cvr

@pytest.mark.parametrize("n_clauses, n_vars, expected", [(10, 5, 2.0), (0, 3, 0.0), (7, 2, 3.5)])
def test_cvr(n_clauses, n_vars, expected):
    f = CnfFormula(tuple((1,) for _ in range(n_clauses)), n_vars)
    assert cvr(f) == expected


def test_cvr_zero_variables():
    with pytest.raises(ValueError):
        cvr(CnfFormula((), 0))


# -- assignments

def test_assignment_tristate():
    a = Assignment(3, [1, -3])
    assert a[1] is True and a[2] is None and a[3] is False
    assert a.value(-3) is True
    with pytest.raises(ValueError):
        a.assign(-1)
    assert a.satisfies((2, -3)) and not a.satisfies((2, 3))


# -- unit propagation

def test_up_unit_chain():
    r = unit_propagate(CnfFormula.from_clauses([(1,), (-1, 2)]))
    assert not r.conflict
    assert r.implied == [1, 2]


def test_up_contradiction():
    assert unit_propagate(CnfFormula.from_clauses([(1,), (-1,)])).conflict


def test_up_no_units():
    r = unit_propagate(CnfFormula.from_clauses([(1, 2)]))
    assert r.implied == [] and not r.conflict


def test_up_complementary_assumptions_conflict():
    assert unit_propagate(CnfFormula.from_clauses([(1, 2)]), [1, -1]).conflict


def test_up_empty_clause_conflicts():
    assert unit_propagate(CnfFormula.from_clauses([()], 1)).conflict


def test_propagator_reuse_and_incremental_add():
    p = Propagator([(1, 2)], 3)
    assert not p.derives([-1], 3)
    p.add_clause((-2, 3))
    assert p.derives([-1], 3)
    # state does not leak between queries
    assert not p.derives([], 2)


def _check_up_sound(f, assumptions, r):
    if r.conflict:
        return
    for c in f.clauses:
        assert any(r.final.value(l) is not False for l in c), "clause falsified without conflict"
    assumed = set(assumptions)
    for lit in r.implied:
        assert lit not in assumed
        assert r.final.value(lit) is True


@st.composite
def up_cases(draw):
    f = draw(cnf_formulas(max_vars=7, max_clauses=12, max_len=3))
    vs = list(range(1, f.num_vars + 1))
    chosen = draw(st.lists(st.sampled_from(vs), unique=True, max_size=len(vs)))
    assumptions = [v if draw(st.booleans()) else -v for v in chosen]
    return f, assumptions


@settings(max_examples=300, deadline=None)
@given(up_cases())
def test_up_matches_reference_fixpoint(case):
    f, assumptions = case
    r = unit_propagate(f, assumptions)
    ref, ref_conflict = brute_up(f.clauses, assumptions)
    assert r.conflict == ref_conflict
    if not r.conflict:
        assert {v: r.final[v] for v in range(1, f.num_vars + 1) if r.final[v] is not None} == ref
    _check_up_sound(f, assumptions, r)


@settings(max_examples=200, deadline=None)
@given(up_cases(), st.randoms(use_true_random=False))
def test_up_confluent_under_clause_order(case, rnd):
    f, assumptions = case
    shuffled = list(f.clauses)
    rnd.shuffle(shuffled)
    r1 = unit_propagate(f, assumptions)
    r2 = unit_propagate(CnfFormula(tuple(shuffled), f.num_vars), list(reversed(assumptions)))
    assert r1.conflict == r2.conflict
    if not r1.conflict:
        assert r1.final == r2.final


@settings(max_examples=200, deadline=None)
@given(up_cases(), st.randoms(use_true_random=False))
def test_up_monotone_in_assumptions(case, rnd):
    f, assumptions = case
    extra_var = rnd.randint(1, f.num_vars)
    bigger = assumptions + [extra_var if rnd.random() < 0.5 else -extra_var]
    r1 = unit_propagate(f, assumptions)
    r2 = unit_propagate(f, bigger)
    if r1.conflict:
        assert r2.conflict
        return
    for lit in r1.final.true_literals():
        assert r2.conflict or r2.implies(lit)


def test_up_random_agreement_bulk():
    rng = random.Random(3)
    for _ in range(300):
        n = rng.randint(1, 9)
        clauses = [tuple(rng.choice((v, -v)) for v in rng.sample(range(1, n + 1), rng.randint(1, min(3, n))))
                   for _ in range(rng.randint(0, 15))]
        f = CnfFormula.from_clauses(clauses, n)
        r = unit_propagate(f)
        ref, conflict = brute_up(f.clauses, [])
        assert r.conflict == conflict
