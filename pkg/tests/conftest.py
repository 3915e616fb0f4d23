"""Shared brute-force oracles and random generators for the test suite."""
import itertools
import random

import pytest
from hypothesis import strategies as st

from proofdoors.cnf import CnfFormula


def assignments(variables):
    """All total assignments over ``variables`` as dicts var -> bool."""
    variables = sorted(variables)
    for bits in itertools.product((False, True), repeat=len(variables)):
        yield dict(zip(variables, bits))


def clause_true(clause, a):
    return any(a[abs(l)] == (l > 0) for l in clause)


def cnf_true(clauses, a):
    return all(clause_true(c, a) for c in clauses)


def brute_sat(clauses, num_vars=None):
    vs = {abs(l) for c in clauses for l in c}
    return any(cnf_true(clauses, a) for a in assignments(vs))


def truth_table(clauses, over):
    """Frozen set of assignments (as tuples over ``over``) satisfying ``clauses``.

    ``clauses`` must only mention variables in ``over``.
    """
    over = sorted(over)
    return frozenset(tuple(a[v] for v in over) for a in assignments(over) if cnf_true(clauses, a))


def projection_table(clauses, keep):
    """Truth table of ``exists (Var - keep). clauses`` over ``keep``."""
    keep = sorted(keep)
    allv = sorted(set(keep) | {abs(l) for c in clauses for l in c})
    return frozenset(tuple(a[v] for v in keep) for a in assignments(allv) if cnf_true(clauses, a))


def brute_entails(f_clauses, g_clauses):
    vs = {abs(l) for c in list(f_clauses) + list(g_clauses) for l in c}
    return all(cnf_true(g_clauses, a) for a in assignments(vs) if cnf_true(f_clauses, a))


def brute_up(clauses, assumptions):
    """Reference unit propagation: repeat a full scan until nothing changes."""
    val = {}
    for l in assumptions:
        if val.get(abs(l), l > 0) != (l > 0):
            return val, True
        val[abs(l)] = l > 0
    changed = True
    while changed:
        changed = False
        for c in clauses:
            if any(val.get(abs(l)) == (l > 0) for l in c):
                continue
            free = [l for l in c if abs(l) not in val]
            if not free:
                return val, True
            if len(free) == 1:
                val[abs(free[0])] = free[0] > 0
                changed = True
    return val, False


def random_cnf(rng, n_vars, n_clauses, max_len=3, min_len=1):
    clauses = []
    for _ in range(n_clauses):
        k = rng.randint(min_len, max_len)
        vs = rng.sample(range(1, n_vars + 1), min(k, n_vars))
        clauses.append(tuple(v if rng.random() < 0.5 else -v for v in vs))
    return CnfFormula.from_clauses(clauses, n_vars)


@st.composite
def cnf_formulas(draw, max_vars=6, max_clauses=10, max_len=3, min_clauses=0):
    n = draw(st.integers(1, max_vars))
    lit = st.integers(1, n).flatmap(lambda v: st.sampled_from((v, -v)))
    clauses = draw(st.lists(st.lists(lit, min_size=1, max_size=max_len), min_size=min_clauses, max_size=max_clauses))
    return CnfFormula.from_clauses([tuple(c) for c in clauses], n)


@pytest.fixture
def rng():
    return random.Random(12345)


def random_cut(rng, max_vars=8, unsat=True, max_len=3, tries=1000):
    """Random (a, b) over overlapping variable ranges; jointly unsatisfiable when ``unsat``."""
    from proofdoors.interpolation import CutProblem

    for _ in range(tries):
        n = rng.randint(3, max_vars)
        split_lo = rng.randint(1, n - 1)
        split_hi = rng.randint(split_lo, n)
        a_vars = list(range(1, split_hi + 1))
        b_vars = list(range(split_lo, n + 1))

        def clauses(vs, count):
            out = []
            for _ in range(count):
                k = rng.randint(1, min(max_len, len(vs)))
                out.append(tuple(v if rng.random() < 0.5 else -v for v in rng.sample(vs, k)))
            return out

        a = clauses(a_vars, rng.randint(1, 2 * len(a_vars)))
        b = clauses(b_vars, rng.randint(1, 2 * len(b_vars)))
        if unsat and brute_sat(a + b):
            continue
        return CutProblem.of(CnfFormula.from_clauses(a, n), CnfFormula.from_clauses(b, n))
    raise RuntimeError("no cut found")
