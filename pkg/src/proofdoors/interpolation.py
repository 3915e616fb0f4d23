"""Interpolants for a cut (A, B): strongest, weakest and McMillan.

CNF conversion never introduces fresh variables; disjunctions of CNFs are
distributed with tautology removal and subsumption pruning, and every
intermediate formula is held under a hard clause cap.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple

from .cnf import CnfFormula, Propagator
from .solver import ResolutionProof, SolverConfig, Status, solve

STRONGEST = "strongest"
WEAKEST = "weakest"
MCMILLAN = "mcmillan"
KINDS = (STRONGEST, WEAKEST, MCMILLAN)

DEFAULT_CAP = 10**6
DEFAULT_BVE_THRESHOLD = 16


class SizeBlowup(RuntimeError):
    """An intermediate CNF outgrew its clause cap."""

    def __init__(self, stage: str, size: int, cap: int, stats: dict | None = None):
        self.stage, self.size, self.cap = stage, size, cap
        self.stats = dict(stats or {})
        super().__init__(f"{stage}: {size} clauses exceeds cap {cap}")


class BudgetExhausted(RuntimeError):
    pass


# -- clause-set utilities ---------------------------------------------------

def _taut(c: frozenset) -> bool:
    return any(-l in c for l in c)


def reduce_subsumed(clauses: Iterable[frozenset]) -> list[frozenset]:
    """Drop tautologies, duplicates and subsumed clauses, shortest first."""
    uniq = sorted({c for c in clauses if not _taut(c)}, key=lambda c: (len(c), sorted(c)))
    if uniq and not uniq[0]:
        return [frozenset()]
    kept: list[frozenset] = []
    index: dict[int, list[frozenset]] = {}
    for c in uniq:
        subsumed = False
        for l in c:
            for d in index.get(l, ()):
                if d <= c:
                    subsumed = True
                    break
            if subsumed:
                break
        if not subsumed:
            kept.append(c)
            index.setdefault(min(c), []).append(c)
    return kept


def _resolvents(pos: Iterable[frozenset], neg: Iterable[frozenset], v: int, limit: int | None = None):
    out = set()
    for p in pos:
        p2 = p - {v}
        for n in neg:
            r = p2 | (n - {-v})
            if not _taut(r):
                out.add(r)
                if limit is not None and len(out) > limit:
                    return None
    return out


def _as_sets(clauses: Iterable[Iterable[int]]) -> list[frozenset]:
    return [frozenset(c) for c in clauses]


def _to_formula(clauses: Iterable[frozenset], num_vars: int) -> CnfFormula:
    ordered = sorted(clauses, key=lambda c: (len(c), sorted(map(abs, c)), sorted(c)))
    return CnfFormula(tuple(tuple(sorted(c, key=lambda l: (abs(l), l < 0))) for c in ordered), num_vars)


class _ClauseDb:
    """Clause store with literal occurrence lists for elimination."""

    def __init__(self, clauses: Iterable[frozenset]):
        self.clauses: dict[int, frozenset] = {}
        self.occ: dict[int, set[int]] = {}
        self.next_id = 0
        self.has_empty = False
        self._keys: set[frozenset] = set()
        for c in clauses:
            self.add(c)

    def add(self, c: frozenset) -> None:
        if _taut(c) or c in self._keys:
            return
        if not c:
            self.has_empty = True
        cid = self.next_id
        self.next_id += 1
        self.clauses[cid] = c
        self._keys.add(c)
        for l in c:
            self.occ.setdefault(l, set()).add(cid)

    def remove(self, cid: int) -> None:
        c = self.clauses.pop(cid)
        self._keys.discard(c)
        for l in c:
            self.occ[l].discard(cid)

    def occurrences(self, v: int) -> tuple[list[frozenset], list[frozenset], list[int]]:
        pos_ids = list(self.occ.get(v, ()))
        neg_ids = list(self.occ.get(-v, ()))
        return ([self.clauses[i] for i in pos_ids], [self.clauses[i] for i in neg_ids], pos_ids + neg_ids)

    def count(self, v: int) -> int:
        return len(self.occ.get(v, ())) + len(self.occ.get(-v, ()))

    def __len__(self):
        return len(self.clauses)

    def reduce(self) -> None:
        kept = reduce_subsumed(self.clauses.values())
        self.__init__(kept)


def project(clauses: Iterable[Iterable[int]], eliminate: Iterable[int],
            bve_threshold: int | None = DEFAULT_BVE_THRESHOLD, cap: int = DEFAULT_CAP,
            stats: dict | None = None) -> list[frozenset]:
    """Existentially quantify ``eliminate`` out of a CNF.

    Bounded rounds eliminate a variable when its non-tautological resolvents
    number at most its occurrence count plus ``bve_threshold``; the variables
    left over are then forced out by full Davis-Putnam resolution.  Pass
    ``bve_threshold=None`` to skip the bounded rounds.
    """
    stats = stats if stats is not None else {}
    stats.setdefault("bve_eliminated", 0)
    stats.setdefault("dp_eliminated", 0)
    db = _ClauseDb(_as_sets(clauses))
    remaining = {v for v in eliminate if db.count(v)}
    # variables of ``eliminate`` that never occur are trivially gone

    def eliminate_one(v: int, limit: int | None) -> bool:
        pos, neg, ids = db.occurrences(v)
        res = _resolvents(pos, neg, v, limit)
        if res is None:
            return False
        for cid in ids:
            db.remove(cid)
        for r in res:
            db.add(r)
        if len(db) > cap:
            raise SizeBlowup("elimination", len(db), cap, stats)
        return True

    if bve_threshold is not None:
        progress = True
        while progress and remaining and not db.has_empty:
            progress = False
            for v in sorted(remaining, key=lambda u: (db.count(u), u)):
                if eliminate_one(v, db.count(v) + bve_threshold):
                    remaining.discard(v)
                    stats["bve_eliminated"] += 1
                    progress = True
                if db.has_empty:
                    break
    while remaining and not db.has_empty:
        v = min(remaining, key=lambda u: (db.count(u), u))
        eliminate_one(v, None)
        remaining.discard(v)
        stats["dp_eliminated"] += 1
        if len(db) > 64 and stats["dp_eliminated"] % 4 == 0:
            db.reduce()
    if db.has_empty:
        return [frozenset()]
    return reduce_subsumed(db.clauses.values())


def prime_implicates(clauses: Iterable[Iterable[int]], cap: int = DEFAULT_CAP) -> list[frozenset]:
    """All prime implicates of a CNF by Tison's variable-wise consensus."""
    s = reduce_subsumed(_as_sets(clauses))
    if s == [frozenset()]:
        return s
    for v in sorted({abs(l) for c in s for l in c}):
        pos = [c for c in s if v in c]
        neg = [c for c in s if -v in c]
        if not pos or not neg:
            continue
        new = _resolvents(pos, neg, v)
        s = reduce_subsumed(s + list(new))
        if len(s) > cap:
            raise SizeBlowup("prime implicates", len(s), cap)
        if s == [frozenset()]:
            break
    return s


def eliminate_variable(f: CnfFormula, v: int, cap: int = DEFAULT_CAP) -> CnfFormula:
    """Davis-Putnam elimination of one variable: the result is equivalent to ``exists v. f``."""
    v = abs(v)
    if v not in f.variables():
        raise ValueError(f"variable {v} does not occur in the formula")
    sets = _as_sets(f.clauses)
    pos = [c for c in sets if v in c and -v not in c]
    neg = [c for c in sets if -v in c and v not in c]
    rest = [c for c in sets if v not in c and -v not in c]
    res = _resolvents(pos, neg, v)
    out = list(dict.fromkeys(rest + sorted(res, key=lambda c: (len(c), sorted(c)))))
    if len(out) > cap:
        raise SizeBlowup("elimination", len(out), cap)
    return CnfFormula(tuple(tuple(sorted(c, key=lambda l: (abs(l), l < 0))) for c in out), f.num_vars)


def negate_cnf(clauses: Iterable[frozenset], cap: int = DEFAULT_CAP) -> list[frozenset]:
    """CNF of the negation of a CNF, by De Morgan and distribution."""
    result = [frozenset()]  # the empty disjunction: false
    for c in clauses:
        if not c:
            return []  # negating a false conjunct makes the whole thing true
        cube = [-l for l in c]
        grown = {r | {l} for r in result for l in cube}
        result = reduce_subsumed(grown)
        if len(result) > cap:
            raise SizeBlowup("negation", len(result), cap)
        if not result:
            return []
    return result


def cnf_or(f: list[frozenset], g: list[frozenset], cap: int = DEFAULT_CAP) -> list[frozenset]:
    if not f or not g:
        return []
    if len(f) * len(g) > 4 * cap:
        raise SizeBlowup("distribution", len(f) * len(g), cap)
    out = reduce_subsumed(a | b for a in f for b in g)
    if len(out) > cap:
        raise SizeBlowup("distribution", len(out), cap)
    return out


def cnf_and(f: list[frozenset], g: list[frozenset], cap: int = DEFAULT_CAP) -> list[frozenset]:
    out = reduce_subsumed(f + g)
    if len(out) > cap:
        raise SizeBlowup("conjunction", len(out), cap)
    return out


# -- cut problems and reports ----------------------------------------------

@dataclass(frozen=True)
class CutProblem:
    a: CnfFormula
    b: CnfFormula
    shared: frozenset
    local_a: frozenset
    local_b: frozenset

    @classmethod
    def of(cls, a: CnfFormula, b: CnfFormula) -> "CutProblem":
        n = max(a.num_vars, b.num_vars)
        a, b = a.with_num_vars(n), b.with_num_vars(n)
        va, vb = a.variables(), b.variables()
        shared = frozenset(va & vb)
        return cls(a, b, shared, frozenset(va - shared), frozenset(vb - shared))

    @property
    def num_vars(self) -> int:
        return max(self.a.num_vars, self.b.num_vars)

    def swapped(self) -> "CutProblem":
        return CutProblem(self.b, self.a, self.shared, self.local_b, self.local_a)


class Validation(NamedTuple):
    """Interpolant conditions; ``None`` marks an indeterminate check."""

    implied: bool | None
    refutes: bool | None
    scoped: bool | None

    @property
    def ok(self) -> bool:
        return self.implied is True and self.refutes is True and self.scoped is True

    def to_json(self) -> list:
        return list(self)


@dataclass
class InterpolantReport:
    interpolant: CnfFormula | None
    kind: str
    validated: Validation | None = None
    seconds: float = 0.0
    dag_size: int | None = None
    failure: str | None = None
    stats: dict = field(default_factory=dict)

    @property
    def clause_count(self) -> int | None:
        return None if self.interpolant is None else len(self.interpolant.clauses)

    @property
    def ok(self) -> bool:
        return self.failure is None and self.interpolant is not None

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "clause_count": self.clause_count,
            "validated": None if self.validated is None else self.validated.to_json(),
            "wall_time_s": round(self.seconds, 6),
            "dag_size": self.dag_size,
            "failure": self.failure,
        }


def strongest_interpolant(p: CutProblem, bve_threshold: int | None = DEFAULT_BVE_THRESHOLD,
                          cap: int = DEFAULT_CAP, complete: bool = True) -> InterpolantReport:
    """``exists L_A. a`` as a CNF over the shared variables.

    With ``complete`` the projection is closed under consensus, so every
    shared-variable implicate of ``a`` is subsumed by one of its clauses.
    Raises :class:`SizeBlowup` when a cap is hit.
    """
    t0 = time.perf_counter()
    stats: dict = {}
    clauses = project(p.a.clauses, p.local_a, bve_threshold, cap, stats)
    if complete:
        clauses = prime_implicates(clauses, cap)
    itp = _to_formula(clauses, p.num_vars)
    return InterpolantReport(itp, STRONGEST, seconds=time.perf_counter() - t0, stats=stats)


def weakest_interpolant(p: CutProblem, bve_threshold: int | None = DEFAULT_BVE_THRESHOLD,
                        cap: int = DEFAULT_CAP) -> InterpolantReport:
    """``not exists L_B. b``, converted to CNF by De Morgan."""
    t0 = time.perf_counter()
    stats: dict = {}
    projected = project(p.b.clauses, p.local_b, bve_threshold, cap, stats)
    clauses = negate_cnf(projected, cap)
    stats["projected_b_clauses"] = len(projected)
    itp = _to_formula(clauses, p.num_vars)
    return InterpolantReport(itp, WEAKEST, seconds=time.perf_counter() - t0, stats=stats)


class InterpolationError(ValueError):
    pass


def mcmillan_interpolant(proof: ResolutionProof, labeling: Mapping[int, str], shared: Iterable[int],
                         cap: int = DEFAULT_CAP, num_vars: int | None = None) -> InterpolantReport:
    """McMillan's interpolant from a resolution refutation.

    ``labeling`` maps each leaf's input-clause index to ``"A"`` or ``"B"``.
    A leaves contribute the disjunction of their B-visible literals, B leaves
    contribute true; resolving on an A-local pivot joins by disjunction,
    any other pivot by conjunction.
    """
    t0 = time.perf_counter()
    if proof.root is None:
        raise InterpolationError("proof has no root")
    order = proof.reachable()
    nodes = proof.nodes
    b_vars = set(shared)
    for i in order:
        n = nodes[i]
        if n.is_leaf:
            tag = labeling.get(n.source)
            if tag not in ("A", "B"):
                raise InterpolationError(f"leaf {i} (input clause {n.source}) has no A/B tag")
            if tag == "B":
                b_vars.update(abs(l) for l in n.clause)
    uses: dict[int, int] = {}
    for i in order:
        n = nodes[i]
        if not n.is_leaf:
            uses[n.left] = uses.get(n.left, 0) + 1
            uses[n.right] = uses.get(n.right, 0) + 1
    part: dict[int, list[frozenset]] = {}
    for i in order:
        n = nodes[i]
        if n.is_leaf:
            if labeling[n.source] == "A":
                part[i] = [frozenset(l for l in n.clause if abs(l) in b_vars)]
            else:
                part[i] = []
            continue
        if n.pivot is None or n.left not in part or n.right not in part:
            raise InterpolationError(f"pivot bookkeeping mismatch at node {i}")
        left, right = part[n.left], part[n.right]
        if n.pivot in b_vars:
            part[i] = cnf_and(left, right, cap)
        else:
            part[i] = cnf_or(left, right, cap)
        for child in (n.left, n.right):
            uses[child] -= 1
            if uses[child] == 0 and child != proof.root:
                del part[child]
    if num_vars is None:
        num_vars = max((abs(l) for n in nodes for l in n.clause), default=0)
    itp = _to_formula(part[proof.root], num_vars)
    return InterpolantReport(itp, MCMILLAN, seconds=time.perf_counter() - t0, dag_size=len(order))


def mcmillan_for_cut(p: CutProblem, cap: int = DEFAULT_CAP, max_conflicts: int | None = None) -> InterpolantReport:
    """Refute ``a and b`` with the built-in solver, then extract McMillan's interpolant."""
    t0 = time.perf_counter()
    both = p.a.conjoin(p.b)
    res = solve(both, SolverConfig(max_conflicts=max_conflicts, record_resolution=True))
    if res.status is Status.UNKNOWN:
        raise BudgetExhausted("solver budget exhausted before refutation")
    if res.status is Status.SAT:
        raise InterpolationError("a and b are jointly satisfiable")
    n_a = len(p.a.clauses)
    labeling = {i: ("A" if i < n_a else "B") for i in range(len(both.clauses))}
    rep = mcmillan_interpolant(res.resolution, labeling, p.shared, cap, p.num_vars)
    rep.seconds = time.perf_counter() - t0
    rep.stats["proof_nodes"] = len(res.resolution.nodes)
    return rep


# -- validation -------------------------------------------------------------

def _unsat(f: CnfFormula, max_conflicts: int | None) -> bool | None:
    res = solve(f, SolverConfig(max_conflicts=max_conflicts))
    if res.status is Status.UNKNOWN:
        return None
    return res.status is Status.UNSAT


def entails(f: CnfFormula, g: CnfFormula, max_conflicts: int | None = None) -> bool | None:
    """Whether ``f`` entails every clause of ``g``; ``None`` if a budget ran out."""
    n = max(f.num_vars, g.num_vars)
    prop = Propagator(f.clauses, n)
    verdict: bool | None = True
    for c in g.clauses:
        neg = [-l for l in c]
        if prop.derives(neg):
            continue
        r = _unsat(CnfFormula(f.clauses + tuple((l,) for l in neg), n), max_conflicts)
        if r is False:
            return False
        if r is None:
            verdict = None
    return verdict


def validate_interpolant(p: CutProblem, i: CnfFormula, max_conflicts: int | None = None) -> Validation:
    scoped = i.variables() <= p.shared
    implied = entails(p.a, i, max_conflicts)
    n = max(p.num_vars, i.num_vars)
    refutes = _unsat(CnfFormula(i.clauses + p.b.clauses, n), max_conflicts)
    return Validation(implied, refutes, scoped)


def emit_qdimacs(p: CutProblem) -> str:
    """``exists L_A. a`` as QDIMACS; shared variables stay free."""
    lines = [f"p cnf {p.num_vars} {len(p.a.clauses)}"]
    if p.local_a:
        lines.append("e " + " ".join(map(str, sorted(p.local_a))) + " 0")
    lines.extend(" ".join(map(str, tuple(c) + (0,))) for c in p.a.clauses)
    return "\n".join(lines) + "\n"
