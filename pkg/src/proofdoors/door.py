"""Sequential proofdoor construction over a chunked formula.

Interpolant ``t`` (zero-based, labelled ``I_{t+1}``) belongs to the cut
after chunk ``t``: it interpolates from ``I_t and A_t`` to ``A_{t+1..K-1}``
with ``I_0 = true``.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Sequence

from .chunking import ChunkedFormula
from .cnf import CnfFormula, read_dimacs, write_dimacs
from .interpolation import (
    DEFAULT_BVE_THRESHOLD,
    DEFAULT_CAP,
    KINDS,
    MCMILLAN,
    STRONGEST,
    WEAKEST,
    BudgetExhausted,
    CutProblem,
    InterpolantReport,
    InterpolationError,
    SizeBlowup,
    mcmillan_for_cut,
    strongest_interpolant,
    validate_interpolant,
    weakest_interpolant,
)
from .solver import SolverConfig, Status, solve


class ProofdoorError(RuntimeError):
    pass


@dataclass(frozen=True)
class Caps:
    clause_cap: int = DEFAULT_CAP
    bve_threshold: int = DEFAULT_BVE_THRESHOLD
    max_conflicts: int | None = None
    validate: bool = True


@dataclass
class Proofdoor:
    interpolants: list
    kind: str
    source: ChunkedFormula | None = None
    reports: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (cut index, message)
    final_check: bool | None = None

    @property
    def complete(self) -> bool:
        if self.failures:
            return False
        return self.source is None or len(self.interpolants) == self.source.k - 1

    @property
    def failure_index(self) -> int | None:
        return self.failures[0][0] if self.failures else None

    @property
    def sizes(self) -> list[int]:
        return [len(i.clauses) for i in self.interpolants]

    @property
    def validations(self) -> list:
        return [r.validated for r in self.reports]

    def all_valid(self) -> bool:
        return all(v is not None and v.ok for v in self.validations)


@dataclass(frozen=True)
class ProofdoorParams:
    c: int
    w: int
    s_bound: int
    k: int

    def to_json(self) -> dict:
        return {"c": self.c, "w": self.w, "s_bound": self.s_bound, "k": self.k}


def _interpolate(kind: str, p: CutProblem, caps: Caps) -> InterpolantReport:
    if kind == STRONGEST:
        return strongest_interpolant(p, caps.bve_threshold, caps.clause_cap)
    if kind == WEAKEST:
        return weakest_interpolant(p, caps.bve_threshold, caps.clause_cap)
    if kind == MCMILLAN:
        return mcmillan_for_cut(p, caps.clause_cap, caps.max_conflicts)
    raise ValueError(f"unknown interpolant kind {kind!r}")


def build_proofdoor(cf: ChunkedFormula, kind: str = STRONGEST, caps: Caps = Caps()) -> Proofdoor:
    """Compute interpolants cut by cut.

    A cut whose interpolant fails (cap, budget) is recorded in ``failures``
    and the raw ``I_prev and A_t`` stands in for it so later cuts still run.
    Raises :class:`ProofdoorError` when the last interpolant does not refute
    the final chunk.
    """
    if cf.k < 2:
        raise ProofdoorError("need at least 2 chunks")
    n = cf.base.num_vars
    pd = Proofdoor([], kind, cf)
    prev = CnfFormula((), n)
    for t in range(cf.k - 1):
        a = CnfFormula(prev.clauses + cf.chunks[t], n)
        p = CutProblem.of(a, cf.suffix(t + 1))
        try:
            rep = _interpolate(kind, p, caps)
        except (SizeBlowup, BudgetExhausted, InterpolationError) as e:
            pd.failures.append((t, f"{type(e).__name__}: {e}"))
            rep = InterpolantReport(None, kind, failure=str(e))
            pd.reports.append(rep)
            pd.interpolants.append(a)
            prev = a
            continue
        if caps.validate:
            rep.validated = validate_interpolant(p, rep.interpolant, caps.max_conflicts)
        pd.reports.append(rep)
        pd.interpolants.append(rep.interpolant)
        prev = rep.interpolant
    last = CnfFormula(prev.clauses + cf.chunks[-1], n)
    res = solve(last, SolverConfig(max_conflicts=caps.max_conflicts))
    pd.final_check = None if res.status is Status.UNKNOWN else res.unsat
    if res.status is Status.SAT:
        raise ProofdoorError("last interpolant and final chunk are satisfiable; base formula is not refuted")
    return pd


def strongest_proofdoor(cf: ChunkedFormula, caps: Caps = Caps()) -> Proofdoor:
    return build_proofdoor(cf, STRONGEST, caps)


def sample_lattice(cf: ChunkedFormula, caps: Caps = Caps()) -> dict[str, Proofdoor]:
    """Strongest, weakest and McMillan proofdoors of the same decomposition.

    Kinds fail independently; a kind whose final check fails is returned as
    an empty door carrying the error in ``failures``.
    """
    out = {}
    for kind in KINDS:
        try:
            out[kind] = build_proofdoor(cf, kind, caps)
        except ProofdoorError as e:
            out[kind] = Proofdoor([], kind, cf, failures=[(cf.k - 1, str(e))], final_check=False)
    return out


# -- parameters ---------------------------------------------------------------

def incidence_graph(chunk: Sequence[Sequence[int]]) -> dict:
    """Clause-variable incidence graph; vertices are ``("v", var)`` and ``("c", index)``."""
    adj: dict = {}
    for v in sorted({abs(l) for c in chunk for l in c}):
        adj[("v", v)] = set()
    for i, c in enumerate(chunk):
        cv = ("c", i)
        adj[cv] = set()
        for l in c:
            adj[cv].add(("v", abs(l)))
            adj[("v", abs(l))].add(cv)
    return adj


def vertex_separation(adj: dict, order: Sequence) -> int:
    """Vertex separation number of ``adj`` under a linear order of its vertices."""
    pos = {u: i for i, u in enumerate(order)}
    if len(pos) != len(adj) or set(pos) != set(adj):
        raise ValueError("ordering must list every vertex exactly once")
    # vertex u is "open" from its own position until its last neighbour's position
    delta = [0] * (len(order) + 1)
    for u, i in pos.items():
        reach = max((pos[x] for x in adj[u]), default=i)
        if reach > i:
            delta[i] += 1
            delta[reach] -= 1
    best = cur = 0
    for i in range(len(order)):
        cur += delta[i]
        best = max(best, cur)
    return best


def _greedy_order(adj: dict, seed_order: Sequence) -> list:
    """Place next the vertex that leaves the fewest open vertices."""
    rank = {u: i for i, u in enumerate(seed_order)}
    unplaced_deg = {u: len(adj[u]) for u in adj}
    placed: set = set()
    open_set: set = set()
    order = []
    while len(order) < len(adj):
        best, best_key = None, None
        frontier = {x for u in open_set for x in adj[u] if x not in placed}
        candidates = frontier or {u for u in adj if u not in placed}
        for u in candidates:
            closes = sum(1 for x in adj[u] if x in open_set and unplaced_deg[x] == 1)
            opens = 1 if unplaced_deg[u] > 0 else 0
            key = (len(open_set) - closes + opens, rank[u])
            if best_key is None or key < best_key:
                best, best_key = u, key
        order.append(best)
        placed.add(best)
        for x in adj[best]:
            unplaced_deg[x] -= 1
            if x in open_set and unplaced_deg[x] == 0:
                open_set.discard(x)
        if unplaced_deg[best] > 0:
            open_set.add(best)
    return order


GREEDY_VERTEX_LIMIT = 4000


def pathwidth_bound(chunk: Sequence[Sequence[int]], ordering: Sequence | None = None) -> int:
    """Upper bound on the pathwidth of the clause-variable incidence graph.

    With an explicit ``ordering`` this is the vertex separation number under
    it.  Otherwise the better of the natural order (variables by index, then
    clauses by position) and a greedy order seeded from it.
    """
    adj = incidence_graph(chunk)
    if not adj:
        return 0
    if ordering is not None:
        return vertex_separation(adj, ordering)
    natural = sorted((u for u in adj if u[0] == "v"), key=lambda u: u[1]) + \
        sorted((u for u in adj if u[0] == "c"), key=lambda u: u[1])
    best = vertex_separation(adj, natural)
    if len(adj) <= GREEDY_VERTEX_LIMIT:
        best = min(best, vertex_separation(adj, _greedy_order(adj, natural)))
    return best


def _dependency_bound(chunk: CnfFormula, prev: CnfFormula, clause: Sequence[int],
                      max_conflicts: int | None) -> int | None:
    """Greedily shrink ``S`` within ``prev`` while ``chunk and S`` entails ``clause``."""
    n = max(chunk.num_vars, prev.num_vars)
    neg = tuple((-l,) for l in clause)
    keep = list(prev.clauses)
    for d in list(prev.clauses):
        trial = [x for x in keep if x is not d]
        res = solve(CnfFormula(chunk.clauses + tuple(trial) + neg, n), SolverConfig(max_conflicts=max_conflicts))
        if res.status is Status.UNKNOWN:
            return None
        if res.unsat:
            keep = trial
    return len(keep)


def measure_params(pd: Proofdoor, cf: ChunkedFormula, max_conflicts: int | None = None) -> ProofdoorParams:
    """Measure ``(c, w, s)`` for a complete proofdoor.

    ``s_bound`` covers both the per-clause dependency on the previous
    interpolant and the size of the last interpolant; it falls back to ``c``
    when a solver budget runs out.
    """
    if len(pd.interpolants) != cf.k - 1:
        raise ProofdoorError(f"proofdoor has {len(pd.interpolants)} interpolants for {cf.k} chunks")
    sizes = pd.sizes
    c = max(sizes, default=0)
    w = max(pathwidth_bound(ch) for ch in cf.chunks)
    n = cf.base.num_vars
    s = sizes[-1] if sizes else 0
    prev = CnfFormula((), n)
    for t, itp in enumerate(pd.interpolants):
        chunk = cf.chunk_formula(t)
        for clause in itp.clauses:
            bound = _dependency_bound(chunk, prev, clause, max_conflicts)
            if bound is None:
                return ProofdoorParams(c, w, c, cf.k)
            s = max(s, min(len(prev.clauses), bound))
        prev = itp
    return ProofdoorParams(c, w, s, cf.k)


# -- archive --------------------------------------------------------------------

def write_archive(pd: Proofdoor, directory, params: ProofdoorParams | None = None, extra: dict | None = None) -> str:
    """Write one DIMACS file per interpolant plus ``manifest.json``."""
    os.makedirs(directory, exist_ok=True)
    files = []
    for t, itp in enumerate(pd.interpolants):
        name = f"I_{t + 1}.cnf"
        write_dimacs(itp, os.path.join(directory, name), [f"{pd.kind} interpolant for cut {t}"])
        files.append(name)
    manifest = {
        "kind": pd.kind,
        "k": pd.source.k if pd.source else len(pd.interpolants) + 1,
        "files": files,
        "sizes": pd.sizes,
        "validation": [None if v is None else v.to_json() for v in pd.validations],
        "reports": [r.to_json() for r in pd.reports],
        "failures": [{"cut": t, "error": msg} for t, msg in pd.failures],
        "final_check": pd.final_check,
        "complete": pd.complete,
        "params": params.to_json() if params else None,
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(directory, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return path


def read_archive(directory) -> tuple[list[CnfFormula], dict]:
    with open(os.path.join(directory, "manifest.json")) as fh:
        manifest = json.load(fh)
    return [read_dimacs(os.path.join(directory, name)) for name in manifest["files"]], manifest
