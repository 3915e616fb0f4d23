"""Minimal CDCL solver emitting DRAT traces and resolution proofs.

First-UIP learning, VSIDS with phase saving, geometric restarts.  No clause
deletion, no pre- or inprocessing.  Ties in variable activity break toward
the lowest variable index so runs are reproducible.
"""
from __future__ import annotations

import enum
import heapq
import logging
import os
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .cnf import Assignment, Clause, CnfFormula, Propagator, emit_dimacs, is_tautology, normalize_clause

log = logging.getLogger(__name__)

SOLVER_ENV = "PROOFDOOR_SOLVER"


class Status(enum.Enum):
    SAT = "SAT"
    UNSAT = "UNSAT"
    UNKNOWN = "UNKNOWN"  # conflict or time budget exhausted


class DratError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass
class DratTrace:
    additions: list = field(default_factory=list)

    def __len__(self):
        return len(self.additions)

    def __iter__(self):
        return iter(self.additions)

    def to_text(self) -> str:
        return "".join(" ".join(map(str, tuple(c) + (0,))) + "\n" for c in self.additions)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())


def parse_drat(text: str) -> DratTrace:
    """Parse a plain-text DRAT proof.  Deletion lines are skipped."""
    additions, current = [], []
    deletions = 0
    deleting = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        toks = line.split()
        if not current and toks[0] == "d":
            deleting = True
            toks = toks[1:]
        for tok in toks:
            try:
                lit = int(tok)
            except ValueError:
                raise DratError(f"bad token {tok!r}", lineno) from None
            if lit == 0:
                if deleting:
                    deletions += 1
                else:
                    additions.append(normalize_clause(current))
                current, deleting = [], False
            else:
                current.append(lit)
    if current or deleting:
        raise DratError("proof ends inside a clause")
    if deletions:
        log.warning("ignored %d deletion lines in DRAT proof", deletions)
    return DratTrace(additions)


def read_drat(path) -> DratTrace:
    with open(path, errors="replace") as fh:
        text = fh.read()
    if "\x00" in text:
        raise DratError("binary DRAT is not supported")
    return parse_drat(text)


@dataclass
class DratCheck:
    ok: bool
    failed_index: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def check_drat(f: CnfFormula, t: DratTrace) -> DratCheck:
    """RUP-check every addition against ``f`` plus earlier additions."""
    prop = Propagator(f.clauses, f.num_vars)
    for i, c in enumerate(t.additions):
        if not prop.derives([-l for l in c]):
            return DratCheck(False, i, f"addition {i} {list(c)} is not RUP")
        prop.add_clause(c)
    if not t.additions or t.additions[-1]:
        return DratCheck(False, len(t.additions), "trace does not end with the empty clause")
    return DratCheck(True)


@dataclass(frozen=True)
class ProofNode:
    clause: tuple
    pivot: int | None = None
    left: int | None = None
    right: int | None = None
    source: int | None = None  # input clause index for leaves

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _sorted_clause(lits: Iterable[int]) -> tuple:
    return tuple(sorted(set(lits), key=lambda l: (abs(l), l < 0)))


def resolve(c1: Iterable[int], c2: Iterable[int], pivot: int) -> tuple:
    s1, s2 = set(c1), set(c2)
    if pivot in s1 and -pivot in s2:
        pass
    elif -pivot in s1 and pivot in s2:
        pass
    else:
        raise ValueError(f"pivot {pivot} does not clash in {sorted(s1)} and {sorted(s2)}")
    return _sorted_clause((s1 | s2) - {pivot, -pivot})


@dataclass
class ResolutionProof:
    """Resolution DAG; leaves carry the index of their input clause."""

    nodes: list = field(default_factory=list)
    root: int | None = None

    def add_leaf(self, clause: Iterable[int], source: int) -> int:
        self.nodes.append(ProofNode(_sorted_clause(clause), source=source))
        return len(self.nodes) - 1

    def add_resolvent(self, left: int, right: int, pivot: int) -> int:
        clause = resolve(self.nodes[left].clause, self.nodes[right].clause, pivot)
        self.nodes.append(ProofNode(clause, abs(pivot), left, right))
        return len(self.nodes) - 1

    def leaves(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.is_leaf]

    def reachable(self) -> list[int]:
        """Indices of nodes reachable from the root, children before parents."""
        if self.root is None:
            return []
        seen, order, stack = set(), [], [(self.root, False)]
        while stack:
            i, expanded = stack.pop()
            if expanded:
                order.append(i)
                continue
            if i in seen:
                continue
            seen.add(i)
            stack.append((i, True))
            n = self.nodes[i]
            if not n.is_leaf:
                stack.append((n.right, False))
                stack.append((n.left, False))
        return order

    def check(self, f: CnfFormula | None = None) -> bool:
        """Replay every resolution step; optionally check leaves against ``f``."""
        if self.root is None or self.nodes[self.root].clause != ():
            return False
        for i in self.reachable():
            n = self.nodes[i]
            if n.is_leaf:
                if f is not None:
                    if n.source is None or not 0 <= n.source < len(f.clauses):
                        return False
                    if _sorted_clause(f.clauses[n.source]) != n.clause:
                        return False
                continue
            if n.left >= i or n.right >= i:
                return False
            try:
                if resolve(self.nodes[n.left].clause, self.nodes[n.right].clause, n.pivot) != n.clause:
                    return False
            except ValueError:
                return False
        return True


@dataclass
class SolverConfig:
    max_conflicts: int | None = None
    time_limit: float | None = None
    record_resolution: bool = False
    restart_first: int = 100
    restart_factor: float = 1.5
    var_decay: float = 0.95


@dataclass
class SolveResult:
    status: Status
    model: Assignment | None = None
    trace: DratTrace | None = None
    resolution: ResolutionProof | None = None
    stats: dict = field(default_factory=dict)

    @property
    def sat(self) -> bool:
        return self.status is Status.SAT

    @property
    def unsat(self) -> bool:
        return self.status is Status.UNSAT


class _Unsat(Exception):
    pass


class CdclSolver:
    def __init__(self, f: CnfFormula, config: SolverConfig | None = None):
        self.f = f
        self.config = config or SolverConfig()
        n = f.num_vars
        self.n = n
        self.clauses: list[list[int]] = []
        self.vals = [0] * (n + 1)
        self.level = [0] * (n + 1)
        self.reason = [-1] * (n + 1)
        self.phase = [False] * (n + 1)
        self.activity = [0.0] * (n + 1)
        self.var_inc = 1.0
        self.watches: list[list[int]] = [[] for _ in range(2 * n + 2)]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.heap = [(0.0, v) for v in range(1, n + 1)]
        self.learned: list[Clause] = []
        self.stats = {"decisions": 0, "conflicts": 0, "propagations": 0, "restarts": 0}
        self.proof = ResolutionProof() if self.config.record_resolution else None
        self.clause_node: list[int] = []
        self.unit_node: dict[int, int] = {}
        self._l0_done = 0

    # -- bookkeeping ------------------------------------------------------

    @staticmethod
    def _code(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def _value(self, lit: int) -> int:
        v = self.vals[lit] if lit > 0 else -self.vals[-lit]
        return v

    def _decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason: int) -> None:
        v = abs(lit)
        self.vals[v] = 1 if lit > 0 else -1
        self.level[v] = self._decision_level()
        self.reason[v] = reason
        self.trail.append(lit)

    def _add_clause(self, lits: list[int], node: int | None) -> int:
        ci = len(self.clauses)
        self.clauses.append(lits)
        if self.proof is not None:
            self.clause_node.append(node)
        if len(lits) >= 2:
            self.watches[self._code(lits[0])].append(ci)
            self.watches[self._code(lits[1])].append(ci)
        return ci

    def _cancel_until(self, lvl: int) -> None:
        if self._decision_level() <= lvl:
            return
        start = self.trail_lim[lvl]
        for lit in self.trail[start:]:
            v = abs(lit)
            self.phase[v] = lit > 0
            self.vals[v] = 0
            self.reason[v] = -1
            heapq.heappush(self.heap, (-self.activity[v], v))
        del self.trail[start:]
        del self.trail_lim[lvl:]
        self.qhead = len(self.trail)

    # -- propagation ------------------------------------------------------

    def _propagate(self) -> int:
        vals, clauses, watches, trail = self.vals, self.clauses, self.watches, self.trail
        while self.qhead < len(trail):
            lit = trail[self.qhead]
            self.qhead += 1
            self.stats["propagations"] += 1
            false_lit = -lit
            wl = watches[2 * false_lit if false_lit > 0 else -2 * false_lit + 1]
            i = 0
            while i < len(wl):
                ci = wl[i]
                c = clauses[ci]
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                other = c[0]
                ov = vals[other] if other > 0 else -vals[-other]
                if ov == 1:
                    i += 1
                    continue
                moved = False
                for k in range(2, len(c)):
                    l = c[k]
                    if (vals[l] if l > 0 else -vals[-l]) != -1:
                        c[1], c[k] = l, c[1]
                        watches[2 * l if l > 0 else -2 * l + 1].append(ci)
                        wl[i] = wl[-1]
                        wl.pop()
                        moved = True
                        break
                if moved:
                    continue
                if ov == -1:
                    self.qhead = len(trail)
                    return ci
                self._enqueue(other, ci)
                i += 1
        return -1

    # -- resolution recording --------------------------------------------

    def _ensure_unit_nodes(self) -> None:
        end = self.trail_lim[0] if self.trail_lim else len(self.trail)
        proof = self.proof
        while self._l0_done < end:
            lit = self.trail[self._l0_done]
            self._l0_done += 1
            v = abs(lit)
            ci = self.reason[v]
            node = self.clause_node[ci]
            for l in self.clauses[ci]:
                if l != lit:
                    node = proof.add_resolvent(node, self.unit_node[abs(l)], abs(l))
            self.unit_node[v] = node

    def _strip_level0(self, node: int, lits: Iterable[int]) -> int:
        self._ensure_unit_nodes()
        for l in lits:
            node = self.proof.add_resolvent(node, self.unit_node[abs(l)], abs(l))
        return node

    # -- conflict analysis ------------------------------------------------

    def _bump(self, v: int) -> None:
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            for u in range(1, self.n + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.n + 1) if self.vals[u] == 0]
            heapq.heapify(self.heap)

    def _analyze(self, confl: int):
        seen = set()
        learnt: list[int] = []
        level0: list[int] = []
        chain: list[tuple[int, int]] = []
        counter = 0
        p = None
        idx = len(self.trail) - 1
        cur = self._decision_level()
        clause = self.clauses[confl]
        while True:
            for q in clause:
                if p is not None and q == p:
                    continue
                v = abs(q)
                if v in seen:
                    continue
                seen.add(v)
                self._bump(v)
                if self.level[v] == cur:
                    counter += 1
                elif self.level[v] > 0:
                    learnt.append(q)
                else:
                    level0.append(q)
            while abs(self.trail[idx]) not in seen:
                idx -= 1
            p = self.trail[idx]
            idx -= 1
            counter -= 1
            if counter == 0:
                break
            r = self.reason[abs(p)]
            chain.append((r, abs(p)))
            clause = self.clauses[r]
        learnt.insert(0, -p)
        bt = 0
        if len(learnt) > 1:
            best = max(range(1, len(learnt)), key=lambda i: self.level[abs(learnt[i])])
            learnt[1], learnt[best] = learnt[best], learnt[1]
            bt = self.level[abs(learnt[1])]
        self.var_inc /= self.config.var_decay
        node = None
        if self.proof is not None:
            node = self.clause_node[confl]
            for r, v in chain:
                node = self.proof.add_resolvent(node, self.clause_node[r], v)
            node = self._strip_level0(node, level0)
            assert set(self.proof.nodes[node].clause) == set(learnt)
        return learnt, bt, node

    def _refute(self, confl: int) -> None:
        """Record the empty clause from a level-0 conflict."""
        self.learned.append(())
        if self.proof is not None:
            node = self._strip_level0(self.clause_node[confl], self.clauses[confl])
            assert self.proof.nodes[node].clause == ()
            self.proof.root = node
        raise _Unsat

    # -- main loop --------------------------------------------------------

    def _pick_branch(self) -> int:
        heap, act, vals = self.heap, self.activity, self.vals
        while heap:
            neg_a, v = heapq.heappop(heap)
            if vals[v] == 0 and -neg_a == act[v]:
                return v if self.phase[v] else -v
        for v in range(1, self.n + 1):
            if vals[v] == 0:
                return v if self.phase[v] else -v
        return 0

    def _load(self) -> None:
        for i, raw in enumerate(self.f.clauses):
            lits = list(normalize_clause(raw))
            if is_tautology(lits):
                continue
            node = self.proof.add_leaf(lits, i) if self.proof is not None else None
            if not lits:
                self.learned.append(())
                if self.proof is not None:
                    self.proof.root = node
                raise _Unsat
            ci = self._add_clause(lits, node)
            if len(lits) == 1:
                val = self._value(lits[0])
                if val == 0:
                    self._enqueue(lits[0], ci)
                elif val == -1:
                    self._refute(ci)

    def solve(self) -> SolveResult:
        t0 = time.monotonic()
        try:
            self._load()
            status = self._search(t0)
        except _Unsat:
            status = Status.UNSAT
        self.stats["time"] = time.monotonic() - t0
        if status is Status.SAT:
            model = Assignment(self.n, [v if self.vals[v] > 0 else -v for v in range(1, self.n + 1)])
            return SolveResult(status, model=model, stats=self.stats)
        if status is Status.UNSAT:
            return SolveResult(status, trace=DratTrace(list(self.learned)), resolution=self.proof, stats=self.stats)
        return SolveResult(status, stats=self.stats)

    def _search(self, t0: float) -> Status:
        cfg = self.config
        restart_limit = float(cfg.restart_first)
        since_restart = 0
        while True:
            confl = self._propagate()
            if confl >= 0:
                self.stats["conflicts"] += 1
                since_restart += 1
                if self._decision_level() == 0:
                    self._refute(confl)
                learnt, bt, node = self._analyze(confl)
                self._cancel_until(bt)
                ci = self._add_clause(learnt, node)
                self.learned.append(tuple(learnt))
                self._enqueue(learnt[0], ci)
                if cfg.max_conflicts is not None and self.stats["conflicts"] >= cfg.max_conflicts:
                    return Status.UNKNOWN
                if cfg.time_limit is not None and time.monotonic() - t0 > cfg.time_limit:
                    return Status.UNKNOWN
                continue
            if since_restart >= restart_limit:
                since_restart = 0
                restart_limit *= cfg.restart_factor
                self.stats["restarts"] += 1
                self._cancel_until(0)
                continue
            if len(self.heap) > 4 * self.n + 64:
                self.heap = [(-self.activity[v], v) for v in range(1, self.n + 1) if self.vals[v] == 0]
                heapq.heapify(self.heap)
            lit = self._pick_branch()
            if lit == 0:
                return Status.SAT
            self.stats["decisions"] += 1
            self.trail_lim.append(len(self.trail))
            self._enqueue(lit, -1)


def solve(f: CnfFormula, config: SolverConfig | None = None, **kwargs) -> SolveResult:
    """Solve ``f``; keyword arguments override fields of ``config``."""
    if config is None:
        config = SolverConfig(**kwargs)
    elif kwargs:
        config = SolverConfig(**{**config.__dict__, **kwargs})
    return CdclSolver(f, config).solve()


class ExternalSolverError(RuntimeError):
    pass


def _command_argv(command: str | Sequence[str], cnf_path: str, proof_path: str) -> list[str]:
    parts = shlex.split(command) if isinstance(command, str) else list(command)
    if any("{cnf}" in p or "{proof}" in p for p in parts):
        return [p.replace("{cnf}", cnf_path).replace("{proof}", proof_path) for p in parts]
    return parts + [cnf_path, proof_path]


def _parse_model(stdout: str, n: int) -> Assignment | None:
    lits = []
    for line in stdout.splitlines():
        if line.startswith("v "):
            lits.extend(int(t) for t in line.split()[1:] if t != "0")
    if not lits:
        return None
    return Assignment(n, lits)


def run_external_solver(f: CnfFormula, command: str | Sequence[str] | None = None,
                        timeout: float | None = None) -> SolveResult:
    """Run an external solver using exit codes 10 (SAT) and 20 (UNSAT).

    The command receives the CNF path and the proof path, either appended to
    argv or substituted for ``{cnf}``/``{proof}`` placeholders.
    """
    command = command or os.environ.get(SOLVER_ENV)
    if not command:
        raise ExternalSolverError(f"no solver command given and ${SOLVER_ENV} is unset")
    with tempfile.TemporaryDirectory(prefix="proofdoor-") as tmp:
        cnf_path = os.path.join(tmp, "input.cnf")
        proof_path = os.path.join(tmp, "proof.drat")
        with open(cnf_path, "w") as fh:
            fh.write(emit_dimacs(f))
        argv = _command_argv(command, cnf_path, proof_path)
        t0 = time.monotonic()
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            return SolveResult(Status.UNKNOWN, stats={"time": time.monotonic() - t0, "timeout": True})
        except OSError as e:
            raise ExternalSolverError(f"cannot run {argv[0]}: {e}") from e
        stats = {"time": time.monotonic() - t0, "returncode": proc.returncode}
        if proc.returncode == 10:
            return SolveResult(Status.SAT, model=_parse_model(proc.stdout, f.num_vars),
                               trace=DratTrace(), stats=stats)
        if proc.returncode == 20:
            if not os.path.exists(proof_path):
                raise ExternalSolverError("solver reported UNSAT but wrote no proof")
            try:
                trace = read_drat(proof_path)
            except DratError as e:
                raise ExternalSolverError(f"unparsable proof: {e}") from e
            return SolveResult(Status.UNSAT, trace=trace, stats=stats)
        raise ExternalSolverError(
            f"solver exited with status {proc.returncode}: {proc.stderr.strip()[:200]}")
