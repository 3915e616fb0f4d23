"""Propositional core: clauses, formulas, DIMACS I/O and unit propagation.

Literals are DIMACS integers throughout: variable ``v`` appears as ``v`` or
``-v``.  A clause is a tuple of literals with duplicates removed; the empty
tuple is the empty clause.
"""
from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple, Sequence

log = logging.getLogger(__name__)

Clause = tuple  # tuple[int, ...]


class Literal(NamedTuple):
    variable: int
    polarity: bool

    @classmethod
    def from_int(cls, lit: int) -> "Literal":
        if lit == 0:
            raise ValueError("0 is not a literal")
        return cls(abs(lit), lit > 0)

    def __int__(self) -> int:
        return self.variable if self.polarity else -self.variable

    def __neg__(self) -> "Literal":
        return Literal(self.variable, not self.polarity)


def normalize_clause(lits: Iterable[int]) -> Clause:
    """Drop duplicate literals, keeping first-occurrence order."""
    return tuple(dict.fromkeys(int(l) for l in lits))


def is_tautology(clause: Iterable[int]) -> bool:
    s = set(clause)
    return any(-l in s for l in s)


def clause_vars(clause: Iterable[int]) -> set[int]:
    return {abs(l) for l in clause}


@dataclass(frozen=True)
class CnfFormula:
    clauses: tuple = ()
    num_vars: int = 0

    def __post_init__(self):
        clauses = tuple(normalize_clause(c) for c in self.clauses)
        object.__setattr__(self, "clauses", clauses)
        if self.num_vars < 0:
            raise ValueError("num_vars must be nonnegative")
        for c in clauses:
            for l in c:
                if l == 0 or abs(l) > self.num_vars:
                    raise ValueError(f"literal {l} outside 1..{self.num_vars}")

    @classmethod
    def from_clauses(cls, clauses: Iterable[Iterable[int]], num_vars: int | None = None) -> "CnfFormula":
        cl = [normalize_clause(c) for c in clauses]
        top = max((abs(l) for c in cl for l in c), default=0)
        return cls(tuple(cl), top if num_vars is None else max(num_vars, top))

    def __len__(self) -> int:
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    def variables(self) -> set[int]:
        return {abs(l) for c in self.clauses for l in c}

    def conjoin(self, other: "CnfFormula") -> "CnfFormula":
        return CnfFormula(self.clauses + other.clauses, max(self.num_vars, other.num_vars))

    def with_num_vars(self, n: int) -> "CnfFormula":
        return CnfFormula(self.clauses, max(n, self.num_vars))


class DimacsError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_dimacs(source: str | IO[str]) -> CnfFormula:
    """Parse DIMACS CNF from a string or text stream.

    A ``%`` line ends the clause section (SATLIB style); anything after it is
    ignored with a warning.  Clauses may span lines.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    header = None
    clauses: list[Clause] = []
    current: list[int] = []
    current_line = None
    lineno = 0
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            log.warning("line %d: '%%' terminator, ignoring rest of input", lineno)
            break
        if line.startswith("p"):
            if header is not None:
                raise DimacsError("duplicate header", lineno)
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed header {line!r}", lineno)
            try:
                header = (int(parts[2]), int(parts[3]))
            except ValueError:
                raise DimacsError(f"malformed header {line!r}", lineno) from None
            if header[0] < 0 or header[1] < 0:
                raise DimacsError(f"malformed header {line!r}", lineno)
            continue
        if header is None:
            raise DimacsError("clause before header", lineno)
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad token {tok!r}", lineno) from None
            if lit == 0:
                clauses.append(normalize_clause(current))
                current = []
                current_line = None
                continue
            if abs(lit) > header[0]:
                raise DimacsError(f"literal {lit} exceeds declared {header[0]} variables", lineno)
            if current_line is None:
                current_line = lineno
            current.append(lit)
    if header is None:
        raise DimacsError("missing header")
    if current:
        raise DimacsError("clause missing terminating 0", current_line)
    if len(clauses) != header[1]:
        raise DimacsError(f"clause count mismatch: header says {header[1]}, found {len(clauses)}", lineno)
    return CnfFormula(tuple(clauses), header[0])


def read_dimacs(path) -> CnfFormula:
    with open(path) as fh:
        return parse_dimacs(fh)


def emit_dimacs(f: CnfFormula, comments: Sequence[str] = ()) -> str:
    out = [f"c {c}" for c in comments]
    out.append(f"p cnf {f.num_vars} {len(f.clauses)}")
    out.extend(" ".join(map(str, c + (0,))) for c in f.clauses)
    return "\n".join(out) + "\n"


def write_dimacs(f: CnfFormula, path, comments: Sequence[str] = ()) -> None:
    with open(path, "w") as fh:
        fh.write(emit_dimacs(f, comments))


def cvr(f: CnfFormula) -> float:
    """Clause-variable ratio."""
    if f.num_vars < 1:
        raise ValueError("clause-variable ratio undefined for a zero-variable formula")
    return len(f.clauses) / f.num_vars


class Assignment:
    """Tri-state assignment over variables ``1..num_vars``."""

    __slots__ = ("_vals",)

    def __init__(self, num_vars: int = 0, true_lits: Iterable[int] = ()):
        self._vals: list = [None] * (num_vars + 1)
        for l in true_lits:
            self.assign(l)

    @property
    def num_vars(self) -> int:
        return len(self._vals) - 1

    def assign(self, lit: int) -> None:
        v = abs(lit)
        if v >= len(self._vals):
            self._vals.extend([None] * (v + 1 - len(self._vals)))
        val = lit > 0
        if self._vals[v] is not None and self._vals[v] != val:
            raise ValueError(f"variable {v} already assigned {self._vals[v]}")
        self._vals[v] = val

    def value(self, lit: int):
        """True/False for an assigned literal, None otherwise."""
        v = abs(lit)
        if v >= len(self._vals) or self._vals[v] is None:
            return None
        return self._vals[v] if lit > 0 else not self._vals[v]

    def __getitem__(self, var: int):
        return self.value(var)

    def true_literals(self) -> list[int]:
        return [v if b else -v for v, b in enumerate(self._vals) if v and b is not None]

    def satisfies(self, clause: Iterable[int]) -> bool:
        return any(self.value(l) is True for l in clause)

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return set(self.true_literals()) == set(other.true_literals())

    def __repr__(self):
        return f"Assignment({self.true_literals()})"


@dataclass
class PropagationResult:
    final: Assignment
    conflict: bool
    implied: list = field(default_factory=list)

    def implies(self, lit: int) -> bool:
        return self.final.value(lit) is True


class Propagator:
    """Two-watched-literal unit propagation over a growing clause database.

    Each :meth:`propagate` call starts from the empty assignment, so one
    instance can answer many independent queries.  Not thread-safe.
    """

    def __init__(self, clauses: Iterable[Iterable[int]] = (), num_vars: int = 0):
        self.num_vars = 0
        self._clauses: list[list[int]] = []
        self._units: list[int] = []
        self._has_empty = False
        self._watches: list[list[int]] = [[], []]
        self._vals: list[int] = [0]
        self._grow(num_vars)
        for c in clauses:
            self.add_clause(c)

    def _grow(self, n: int) -> None:
        if n > self.num_vars:
            extra = n - self.num_vars
            self._vals.extend([0] * extra)
            self._watches.extend([] for _ in range(2 * extra))
            self.num_vars = n

    @staticmethod
    def _code(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def add_clause(self, clause: Iterable[int]) -> None:
        c = list(normalize_clause(clause))
        if not c:
            self._has_empty = True
            return
        self._grow(max(abs(l) for l in c))
        if len(c) == 1:
            self._units.append(c[0])
            return
        idx = len(self._clauses)
        self._clauses.append(c)
        self._watches[self._code(c[0])].append(idx)
        self._watches[self._code(c[1])].append(idx)

    def add_clauses(self, clauses: Iterable[Iterable[int]]) -> None:
        for c in clauses:
            self.add_clause(c)

    def _run(self, assumptions: Iterable[int]):
        """Return (conflict, trail, n_seeded); ``self._vals`` is reset afterwards."""
        vals = self._vals
        trail: list[int] = []
        conflict = self._has_empty
        if not conflict:
            for lit in list(assumptions) + self._units:
                v = lit if lit > 0 else -lit
                if v > self.num_vars:
                    self._grow(v)
                    vals = self._vals
                cur = vals[v]
                want = 1 if lit > 0 else -1
                if cur == 0:
                    vals[v] = want
                    trail.append(lit)
                elif cur != want:
                    conflict = True
                    break
        n_assumed = len(trail)
        head = 0
        clauses = self._clauses
        watches = self._watches
        while not conflict and head < len(trail):
            lit = trail[head]
            head += 1
            false_lit = -lit
            code = 2 * false_lit if false_lit > 0 else -2 * false_lit + 1
            wl = watches[code]
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
                    lv = vals[l] if l > 0 else -vals[-l]
                    if lv != -1:
                        c[1], c[k] = l, c[1]
                        watches[2 * l if l > 0 else -2 * l + 1].append(ci)
                        wl[i] = wl[-1]
                        wl.pop()
                        moved = True
                        break
                if moved:
                    continue
                if ov == -1:
                    conflict = True
                    break
                v = other if other > 0 else -other
                vals[v] = 1 if other > 0 else -1
                trail.append(other)
                i += 1
        for l in trail:
            vals[l if l > 0 else -l] = 0
        return conflict, trail, n_assumed

    def propagate(self, assumptions: Iterable[int] = ()) -> PropagationResult:
        assumptions = list(assumptions)
        conflict, trail, _ = self._run(assumptions)
        final = Assignment(self.num_vars)
        for l in trail:
            final.assign(l)
        assumed = set(assumptions)
        return PropagationResult(final, conflict, [l for l in trail if l not in assumed])

    def derives(self, assumptions: Iterable[int], lit: int | None = None) -> bool:
        """True if UP under ``assumptions`` conflicts or sets ``lit`` true."""
        conflict, trail, _ = self._run(assumptions)
        if conflict:
            return True
        return lit is not None and lit in set(trail)


def unit_propagate(f: CnfFormula, assumptions: Iterable[int] = ()) -> PropagationResult:
    """Unit-propagation fixpoint of ``f`` under ``assumptions``."""
    return Propagator(f.clauses, f.num_vars).propagate(assumptions)
