"""Ordered chunk decompositions A_0..A_{K-1} of a CNF and their cut variables.

Chunks are numbered from zero.  Cut ``j`` separates chunks ``0..j`` from
``j+1..K-1``; its shared variables are ``cut_vars[j]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .cnf import Clause, CnfFormula

CLAUSE_RANGES = "clause-ranges"
VARIABLE_MAP = "variable-map"


class ChunkError(ValueError):
    pass


@dataclass(frozen=True)
class ChunkSpec:
    mode: str
    ranges: tuple = ()
    var_to_chunk: Mapping[int, int] = field(default_factory=dict)
    labels: tuple = ()

    @classmethod
    def from_ranges(cls, ranges: Iterable[Sequence[int]], labels: Iterable[str] = ()) -> "ChunkSpec":
        return cls(CLAUSE_RANGES, tuple((int(a), int(b)) for a, b in ranges), {}, tuple(labels))

    @classmethod
    def from_var_map(cls, var_to_chunk: Mapping[int, int], labels: Iterable[str] = ()) -> "ChunkSpec":
        return cls(VARIABLE_MAP, (), {int(v): int(c) for v, c in var_to_chunk.items()}, tuple(labels))

    @classmethod
    def from_json(cls, data: dict | str) -> "ChunkSpec":
        if isinstance(data, str):
            data = json.loads(data)
        mode = data.get("mode")
        labels = data.get("labels", ())
        if mode == CLAUSE_RANGES:
            try:
                return cls.from_ranges(data["ranges"], labels)
            except (KeyError, TypeError, ValueError) as e:
                raise ChunkError(f"bad clause-ranges chunk map: {e}") from None
        if mode == VARIABLE_MAP:
            try:
                return cls.from_var_map(data["vars"], labels)
            except (KeyError, TypeError, ValueError, AttributeError) as e:
                raise ChunkError(f"bad variable-map chunk map: {e}") from None
        raise ChunkError(f"unknown chunk-map mode {mode!r}")

    @classmethod
    def load(cls, path) -> "ChunkSpec":
        with open(path) as fh:
            try:
                return cls.from_json(json.load(fh))
            except json.JSONDecodeError as e:
                raise ChunkError(f"chunk map is not JSON: {e}") from None

    def to_json(self) -> dict:
        out: dict = {"mode": self.mode}
        if self.mode == CLAUSE_RANGES:
            out["ranges"] = [list(r) for r in self.ranges]
        else:
            out["vars"] = {str(v): c for v, c in sorted(self.var_to_chunk.items())}
        if self.labels:
            out["labels"] = list(self.labels)
        return out

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)


@dataclass(frozen=True)
class ChunkedFormula:
    base: CnfFormula
    chunks: tuple
    cut_vars: tuple
    local_vars: tuple
    labels: tuple = ()

    @property
    def k(self) -> int:
        """Number of chunks."""
        return len(self.chunks)

    def chunk_formula(self, i: int) -> CnfFormula:
        return CnfFormula(self.chunks[i], self.base.num_vars)

    def suffix(self, i: int) -> CnfFormula:
        """Conjunction of chunks ``i..K-1``."""
        return CnfFormula(tuple(c for ch in self.chunks[i:] for c in ch), self.base.num_vars)

    def prefix(self, i: int) -> CnfFormula:
        """Conjunction of chunks ``0..i``."""
        return CnfFormula(tuple(c for ch in self.chunks[: i + 1] for c in ch), self.base.num_vars)

    def ranges_spec(self) -> ChunkSpec:
        out, start = [], 0
        for ch in self.chunks:
            out.append((start, start + len(ch)))
            start += len(ch)
        return ChunkSpec.from_ranges(out, self.labels)


def _chunk_vars(chunk: Iterable[Clause]) -> set[int]:
    return {abs(l) for c in chunk for l in c}


def _from_chunks(base: CnfFormula, chunks: list[tuple], labels: tuple) -> ChunkedFormula:
    if len(chunks) < 2:
        raise ChunkError("need at least 2 chunks")
    for i, ch in enumerate(chunks):
        if not ch:
            raise ChunkError(f"chunk {i} has no clauses")
    cvars = [_chunk_vars(ch) for ch in chunks]
    k = len(chunks)
    later = [set() for _ in range(k + 1)]
    for i in range(k - 1, -1, -1):
        later[i] = later[i + 1] | cvars[i]
    cuts, seen = [], set()
    for j in range(k - 1):
        seen |= cvars[j]
        cuts.append(frozenset(seen & later[j + 1]))
    local = tuple(frozenset(cvars[i] - later[i + 1]) for i in range(k))
    if labels and len(labels) != k:
        raise ChunkError(f"{len(labels)} labels for {k} chunks")
    return ChunkedFormula(base, tuple(chunks), tuple(cuts), local, tuple(labels))


def build_chunked(f: CnfFormula, spec: ChunkSpec) -> ChunkedFormula:
    if spec.mode == CLAUSE_RANGES:
        ranges = sorted(spec.ranges)
        pos = 0
        for a, b in ranges:
            if a < pos:
                raise ChunkError(f"overlapping ranges at clause {a}")
            if a > pos:
                raise ChunkError(f"clauses {pos}..{a - 1} not covered")
            if b <= a:
                raise ChunkError(f"chunk [{a},{b}) has no clauses")
            pos = b
        if pos != len(f.clauses):
            raise ChunkError(f"ranges cover {pos} of {len(f.clauses)} clauses")
        chunks = [f.clauses[a:b] for a, b in ranges]
        return _from_chunks(f, chunks, spec.labels)
    if spec.mode == VARIABLE_MAP:
        m = spec.var_to_chunk
        missing = sorted(f.variables() - set(m))
        if missing:
            raise ChunkError(f"variables not covered by chunk map: {missing[:10]}")
        if any(c < 0 for c in m.values()):
            raise ChunkError("negative chunk index")
        k = max(m.values()) + 1 if m else 0
        buckets: list[list] = [[] for _ in range(k)]
        for c in f.clauses:
            buckets[clause_chunk(c, m)].append(c)
        return _from_chunks(f, [tuple(b) for b in buckets], spec.labels)
    raise ChunkError(f"unknown chunk-map mode {spec.mode!r}")


def var_chunk_map(cf: ChunkedFormula) -> dict[int, int]:
    """Map each variable to the chunk holding its last occurrence."""
    m: dict[int, int] = {}
    for i, ch in enumerate(cf.chunks):
        for c in ch:
            for l in c:
                m[abs(l)] = i
    return m


def clause_chunk(clause: Iterable[int], m: Mapping[int, int]) -> int:
    """Largest chunk index among the clause's variables; the empty clause maps to 0."""
    best = 0
    for l in clause:
        try:
            best = max(best, m[abs(l)])
        except KeyError:
            raise ChunkError(f"variable {abs(l)} missing from chunk map") from None
    return best
