"""Clause-order scramblers that keep the clause multiset and satisfiability.

Permutations come from a SplitMix64 stream so a record reproduces the same
order on any platform.  Variables are never renamed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

from .chunking import ChunkSpec, ChunkedFormula
from .cnf import CnfFormula

BY_ITERATION = "by-iteration"
BY_CLAUSE = "by-clause"

_MASK = (1 << 64) - 1


class ScrambleError(ValueError):
    pass


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection, free of modulo bias."""
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            r = self.next()
            if r < limit:
                return r % n


def permutation(n: int, seed: int) -> list[int]:
    """Fisher-Yates shuffle of ``range(n)`` driven by SplitMix64."""
    perm = list(range(n))
    rng = SplitMix64(seed)
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


@dataclass(frozen=True)
class ScrambleRecord:
    """``permutation[i]`` is the original index of the block placed at position ``i``.

    Blocks are chunks for by-iteration and single clauses for by-clause;
    ``block_sizes`` lists the clause count of each original block.
    """

    kind: str
    seed: int
    permutation: tuple
    block_sizes: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in (BY_ITERATION, BY_CLAUSE):
            raise ScrambleError(f"unknown scramble kind {self.kind!r}")
        if sorted(self.permutation) != list(range(len(self.permutation))):
            raise ScrambleError("permutation is not a bijection")
        if self.block_sizes and len(self.block_sizes) != len(self.permutation):
            raise ScrambleError("block sizes do not match the permutation")

    @property
    def num_clauses(self) -> int:
        return sum(self.block_sizes) if self.block_sizes else len(self.permutation)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "seed": self.seed, "permutation": list(self.permutation)}
        if self.kind == BY_ITERATION:
            out["block_sizes"] = list(self.block_sizes)
        return out

    @classmethod
    def from_json(cls, data: dict | str) -> "ScrambleRecord":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            return cls(data["kind"], int(data["seed"]), tuple(int(x) for x in data["permutation"]),
                       tuple(int(x) for x in data.get("block_sizes", ())))
        except (KeyError, TypeError) as e:
            raise ScrambleError(f"malformed scramble record: {e}") from None

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "ScrambleRecord":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def scramble_by_iteration(cf: ChunkedFormula, seed: int,
                          perm: list[int] | None = None) -> tuple[CnfFormula, ScrambleRecord]:
    """Concatenate whole chunks in a seeded order, keeping each chunk's clauses in place.

    ``perm`` overrides the seeded permutation.
    """
    if cf.k < 1:
        raise ScrambleError("need at least one chunk")
    perm = permutation(cf.k, seed) if perm is None else list(perm)
    rec = ScrambleRecord(BY_ITERATION, seed, tuple(perm), tuple(len(ch) for ch in cf.chunks))
    if len(perm) != cf.k:
        raise ScrambleError(f"permutation has {len(perm)} entries for {cf.k} chunks")
    clauses = tuple(c for i in perm for c in cf.chunks[i])
    return CnfFormula(clauses, cf.base.num_vars), rec


def scrambled_chunk_spec(cf: ChunkedFormula, rec: ScrambleRecord) -> ChunkSpec:
    """Chunk map for the by-iteration output, listing chunks in their new order."""
    if rec.kind != BY_ITERATION or len(rec.permutation) != cf.k:
        raise ScrambleError("record does not describe a by-iteration scramble of this formula")
    ranges, pos = [], 0
    for i in rec.permutation:
        ranges.append((pos, pos + len(cf.chunks[i])))
        pos += len(cf.chunks[i])
    labels = [cf.labels[i] for i in rec.permutation] if cf.labels else [f"chunk{i}" for i in rec.permutation]
    return ChunkSpec.from_ranges(ranges, labels)


def scramble_by_clause(f: CnfFormula, seed: int,
                       perm: list[int] | None = None) -> tuple[CnfFormula, ScrambleRecord]:
    """Permute all clauses globally; literal order inside a clause is untouched."""
    n = len(f.clauses)
    perm = permutation(n, seed) if perm is None else list(perm)
    rec = ScrambleRecord(BY_CLAUSE, seed, tuple(perm))
    if len(perm) != n:
        raise ScrambleError(f"permutation has {len(perm)} entries for {n} clauses")
    return CnfFormula(tuple(f.clauses[i] for i in perm), f.num_vars), rec


def unscramble(f: CnfFormula, rec: ScrambleRecord) -> CnfFormula:
    """Undo a scramble.  For by-iteration the result lists chunks in original order."""
    if len(f.clauses) != rec.num_clauses:
        raise ScrambleError(f"record covers {rec.num_clauses} clauses, formula has {len(f.clauses)}")
    if rec.kind == BY_CLAUSE:
        out = [None] * len(rec.permutation)
        for pos, orig in enumerate(rec.permutation):
            out[orig] = f.clauses[pos]
        return CnfFormula(tuple(out), f.num_vars)
    blocks = [None] * len(rec.permutation)
    pos = 0
    for orig in rec.permutation:
        size = rec.block_sizes[orig]
        blocks[orig] = f.clauses[pos:pos + size]
        pos += size
    return CnfFormula(tuple(c for b in blocks for c in b), f.num_vars)
