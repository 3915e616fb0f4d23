"""Clause absorption, DRAT partitioning into partial proofs, absorption heatmaps."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .chunking import ChunkError, clause_chunk
from .cnf import CnfFormula, Propagator
from .solver import DratTrace


def _propagator(f) -> Propagator:
    if isinstance(f, Propagator):
        return f
    return Propagator(f.clauses, f.num_vars)


def is_absorbed(f: CnfFormula | Propagator, c: Sequence[int]) -> bool:
    """Whether ``f`` absorbs ``c``.

    For every literal of ``c``, falsifying the others must make unit
    propagation set that literal or conflict.  The empty clause is absorbed
    iff propagation with no assumptions conflicts.
    """
    prop = _propagator(f)
    c = list(dict.fromkeys(c))
    if not c:
        return prop.derives([])
    for i, lit in enumerate(c):
        others = [-l for j, l in enumerate(c) if j != i]
        if not prop.derives(others, lit):
            return False
    return True


def absorbs_formula(f: CnfFormula | Propagator, g: CnfFormula) -> bool:
    prop = _propagator(f)
    return all(is_absorbed(prop, c) for c in g.clauses)


def absorption_fraction(f: CnfFormula | Propagator, i: CnfFormula) -> float:
    """Fraction of the clauses of ``i`` absorbed by ``f``; 1.0 for an empty ``i``."""
    if not i.clauses:
        return 1.0
    prop = _propagator(f)
    return sum(is_absorbed(prop, c) for c in i.clauses) / len(i.clauses)


EMPTY_TO_FIRST = "first"
EMPTY_TO_LAST = "last"


@dataclass(frozen=True)
class PartialProofs:
    base: CnfFormula
    additions: tuple
    chunk_of: tuple  # chunk index per addition
    k: int

    def added_upto(self, i: int) -> list:
        return [c for c, ch in zip(self.additions, self.chunk_of) if ch <= i]

    def prefix(self, i: int) -> CnfFormula:
        """Partial proof ``Pi_i``: the base formula plus additions of chunks ``<= i``."""
        if not 0 <= i < self.k:
            raise IndexError(i)
        added = tuple(self.added_upto(i))
        n = max([self.base.num_vars] + [abs(l) for c in added for l in c])
        return CnfFormula(self.base.clauses + added, n)

    @property
    def prefixes(self) -> list[CnfFormula]:
        return [self.prefix(i) for i in range(self.k)]


def partition_trace(t: DratTrace, m: Mapping[int, int], k: int, base: CnfFormula | None = None,
                    empty_clause: str = EMPTY_TO_LAST) -> PartialProofs:
    """Assign each DRAT addition to the chunk of its latest variable.

    The empty clause has no variables.  By default it goes to the last
    chunk; ``empty_clause="first"`` puts it in chunk 0, which makes every
    partial proof contradictory.
    """
    if k < 1:
        raise ValueError("need at least one chunk")
    chunks = []
    for idx, c in enumerate(t.additions):
        if not c:
            chunks.append(0 if empty_clause == EMPTY_TO_FIRST else k - 1)
            continue
        try:
            ch = clause_chunk(c, m)
        except ChunkError as e:
            raise ChunkError(f"trace addition {idx}: {e}") from None
        chunks.append(min(max(ch, 0), k - 1))
    base = base if base is not None else CnfFormula()
    return PartialProofs(base, tuple(tuple(c) for c in t.additions), tuple(chunks), k)


@dataclass
class AbsorptionMatrix:
    """Rows are partial proofs ``Pi_0..Pi_{K-1}``, columns interpolants ``I_1..I_{K-1}``."""

    h: np.ndarray

    @property
    def shape(self):
        return self.h.shape

    @property
    def row_labels(self) -> list[str]:
        return [f"Pi_{i}" for i in range(self.h.shape[0])]

    @property
    def col_labels(self) -> list[str]:
        return [f"I_{j + 1}" for j in range(self.h.shape[1])]

    def first_full_rows(self) -> list:
        """Per column, the first row with complete absorption (None if never)."""
        out = []
        for j in range(self.h.shape[1]):
            rows = np.nonzero(self.h[:, j] >= 1.0)[0]
            out.append(int(rows[0]) if len(rows) else None)
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row"] + self.col_labels)
        for label, row in zip(self.row_labels, self.h):
            w.writerow([label] + [f"{x:.6g}" for x in row])
        return buf.getvalue()

    def to_svg(self, cell: int = 16) -> str:
        """Grayscale heatmap; darker cells mean more absorption."""
        rows, cols = self.h.shape
        margin = 48
        width, height = margin + cols * cell + 8, margin + rows * cell + 8
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
               f'viewBox="0 0 {width} {height}">',
               f'<rect width="{width}" height="{height}" fill="white"/>',
               f'<text x="{margin}" y="14" font-size="11" font-family="sans-serif">interpolant I_j (columns)</text>',
               f'<text x="4" y="{margin - 6}" font-size="11" font-family="sans-serif">partial proof Pi_i</text>']
        for i in range(rows):
            for j in range(cols):
                level = int(round(255 * (1.0 - float(self.h[i, j]))))
                level = min(255, max(0, level))
                out.append(f'<rect x="{margin + j * cell}" y="{margin + i * cell}" width="{cell}" '
                           f'height="{cell}" fill="rgb({level},{level},{level})" stroke="#ccc" stroke-width="0.5"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def summary(self) -> dict:
        return {
            "rows": int(self.h.shape[0]),
            "cols": int(self.h.shape[1]),
            "row_labels": self.row_labels,
            "col_labels": self.col_labels,
            "incrementality_score": incrementality_score(self),
            "first_full_absorption_row": self.first_full_rows(),
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=1)


def _heatmap_row(args) -> list[float]:
    clauses, num_vars, interpolants = args
    prop = Propagator(clauses, num_vars)
    return [absorption_fraction(prop, itp) for itp in interpolants]


def heatmap(pp: PartialProofs, interpolants, jobs: int = 1) -> AbsorptionMatrix:
    """``h[i][j]`` is the fraction of ``I_{j+1}`` absorbed by ``Pi_i``.

    ``interpolants`` may be a :class:`~proofdoors.door.Proofdoor` or a list of
    CNFs; it must hold ``K-1`` entries for ``K`` partial proofs.
    """
    itps = list(getattr(interpolants, "interpolants", interpolants))
    if len(itps) != pp.k - 1:
        raise ValueError(f"{len(itps)} interpolants for {pp.k} partial proofs; expected {pp.k - 1}")
    h = np.zeros((pp.k, len(itps)))
    if jobs > 1:
        tasks = []
        for i in range(pp.k):
            f = pp.prefix(i)
            tasks.append((f.clauses, f.num_vars, itps))
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            for i, row in enumerate(ex.map(_heatmap_row, tasks)):
                h[i] = row
        return AbsorptionMatrix(h)
    prop = Propagator(pp.base.clauses, pp.base.num_vars)
    by_chunk: list[list] = [[] for _ in range(pp.k)]
    for c, ch in zip(pp.additions, pp.chunk_of):
        by_chunk[ch].append(c)
    for i in range(pp.k):
        prop.add_clauses(by_chunk[i])
        for j, itp in enumerate(itps):
            h[i, j] = absorption_fraction(prop, itp)
    return AbsorptionMatrix(h)


def incrementality_score(h: AbsorptionMatrix | np.ndarray | Sequence[Sequence[float]]) -> float:
    """Mean of ``h[i][j]`` over cells with ``i >= j``; 1.0 is fully incremental."""
    arr = np.asarray(getattr(h, "h", h), dtype=float)
    if arr.size == 0:
        return 1.0
    rows, cols = arr.shape
    mask = np.fromfunction(lambda i, j: i >= j, (rows, cols))
    return float(arr[mask].mean()) if mask.any() else 1.0
