"""Constructed chunked formulas with known proofdoors."""
from __future__ import annotations

from .chunking import ChunkSpec, ChunkedFormula, build_chunked
from .cnf import CnfFormula


def simple_chain(k: int) -> tuple[CnfFormula, ChunkSpec]:
    """``x_0, x_0 -> x_1, ..., not x_{k-1}`` split one implication per chunk.

    Unit propagation alone refutes it.  Variables are ``1..k``.
    """
    if k < 2:
        raise ValueError("need at least 2 chunks")
    clauses = [(1,)] + [(-i, i + 1) for i in range(1, k)] + [(-k,)]
    ranges = [(0, 2)] + [(i, i + 1) for i in range(2, k)] + [(k, k + 1)]
    return CnfFormula(tuple(clauses), k), ChunkSpec.from_ranges(ranges)


def gadget_chain(k: int) -> tuple[CnfFormula, ChunkSpec]:
    """A BMC-like chain where each step needs a case split, not just propagation.

    Chunk ``i < k-1`` holds the gadget ``x_i -> x_{i+1}`` written as
    ``(-x a b) (-x a -b) (-x -a b) (-x -a -b y)`` over fresh ``a, b``; chunk
    0 also holds the unit ``x_0`` and the last chunk is ``-x_{k-1}``.  The
    strongest interpolant at every cut is the single unit ``x_{t+1}``.
    """
    if k < 2:
        raise ValueError("need at least 2 chunks")
    # step i uses x_i = 3i+1, a_i = 3i+2, b_i = 3i+3; x_{i+1} = 3(i+1)+1
    clauses, ranges = [], []
    for i in range(k - 1):
        x, a, b, y = 3 * i + 1, 3 * i + 2, 3 * i + 3, 3 * i + 4
        start = len(clauses)
        if i == 0:
            clauses.append((x,))
        clauses += [(-x, a, b), (-x, a, -b), (-x, -a, b), (-x, -a, -b, y)]
        ranges.append((start, len(clauses)))
    last = 3 * (k - 1) + 1
    clauses.append((-last,))
    ranges.append((len(clauses) - 1, len(clauses)))
    return CnfFormula(tuple(clauses), last), ChunkSpec.from_ranges(ranges, [f"step{i}" for i in range(k)])


def chunked(pair: tuple[CnfFormula, ChunkSpec]) -> ChunkedFormula:
    return build_chunked(*pair)


# -- timing series with a known growth class ---------------------------------------

def timing_series(kind: str, seed: int = 0, noise: float = 0.0, n: int = 20):
    """Synthetic per-depth times growing linearly, cubically or exponentially in size.

    Sizes grow linearly with depth from a seeded offset and step.  Times are
    a function of the size rescaled to ``[0, 1]`` with seeded coefficients,
    then multiplied by ``1 + noise * N(0, 1)`` and clipped at zero.
    """
    import numpy as np
    from .scaling import EXPONENTIAL, LINEAR, POLYNOMIAL, TimingSeries

    rng = np.random.default_rng(seed)
    ks = np.arange(1, n + 1)
    sizes = rng.uniform(50, 200) + rng.uniform(20, 60) * ks
    x = (sizes - sizes[0]) / (sizes[-1] - sizes[0])
    if kind == LINEAR:
        t = rng.uniform(0.5, 2) + rng.uniform(5, 20) * x
    elif kind == POLYNOMIAL:
        t = rng.uniform(0.01, 0.1) + rng.uniform(5, 20) * x ** 3
    elif kind == EXPONENTIAL:
        t = rng.uniform(0.01, 0.1) * np.exp(rng.uniform(4, 8) * x)
    else:
        raise ValueError(f"unknown growth class {kind!r}")
    t = np.maximum(t * (1 + noise * rng.standard_normal(n)), 0.0)
    return TimingSeries.from_lists(ks, sizes, t, family=f"{kind}-{seed}")


def bifurcated_series(n: int = 20, seed: int = 0, noise: float = 0.0):
    """Odd depths grow exponentially and even depths linearly."""
    from .scaling import EXPONENTIAL, LINEAR, TimingSeries

    odd = timing_series(EXPONENTIAL, seed, noise, n)
    even = timing_series(LINEAR, seed + 1, noise, n)
    # share one size axis so the two subsequences interleave cleanly
    pts = [(p.k, p.size, (odd if p.k % 2 else even).points[i].time) for i, p in enumerate(odd.points)]
    ks, sizes, times = zip(*pts)
    return TimingSeries.from_lists(ks, sizes, times, family=f"bifurcated-{seed}")
