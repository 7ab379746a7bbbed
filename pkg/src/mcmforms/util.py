"""Shared small helpers: seeded RNG streams, canonical JSON, F_p linear algebra.

Randomness discipline: every randomized unit of work draws from its own
child stream derived from (master seed, stage id, unit index), so results
are reproducible independently of execution order.
"""

from __future__ import annotations

import json
import random
from typing import Iterable, List, Sequence


def child_rng(master_seed: int, stage: str, unit) -> random.Random:
    """Return a deterministic RNG stream for one unit of work.

    CPython seeds str deterministically (sha512), so the composite key
    gives stable, order-independent streams.
    """
    return random.Random(f"{master_seed}:{stage}:{unit}")


def canonical_json_bytes(obj) -> bytes:
    """Serialize with sorted keys and fixed separators, for byte-stable reports."""
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")).encode("utf-8")


def mat_mod_p(rows: Iterable[Sequence[int]], p: int) -> List[List[int]]:
    return [[int(x) % p for x in row] for row in rows]


def rank_mod_p(rows: Iterable[Sequence[int]], p: int) -> int:
    """Rank of a matrix over F_p by Gaussian elimination."""
    m = mat_mod_p(rows, p)
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    rank = 0
    row = 0
    for col in range(ncols):
        pivot = None
        for i in range(row, nrows):
            if m[i][col]:
                pivot = i
                break
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        inv = pow(m[row][col], p - 2, p)
        m[row] = [(x * inv) % p for x in m[row]]
        for i in range(nrows):
            if i != row and m[i][col]:
                f = m[i][col]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[row])]
        rank += 1
        row += 1
        if row == nrows:
            break
    return rank


def kernel_basis_mod_p(rows: Iterable[Sequence[int]], p: int, ncols: int) -> List[List[int]]:
    """Basis of the right kernel {x : M x = 0} over F_p."""
    m = mat_mod_p(rows, p)
    if not m:
        return [[1 if i == j else 0 for i in range(ncols)] for j in range(ncols)]
    pivots = []
    row = 0
    nrows = len(m)
    for col in range(ncols):
        pivot = None
        for i in range(row, nrows):
            if m[i][col]:
                pivot = i
                break
        if pivot is None:
            continue
        m[row], m[pivot] = m[pivot], m[row]
        inv = pow(m[row][col], p - 2, p)
        m[row] = [(x * inv) % p for x in m[row]]
        for i in range(nrows):
            if i != row and m[i][col]:
                f = m[i][col]
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[row])]
        pivots.append(col)
        row += 1
        if row == nrows:
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [0] * ncols
        vec[fc] = 1
        for r, pc in enumerate(pivots):
            vec[pc] = (-m[r][fc]) % p
        basis.append(vec)
    return basis
