"""
codes_linalg.py

Exact linear algebra and beamforming-vector families.

- ExactMatrix: an integer matrix, read over the rationals or over GF(p).
- rank_exact: fraction-free (Bareiss) elimination on Python ints.
- rank_gfp: Gauss-Jordan elimination modulo a prime.
- mds_generator: r x K Vandermonde generator; any r columns independent.
- binary_vectors: the 2^x - 1 nonzero 0-1 columns, column k-1 is the
  binary expansion of k (row 0 holds the least significant bit).
- project_to_dimension: integer projection to fewer rows that keeps the
  rank of every listed group of columns.

No floating point is used in this module.
"""

#####################################
# Import Modules
#####################################

# import from standard library
from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

# import external modules
import numpy as np

# import from local modules
from utils.utils_logger import logger

Column = tuple[int, ...]

# exhaustive MDS self-check runs up to this many columns
MDS_CERTIFY_MAX_K = 12
MAX_BINARY_DIM = 16

#####################################
# Exact Matrix
#####################################


@dataclass(frozen=True)
class ExactMatrix:
    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        entries = tuple(tuple(int(v) for v in row) for row in self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) != self.rows or any(len(row) != self.cols for row in entries):
            raise ValueError(f"entries do not match declared shape {self.rows}x{self.cols}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]], cols: int | None = None) -> ExactMatrix:
        rows = [tuple(r) for r in rows]
        width = cols if cols is not None else (len(rows[0]) if rows else 0)
        return cls(len(rows), width, tuple(rows))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[int]], rows: int | None = None) -> ExactMatrix:
        """Stack columns side by side; `rows` is needed when there are no columns."""
        columns = [tuple(c) for c in columns]
        height = rows if rows is not None else (len(columns[0]) if columns else 0)
        if any(len(c) != height for c in columns):
            raise ValueError(f"all columns must have length {height}")
        return cls(height, len(columns), tuple(tuple(c[i] for c in columns) for i in range(height)))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> ExactMatrix:
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    def columns(self) -> list[Column]:
        return [tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)]

    def select_columns(self, indices: Iterable[int]) -> ExactMatrix:
        cols = self.columns()
        return ExactMatrix.from_columns([cols[j] for j in indices], rows=self.rows)

    def hstack(self, other: ExactMatrix) -> ExactMatrix:
        if other.rows != self.rows:
            raise ValueError(f"row mismatch in hstack: {self.rows} vs {other.rows}")
        return ExactMatrix(self.rows, self.cols + other.cols, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def to_lists(self) -> list[list[int]]:
        return [list(row) for row in self.entries]


#####################################
# Rank
#####################################


def rank_exact(m: ExactMatrix) -> int:
    """Rank over the rationals by Bareiss elimination; every division is exact."""
    a = [list(row) for row in m.entries]
    rows, cols = m.rows, m.cols
    rank = 0
    prev_pivot = 1
    for col in range(cols):
        if rank == rows:
            break
        pivot_row = next((i for i in range(rank, rows) if a[i][col] != 0), None)
        if pivot_row is None:
            continue
        a[rank], a[pivot_row] = a[pivot_row], a[rank]
        pivot = a[rank][col]
        for i in range(rank + 1, rows):
            factor = a[i][col]
            for j in range(col + 1, cols):
                a[i][j] = (a[i][j] * pivot - factor * a[rank][j]) // prev_pivot
            a[i][col] = 0
        prev_pivot = pivot
        rank += 1
    return rank


def rank_gfp(m: ExactMatrix, p: int) -> int:
    """Rank over GF(p)."""
    if p < 2:
        raise ValueError(f"p must be a prime >= 2, got {p}")
    a = [[v % p for v in row] for row in m.entries]
    rows, cols = m.rows, m.cols
    rank = 0
    for col in range(cols):
        pivot_row = next((i for i in range(rank, rows) if a[i][col]), None)
        if pivot_row is None:
            continue
        a[rank], a[pivot_row] = a[pivot_row], a[rank]
        inv = pow(a[rank][col], -1, p)
        a[rank] = [(v * inv) % p for v in a[rank]]
        for i in range(rows):
            if i != rank and a[i][col]:
                f = a[i][col]
                a[i] = [(vi - f * vr) % p for vi, vr in zip(a[i], a[rank])]
        rank += 1
        if rank == rows:
            break
    return rank


def rank_of_columns(columns: Sequence[Sequence[int]], rows: int) -> int:
    """Rank of the matrix whose columns are `columns` (0 for an empty list)."""
    if not columns:
        return 0
    return rank_exact(ExactMatrix.from_columns(columns, rows=rows))


#####################################
# Primes
#####################################


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def smallest_prime_at_least(n: int) -> int:
    candidate = max(2, n)
    while not is_prime(candidate):
        candidate += 1
    return candidate


#####################################
# Vector Families
#####################################


@dataclass(frozen=True)
class VectorFamily:
    """Ordered length-`dim` integer columns of one kind ("mds" or "binary_enumeration")."""

    dim: int
    vectors: tuple[Column, ...]
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("mds", "binary_enumeration"):
            raise ValueError(f"unknown vector family kind {self.kind!r}")
        if any(len(v) != self.dim for v in self.vectors):
            raise ValueError(f"every vector must have length {self.dim}")

    def __len__(self) -> int:
        return len(self.vectors)

    def matrix(self, indices: Iterable[int]) -> ExactMatrix:
        return ExactMatrix.from_columns([self.vectors[i] for i in indices], rows=self.dim)


def mds_generator(K: int, r: int, p: int | None = None) -> ExactMatrix:
    """
    r x K Vandermonde generator over GF(p): column j is (1, a_j, ..., a_j^(r-1)) mod p
    with a_j = j. Any r columns are independent over GF(p), and so over the
    rationals as well. For K <= 12 every r-subset is checked at construction.
    """
    if K < 1 or r < 1:
        raise ValueError(f"K and r must be positive, got K={K}, r={r}")
    if r > K:
        raise ValueError(f"r={r} exceeds K={K}")
    if p is None:
        p = smallest_prime_at_least(K)
    if not is_prime(p):
        raise ValueError(f"p={p} is not prime")
    if p < K:
        raise ValueError(f"GF({p}) has fewer than K={K} distinct evaluation points")

    entries = tuple(tuple(pow(a, i, p) for a in range(K)) for i in range(r))
    g = ExactMatrix(r, K, entries)

    if K <= MDS_CERTIFY_MAX_K:
        for subset in itertools.combinations(range(K), r):
            if rank_gfp(g.select_columns(subset), p) != r:
                logger.error(f"MDS self-check failed for K={K}, r={r}, p={p} on columns {subset}")
                raise RuntimeError(f"Vandermonde submatrix {subset} is singular over GF({p})")
    return g


def mds_family(K: int, r: int, p: int | None = None) -> VectorFamily:
    g = mds_generator(K, r, p)
    return VectorFamily(dim=r, vectors=tuple(g.columns()), kind="mds")


def binary_vector(k: int, x: int) -> Column:
    """Binary expansion of k as a length-x column, least significant bit first."""
    return tuple((k >> i) & 1 for i in range(x))


def binary_vectors(x: int) -> VectorFamily:
    if not 1 <= x <= MAX_BINARY_DIM:
        raise ValueError(f"x must lie in 1..{MAX_BINARY_DIM}, got {x}")
    return VectorFamily(dim=x, vectors=tuple(binary_vector(k, x) for k in range(1, 2**x)), kind="binary_enumeration")


#####################################
# Projection
#####################################


def project_to_dimension(
    vectors: Sequence[Sequence[int]],
    groups: Iterable[Iterable[int]],
    x: int,
    seed: int = 0,
    max_attempts: int = 64,
) -> list[Column]:
    """
    Map every vector through one integer x-row matrix P so that each listed
    group of vector indices keeps its rank. Returns the projected vectors.
    """
    vectors = [tuple(int(c) for c in v) for v in vectors]
    groups = [tuple(sorted(set(g))) for g in groups]
    if not vectors:
        return []
    dim = len(vectors[0])
    targets = [rank_of_columns([vectors[i] for i in grp], dim) for grp in groups]
    if targets and max(targets) > x:
        raise ValueError(f"cannot keep a rank-{max(targets)} group inside {x} dimensions")
    if x >= dim:
        return [v + (0,) * (x - dim) for v in vectors]

    rng = np.random.default_rng(seed)
    for attempt in range(max_attempts):
        spread = 2 + attempt
        proj = [[int(v) for v in row] for row in rng.integers(-spread, spread + 1, size=(x, dim))]
        projected = [tuple(sum(proj[i][k] * v[k] for k in range(dim)) for i in range(x)) for v in vectors]
        if all(
            rank_of_columns([projected[i] for i in grp], x) == target for grp, target in zip(groups, targets)
        ):
            logger.debug(f"Projected {len(vectors)} vectors from {dim} to {x} rows on attempt {attempt + 1}.")
            return projected
    raise RuntimeError(f"no rank-preserving projection to {x} rows found in {max_attempts} attempts")
