import itertools

import numpy as np
import pytest

from coding.codes_linalg import (
    ExactMatrix,
    binary_vector,
    binary_vectors,
    is_prime,
    mds_family,
    mds_generator,
    project_to_dimension,
    rank_exact,
    rank_gfp,
    rank_of_columns,
    smallest_prime_at_least,
)
from tests.oracles import fraction_rank


def random_matrix(rng, rows, cols, low=-3, high=4, deficient=False):
    m = rng.integers(low, high, size=(rows, cols))
    if deficient and rows > 1:
        m[-1] = m[0] * 2 - m[1 % rows]
    return [[int(v) for v in row] for row in m]


@pytest.mark.parametrize("seed", range(12))
def test_rank_exact_matches_fraction_elimination(seed):
    rng = np.random.default_rng(seed)
    rows, cols = int(rng.integers(1, 6)), int(rng.integers(1, 6))
    entries = random_matrix(rng, rows, cols, deficient=seed % 2 == 0)
    m = ExactMatrix.from_rows(entries)
    assert rank_exact(m) == fraction_rank(m.columns(), rows)


def test_rank_handles_zero_columns_and_large_ints():
    m = ExactMatrix.from_rows([[0, 10**30, 1], [0, 2 * 10**30, 2], [0, 0, 5]])
    assert rank_exact(m) == 2
    assert rank_exact(ExactMatrix.zeros(3, 2)) == 0
    assert rank_of_columns([], 3) == 0


def test_rank_gfp_differs_from_rational_when_it_should():
    m = ExactMatrix.from_rows([[1, 1], [1, 3]])
    assert rank_exact(m) == 2
    assert rank_gfp(m, 2) == 1
    assert rank_gfp(m, 5) == 2


def test_from_columns_and_hstack():
    a = ExactMatrix.from_columns([(1, 0), (0, 1)])
    b = ExactMatrix.from_columns([(1, 1)])
    stacked = a.hstack(b)
    assert stacked.rows == 2 and stacked.cols == 3
    assert stacked.columns() == [(1, 0), (0, 1), (1, 1)]
    with pytest.raises(ValueError):
        a.hstack(ExactMatrix.zeros(3, 1))
    with pytest.raises(ValueError):
        ExactMatrix(2, 2, ((1, 2),))


@pytest.mark.parametrize("n,expected", [(1, 2), (2, 2), (4, 5), (8, 11), (13, 13), (14, 17)])
def test_smallest_prime_at_least(n, expected):
    assert smallest_prime_at_least(n) == expected
    assert is_prime(expected)


MDS_GRID = [(K, r) for K in range(1, 11) for r in range(1, K + 1)]


@pytest.mark.parametrize("K,r", MDS_GRID, ids=[f"K{K}-r{r}" for K, r in MDS_GRID])
def test_mds_every_r_subset_is_independent(K, r):
    p = smallest_prime_at_least(K)
    g = mds_generator(K, r)
    assert (g.rows, g.cols) == (r, K)
    for subset in itertools.combinations(range(K), r):
        block = g.select_columns(subset)
        assert fraction_rank(block.columns(), r) == r
        assert rank_gfp(block, p) == r


def test_mds_family_has_K_vectors():
    family = mds_family(4, 3, p=5)
    assert len(family) == 4
    assert family.dim == 3
    assert family.kind == "mds"


@pytest.mark.parametrize(
    "K,r,p",
    [(5, 6, None), (5, 2, 3), (4, 2, 6), (0, 1, None)],
)
def test_mds_rejects_bad_parameters(K, r, p):
    with pytest.raises(ValueError):
        mds_generator(K, r, p)


def test_binary_vectors_enumerate_nonzero_columns():
    family = binary_vectors(3)
    assert len(family) == 7
    assert family.vectors[0] == (1, 0, 0)
    assert family.vectors[2] == (1, 1, 0)
    assert family.vectors[6] == (1, 1, 1)
    assert binary_vector(5, 3) == (1, 0, 1)
    assert len(set(family.vectors)) == 7
    assert (0, 0, 0) not in family.vectors


@pytest.mark.parametrize("x", [0, 17])
def test_binary_vectors_range(x):
    with pytest.raises(ValueError):
        binary_vectors(x)


def test_projection_preserves_group_ranks():
    vectors = [(1, 0, 0, 0), (0, 1, 0, 0), (1, 1, 0, 0), (0, 0, 1, 1)]
    groups = [[0, 1], [0, 2], [2, 3], [0, 3]]
    projected = project_to_dimension(vectors, groups, 2, seed=3)
    assert all(len(v) == 2 for v in projected)
    for grp in groups:
        assert fraction_rank([projected[i] for i in grp], 2) == fraction_rank([vectors[i] for i in grp], 4)


def test_projection_refuses_too_small_target():
    with pytest.raises(ValueError):
        project_to_dimension([(1, 0, 0), (0, 1, 0), (0, 0, 1)], [[0, 1, 2]], 2)


def test_projection_pads_when_target_is_larger():
    assert project_to_dimension([(1, 2)], [[0]], 3) == [(1, 2, 0)]
