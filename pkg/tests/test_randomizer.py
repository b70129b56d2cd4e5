import numpy as np
import pytest
from scipy import stats

from complier.errors import InvalidArmSize, TooManyAssignments
from complier.randomizer import RngStream, complete_randomization, enumerate_assignments


def test_two_point_symmetry():
    gen = RngStream(3).generator()
    first = np.array([complete_randomization(2, 1, gen)[0] for _ in range(10_000)])
    assert abs(first.mean() - 0.5) <= 0.02


def test_uniform_over_all_assignments():
    support = enumerate_assignments(6, 3)
    index = {tuple(a): k for k, a in enumerate(support)}
    gen = RngStream(11).generator()
    counts = np.zeros(len(support))
    draws = 100_000
    for _ in range(draws):
        counts[index[tuple(complete_randomization(6, 3, gen))]] += 1
    freq = counts / draws
    assert np.all(np.abs(freq - 1 / 20) <= 0.01)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_fixed_stream_is_reproducible():
    a = complete_randomization(50, 17, RngStream(99, 4))
    b = complete_randomization(50, 17, RngStream(99, 4))
    c = complete_randomization(50, 17, RngStream(99, 5))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_assignment_has_exact_arm_size():
    z = complete_randomization(37, 11, RngStream(1))
    assert z.sum() == 11 and z.size == 37
    assert set(np.unique(z)) <= {0, 1}


@pytest.mark.parametrize("n,n1", [(5, 0), (5, 5), (1, 1), (4, 7)])
def test_invalid_arm_size(n, n1):
    with pytest.raises(InvalidArmSize):
        complete_randomization(n, n1, RngStream(0))


def test_enumerate_three_singletons():
    np.testing.assert_array_equal(enumerate_assignments(3, 1), [[1, 0, 0], [0, 1, 0], [0, 0, 1]])


def test_enumerate_counts_and_uniqueness():
    assert len(enumerate_assignments(6, 3)) == 20
    a = enumerate_assignments(8, 4)
    assert a.shape == (70, 8)
    assert len({tuple(r) for r in a}) == 70
    assert np.all(a.sum(axis=1) == 4)


def test_enumeration_cap():
    with pytest.raises(TooManyAssignments):
        enumerate_assignments(30, 15)
    with pytest.raises(TooManyAssignments):
        enumerate_assignments(8, 4, cap=69)


def test_unit_marginals():
    n, n1, draws = 9, 4, 100_000
    gen = RngStream(21).generator()
    total = np.zeros(n)
    for _ in range(draws):
        total += complete_randomization(n, n1, gen)
    p = n1 / n
    se = np.sqrt(p * (1 - p) / draws)
    assert np.all(np.abs(total / draws - p) <= 3 * se)
