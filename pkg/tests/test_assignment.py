import itertools
import math

import numpy as np
import pytest

from tcropt.assignment import Matching, hungarian_max, round_connection


def brute_force_max(w):
    """Exhaustive assignment oracle; rows <= columns expected."""
    rows, cols = w.shape
    best = -math.inf
    for perm in itertools.permutations(range(cols), rows):
        total = sum(w[i, perm[i]] for i in range(rows))
        best = max(best, total)
    return best


class TestHungarian:
    def test_identity_preference(self):
        m = hungarian_max(np.array([[5.0, 1.0], [1.0, 5.0]]))
        assert set(m.pairs) == {(0, 0), (1, 1)}
        assert m.total == 10.0

    def test_cross_preference(self):
        m = hungarian_max(np.array([[1.0, 5.0], [5.0, 1.0]]))
        assert set(m.pairs) == {(0, 1), (1, 0)}
        assert m.total == 10.0

    def test_rectangular_leaves_worst_column_empty(self):
        w = np.array([[9.0, 1.0, 4.0],
                      [8.0, 2.0, 3.0]])
        m = hungarian_max(w)
        assert m.total == brute_force_max(w)
        assert len(m.pairs) == 2

    def test_matches_brute_force_on_random_tables(self):
        rng = np.random.default_rng(2024)
        for _ in range(60):
            rows = rng.integers(1, 7)
            cols = rng.integers(rows, 7)
            w = rng.uniform(0, 10, size=(rows, cols))
            m = hungarian_max(w)
            assert m.total == pytest.approx(brute_force_max(w), abs=1e-9)
            assert len({i for i, _ in m.pairs}) == rows
            assert len({j for _, j in m.pairs}) == rows

    def test_negative_weights_allowed(self):
        w = np.array([[-1.0, -5.0], [-6.0, -2.0]])
        m = hungarian_max(w)
        assert m.total == pytest.approx(brute_force_max(w))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            hungarian_max(np.array([[1.0, np.inf], [0.0, 1.0]]))
        with pytest.raises(ValueError):
            hungarian_max(np.array([[np.nan]]))

    def test_deterministic_on_ties(self):
        w = np.ones((3, 3))
        first = hungarian_max(w)
        for _ in range(5):
            assert hungarian_max(w) == first


class TestRounding:
    def test_binary_feasible_is_fixed_point(self):
        x = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
        assert np.array_equal(round_connection(x), x)

    def test_dominant_entries_win(self):
        x = np.array([[0.9, 0.1], [0.2, 0.8]])
        out = round_connection(x)
        assert np.array_equal(out, np.array([[1.0, 0.0], [0.0, 1.0]]))

    def test_rows_above_one_are_renormalized(self):
        x = np.array([[3.0, 1.0], [0.5, 2.0]])
        out = round_connection(x)
        assert np.array_equal(out, np.array([[1.0, 0.0], [0.0, 1.0]]))

    def test_zero_row_takes_lowest_index_argmax(self):
        x = np.array([[0.0, 0.0], [0.0, 1.0]])
        out = round_connection(x)
        assert out[0, 0] == 1.0
        assert out[1, 1] == 1.0

    def test_capacity_is_balanced(self):
        # Five users all preferring server 0 of two: capacity ceil(5/2)=3.
        x = np.zeros((5, 2))
        x[:, 0] = 1.0
        out = round_connection(x)
        assert np.all(out.sum(axis=1) == 1.0)
        assert out[:, 0].sum() <= 3

    def test_matches_exhaustive_capacity_constrained_oracle(self):
        rng = np.random.default_rng(7)
        n, m = 4, 2
        cap = math.ceil(n / m)
        for _ in range(40):
            x = rng.uniform(0, 1, size=(n, m))
            x /= np.maximum(x.sum(axis=1, keepdims=True), 1.0)
            got = round_connection(x)
            best = -math.inf
            for choice in itertools.product(range(m), repeat=n):
                counts = [choice.count(j) for j in range(m)]
                if max(counts) > cap:
                    continue
                best = max(best, sum(x[i, choice[i]] for i in range(n)))
            score = float(sum(x[i, j] for i, j in zip(*np.nonzero(got))))
            assert score == pytest.approx(best, abs=1e-9)

    def test_idempotent_on_own_output(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            x = rng.uniform(0, 1, size=(6, 3))
            first = round_connection(x)
            again = round_connection(first)
            assert np.array_equal(first, again)

    def test_output_shape_and_binary(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 0.5, size=(7, 3))
        out = round_connection(x)
        assert out.shape == (7, 3)
        assert set(np.unique(out)) <= {0.0, 1.0}
        assert np.all(out.sum(axis=1) == 1.0)
