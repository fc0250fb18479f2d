import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_closest_lattice_point, brute_shortest_lattice_vector, enumerate_integer_kernel
from sketchlab.errors import (
    DegenerateLattice,
    DependentInput,
    FullRank,
    TooManyRows,
)
from sketchlab.intlinalg import norm_sq, row_hnf, same_lattice
from sketchlab.lattice import (
    CellRounder,
    IntMatrix,
    fundamental_cell_uniform,
    integer_kernel_basis,
    preprocess_sketch,
    reduce_basis,
    round_to_column_lattice,
    short_kernel_vector,
)
from sketchlab.rng import derive


class TestIntegerKernelBasis:
    def test_coordinate_kernel(self):
        kb = integer_kernel_basis(IntMatrix.from_rows([[1, 0, 0], [0, 1, 0]]))
        assert kb.vectors == [[0, 0, 1]] or kb.vectors == [[0, 0, -1]]

    def test_two_ones(self):
        kb = integer_kernel_basis(IntMatrix.from_rows([[1, 1]]))
        assert sorted(map(abs, kb.vectors[0])) == [1, 1]

    def test_2_3_5_lattice_index_one(self):
        A = [[2, 3, 5]]
        kb = integer_kernel_basis(IntMatrix.from_rows(A))
        assert len(kb) == 2
        for v in kb.vectors:
            assert 2 * v[0] + 3 * v[1] + 5 * v[2] == 0
        # enumeration oracle: every small integer kernel point lies in the
        # lattice generated by the basis (index 1)
        for pt in enumerate_integer_kernel(A, 10):
            assert same_lattice(kb.vectors, kb.vectors + [list(pt)])

    def test_full_rank_raises(self):
        with pytest.raises(FullRank):
            integer_kernel_basis(IntMatrix.from_rows([[1, 0], [0, 1]]))

    def test_exactness_random(self):
        rng = derive(5, "kern")
        for _ in range(20):
            r, n = int(rng.integers(1, 5)), int(rng.integers(6, 14))
            A = rng.integers(-50, 51, size=(r, n))
            kb = integer_kernel_basis(IntMatrix.from_rows(A))
            kb.check_against(IntMatrix.from_rows(A))  # exact A v = 0
            assert len(kb) == n - np.linalg.matrix_rank(A.astype(float))


class TestShortKernelVector:
    def test_all_ones(self):
        v = short_kernel_vector(IntMatrix.from_rows([[1, 1, 1]], bound=1))
        assert max(abs(x) for x in v) <= 1
        assert sum(v) == 0

    def test_2_3(self):
        v = short_kernel_vector(IntMatrix.from_rows([[2, 3]], bound=3))
        assert sorted(map(abs, v)) == [2, 3]
        assert 2 * v[0] + 3 * v[1] == 0

    def test_coordinate(self):
        v = short_kernel_vector(IntMatrix.from_rows([[1, 0]]))
        assert [abs(x) for x in v] == [0, 1]

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_siegel_bound_random(self, seed):
        rng = derive(seed, "siegel-prop")
        n = int(rng.integers(2, 25))
        r = int(rng.integers(1, max(2, n // 2 + 1)))
        M = int(rng.integers(1, 101))
        A = rng.integers(-M, M + 1, size=(r, n))
        if not np.any(A):
            A[0, 0] = 1
        v = short_kernel_vector(IntMatrix.from_rows(A, bound=M))
        # exact integer form of linf(v) <= (nM)^(r/(n-r))
        linf = max(abs(int(x)) for x in v)
        assert linf ** (n - r) <= (n * M) ** r
        assert all(int(np.dot(A[i], v)) == 0 for i in range(r))


class TestReduceBasis:
    def test_identity_unchanged(self):
        out = reduce_basis([[1, 0], [0, 1]])
        assert sorted(tuple(map(abs, v)) for v in out) == [(0, 1), (1, 0)]

    def test_hand_reduction(self):
        out = reduce_basis([[1, 0], [5, 1]])
        assert sorted(norm_sq(v) for v in out) == [1, 1]
        assert same_lattice(out, [[1, 0], [0, 1]])

    def test_dependent_raises(self):
        with pytest.raises(DependentInput):
            reduce_basis([[1, 2], [2, 4]])

    def test_random_4dim_near_shortest(self):
        rng = derive(6, "red")
        for _ in range(10):
            B = rng.integers(-20, 21, size=(4, 4))
            while abs(np.linalg.det(B.astype(float))) < 0.5:
                B = rng.integers(-20, 21, size=(4, 4))
            out = reduce_basis(B)
            assert same_lattice(B.tolist(), out)
            shortest = math.sqrt(norm_sq(out[0]))
            brute = brute_shortest_lattice_vector(out, coeff_bound=2)
            assert shortest <= 2 ** 1.5 * brute + 1e-9

    def test_sorted_by_norm(self):
        out = reduce_basis([[7, 1, 0], [1, 0, 3], [0, 5, 1]])
        norms = [norm_sq(v) for v in out]
        assert norms == sorted(norms)


class TestPreprocessSketch:
    def test_all_ones_row(self):
        A = IntMatrix.from_rows([[1, 1, 1, 1]], bound=1)
        Ap, kb = preprocess_sketch(A)
        assert Ap.rows <= 4
        assert len(kb) >= 3
        assert kb.certified_max_len <= math.sqrt(4) * 1
        kb.check_against(Ap)

    def test_identity_prefix_short_circuits(self):
        rows = np.zeros((2, 16), dtype=np.int64)
        rows[0, 0] = rows[1, 1] = 1
        Ap, kb = preprocess_sketch(IntMatrix.from_rows(rows))
        assert Ap.rows == 2  # already satisfies the bound, no rows added
        assert len(kb) == 14
        assert kb.certified_max_len <= 1.0 + 1e-12

    def test_forced_row_addition(self):
        A = IntMatrix.from_rows([[1, 1, 1, 1, 1, 1, 1, 1]], bound=1)
        Ap, kb = preprocess_sketch(A, short_circuit=False)
        assert Ap.rows == 4  # r + 3r rows
        assert len(kb) == 4  # n - 4r
        assert kb.certified_max_len <= math.sqrt(8)
        kb.check_against(Ap)  # orthogonal to original and added rows
        # A' contains A's rows verbatim
        assert Ap.to_lists()[0] == [1] * 8

    def test_too_many_rows(self):
        with pytest.raises(TooManyRows):
            preprocess_sketch(IntMatrix.from_rows(np.eye(3, 8, dtype=np.int64)))

    def test_random_batch_meets_bound(self):
        rng = derive(7, "prep")
        target = math.sqrt(32) * 50
        ok = 0
        for _ in range(20):
            A = rng.integers(-50, 51, size=(3, 32))
            _, kb = preprocess_sketch(IntMatrix.from_rows(A, bound=50))
            ok += int(kb.certified_max_len <= target)
        assert ok >= 19


class TestCellRounder:
    def test_round_identity_lattice(self):
        rounder = CellRounder(np.eye(2, dtype=np.int64))
        _, p = round_to_column_lattice(rounder, np.array([0.6, -1.4]))
        assert p.tolist() == [1, -1]

    def test_round_even_lattice(self):
        rounder = CellRounder(2 * np.eye(2, dtype=np.int64))
        _, p = round_to_column_lattice(rounder, np.array([0.9, 0.9]))
        assert p.tolist() == [0, 0]

    def test_round_matches_bruteforce(self):
        rng = derive(8, "cvp")
        for _ in range(15):
            A = rng.integers(-6, 7, size=(2, 6))
            try:
                rounder = CellRounder(A)
            except DegenerateLattice:
                continue
            y = rng.uniform(-20, 20, size=2)
            _, p = rounder.round(y)
            oracle_p, oracle_d = brute_closest_lattice_point(rounder.basis, y)
            assert abs(np.linalg.norm(p - y) - oracle_d) <= 1e-9

    def test_round_idempotent_on_lattice_points(self):
        rng = derive(8, "idem")
        A = rng.integers(-5, 6, size=(3, 7))
        rounder = CellRounder(A)
        for _ in range(10):
            z = rng.integers(-4, 5, size=7)
            pt = (A @ z).astype(float)
            _, p = rounder.round(pt)
            assert np.allclose(p, pt)
            _, p2 = rounder.round(p.astype(float))
            assert np.array_equal(p, p2)

    def test_degenerate(self):
        with pytest.raises(DegenerateLattice):
            CellRounder(np.array([[1, 2], [2, 4]], dtype=np.int64))

    def test_unit_distances_are_row_gcds(self):
        r = CellRounder(np.array([[2, 4, 6], [3, 5, 7]], dtype=np.int64))
        assert r.unit_distances.tolist() == [2, 1]


class TestFundamentalCellUniform:
    def test_z1_uniform_mean(self):
        rounder = CellRounder(np.eye(1, dtype=np.int64))
        rng = derive(9, "cell1")
        eta = fundamental_cell_uniform(rounder, rng, size=100_000)
        assert abs(float(np.mean(eta)) - 0.5) <= 0.01
        assert float(np.min(eta)) >= 0.0 and float(np.max(eta)) < 1.0

    def test_z2_cell_base_recovers(self):
        rounder = CellRounder(np.eye(2, dtype=np.int64))
        rng = derive(9, "cell2")
        p = np.array([3.0, -2.0])
        eta = fundamental_cell_uniform(rounder, rng, size=100_000)
        bases = rounder.cell_base_batch(p[None, :] + eta)
        frac = float(np.mean(np.all(bases == p, axis=1)))
        assert frac >= 0.999

    def test_general_lattice_cell_base_recovers(self):
        A = np.array([[2, 1, 0], [0, 1, 3]], dtype=np.int64)
        rounder = CellRounder(A)
        rng = derive(9, "cell3")
        z = rng.integers(-3, 4, size=(200, 3))
        pts = (z @ A.T).astype(float)
        eta = fundamental_cell_uniform(rounder, rng, size=200)
        rec = rounder.cell_base_batch(pts + eta)
        assert np.mean(np.all(rec == pts, axis=1)) >= 0.995

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateLattice):
            CellRounder(np.array([[1, 1], [1, 1]], dtype=np.int64))


class TestHnfEquality:
    def test_lattice_preservation_is_canonical(self):
        rng = derive(10, "hnf")
        B = rng.integers(-9, 10, size=(3, 5))
        while np.linalg.matrix_rank(B.astype(float)) < 3:
            B = rng.integers(-9, 10, size=(3, 5))
        R = reduce_basis(B)
        assert row_hnf(B.tolist()) == row_hnf(R)


class TestSerialization:
    def test_intmatrix_json_roundtrip(self):
        A = IntMatrix.from_rows([[2, -3, 5], [0, 1, 4]], bound=5)
        back = IntMatrix.from_json(A.to_json())
        assert np.array_equal(back.entries, A.entries)
        assert back.bound == 5
