"""Integer lattice machinery: kernel bases, Siegel-style short kernel vectors,
sketch pre-processing, LLL reduction, and rounding in the column lattice.

All kernel/HNF arithmetic is exact (Python big integers); A @ v = 0 holds
exactly, never within tolerance. Floating point appears only in the geometric
rounding helpers, where cell sizes dwarf representation error.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import intlinalg
from .errors import (
    BoundViolated,
    DegenerateLattice,
    FullRank,
    LengthBoundUnachieved,
    TooManyRows,
)
from .rng import as_generator


@dataclass
class IntMatrix:
    """Integer matrix with a recorded entry bound.

    entries is an (r, n) numpy int64 array; exact routines convert to Python
    ints internally, so int64 here is storage, not an arithmetic limit.
    """

    entries: np.ndarray
    bound: int

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=np.int64)
        if self.entries.ndim != 2 or self.entries.size == 0:
            raise ValueError("entries must be a nonempty 2-d integer array")
        actual = int(np.max(np.abs(self.entries))) if self.entries.size else 0
        if actual > self.bound:
            raise ValueError(f"entry magnitude {actual} exceeds declared bound {self.bound}")

    @classmethod
    def from_rows(cls, rows, bound=None):
        arr = np.asarray(rows, dtype=np.int64)
        if bound is None:
            bound = max(1, int(np.max(np.abs(arr))))
        return cls(arr, int(bound))

    @property
    def rows(self):
        return self.entries.shape[0]

    @property
    def cols(self):
        return self.entries.shape[1]

    def to_lists(self):
        return [[int(x) for x in row] for row in self.entries]

    def max_abs_entry(self):
        return int(np.max(np.abs(self.entries)))

    def to_json(self):
        """JSON array of integer rows (test-fixture format)."""
        import json
        return json.dumps({"rows": self.to_lists(), "bound": self.bound})

    @classmethod
    def from_json(cls, s):
        import json
        doc = json.loads(s)
        return cls.from_rows(doc["rows"], bound=doc.get("bound"))


@dataclass
class KernelBasis:
    """Independent integer vectors in the kernel of a source matrix."""

    ambient: int
    vectors: list  # list of lists of Python ints
    certified_max_len: float

    def __post_init__(self):
        self.vectors = [[int(x) for x in v] for v in self.vectors]

    def __len__(self):
        return len(self.vectors)

    def as_array(self):
        if not self.vectors:
            return np.zeros((0, self.ambient), dtype=np.int64)
        return np.asarray(self.vectors, dtype=np.int64)

    def check_against(self, A: IntMatrix):
        """Exact check that every vector is annihilated by A."""
        rows = A.to_lists()
        for v in self.vectors:
            for row in rows:
                if intlinalg.dot(row, v) != 0:
                    raise AssertionError("kernel vector not annihilated exactly")


def integer_kernel_basis(A: IntMatrix) -> KernelBasis:
    """Exact basis of ker(A) ∩ Z^n, via HNF elimination on [A^T | I].

    Raises FullRank when the kernel is trivial.
    """
    vecs = intlinalg.kernel_basis_int(A.to_lists())
    if not vecs:
        raise FullRank("matrix has full column rank; integer kernel is trivial")
    max_len = max(math.sqrt(intlinalg.norm_sq(v)) for v in vecs)
    kb = KernelBasis(A.cols, vecs, max_len)
    kb.check_against(A)
    return kb


def reduce_basis(basis, delta=(99, 100), check=False):
    """LLL-reduce independent integer vectors (exact arithmetic), sorted by norm.

    With check=True the output is verified to generate the same lattice as the
    input via canonical HNF equality.
    """
    vecs = [list(map(int, v)) for v in basis]
    if not vecs:
        return []
    reduced = intlinalg.lll_reduce_int(vecs, delta=delta)
    reduced.sort(key=intlinalg.norm_sq)
    if check and not intlinalg.same_lattice(vecs, reduced):
        raise AssertionError("reduction changed the generated lattice")
    return reduced


def _linf(v):
    return max(abs(x) for x in v)


def _siegel_bound_ok(v, n, M, r) -> bool:
    """Exact integer test: linf(v)^(n-r) <= (n*M)^r."""
    return _linf(v) ** (n - r) <= (n * M) ** r


def short_kernel_vector(A: IntMatrix):
    """Nonzero integer x with A x = 0 and max|x_i| <= (nM)^{r/(n-r)}.

    Obtained by LLL-reducing the exact kernel basis and picking the shortest
    member in l-infinity, followed by a small greedy combination search. The
    Siegel bound is asserted with exact integer arithmetic; violation raises
    BoundViolated (signals a reduction bug, must never fire).
    """
    r, n = A.rows, A.cols
    if r >= n:
        raise FullRank("need r < n for a kernel vector")
    M = max(1, A.max_abs_entry())
    if M == 0:
        raise ValueError("A must be nonzero")
    kb = integer_kernel_basis(A)
    reduced = reduce_basis(kb.vectors)
    best = min(reduced, key=_linf)

    if not _siegel_bound_ok(best, n, M, r):
        # greedy pairwise improvement in l-infinity
        improved = True
        while improved and not _siegel_bound_ok(best, n, M, r):
            improved = False
            for w in reduced:
                for s in (1, -1):
                    cand = [a + s * b for a, b in zip(best, w)]
                    if any(cand) and _linf(cand) < _linf(best):
                        best = cand
                        improved = True
    if not _siegel_bound_ok(best, n, M, r):
        raise BoundViolated(
            f"shortest vector linf={_linf(best)} exceeds (nM)^(r/(n-r)) "
            f"with n={n}, M={M}, r={r}"
        )
    return best


def preprocess_sketch(A: IntMatrix, short_circuit=True):
    """Pre-process a sketch so its orthogonal lattice has a short certified basis.

    Returns (A', kernel_basis) where A' contains A's rows plus at most 3r
    Siegel-style rows, and kernel_basis holds >= n - 4r independent integer
    vectors orthogonal to every row of A', each of length <= sqrt(n) * M
    (certified_max_len records the realized maximum).

    With short_circuit=True (default), if the full reduced kernel of A already
    meets the bound, A' = A and the full kernel is returned.

    Raises TooManyRows if r > 0.25 n, and LengthBoundUnachieved when even the
    n - 4r shortest reduced kernel vectors exceed the target (surfaced with
    the best achieved length, never hidden).
    """
    r, n = A.rows, A.cols
    if r > 0.25 * n:
        raise TooManyRows(f"pre-processing requires r <= n/4 (got r={r}, n={n})")
    M = max(1, A.max_abs_entry())
    target = math.sqrt(n) * M

    kb = integer_kernel_basis(A)
    reduced = reduce_basis(kb.vectors)
    lengths = [math.sqrt(intlinalg.norm_sq(v)) for v in reduced]

    if short_circuit and lengths and max(lengths) <= target:
        full = KernelBasis(n, reduced, max(lengths))
        return A, full

    keep = n - 4 * r
    short_set = reduced[:keep]
    short_lens = lengths[:keep]
    achieved = max(short_lens) if short_lens else 0.0
    if achieved > target:
        raise LengthBoundUnachieved(
            f"best {keep} kernel vectors reach length {achieved:.3f} > target {target:.3f}",
            achieved=achieved,
            target=target,
        )

    # iterated Siegel rows: each orthogonal to A's rows, the short set, and
    # the rows added so far
    added = []
    base_rows = A.to_lists()
    for _ in range(3 * r):
        stacked = base_rows + short_set + added
        S = IntMatrix.from_rows(stacked)
        if S.rows >= n:
            break
        y = short_kernel_vector(S)
        added.append(y)

    new_rows = base_rows + added
    A_prime = IntMatrix.from_rows(new_rows)
    result = KernelBasis(n, short_set, achieved)
    result.check_against(A_prime)
    return A_prime, result


@dataclass
class CellRounder:
    """Rounding and fundamental-cell structure for the column lattice A Z^n.

    Fields: the generating columns, an LLL-reduced integer basis of the
    lattice, per-axis unit distances (gcd of each row of A), and cached
    Gram-Schmidt data for Babai rounding.
    """

    generators: np.ndarray          # (r, n) int64, the sketch matrix A
    basis: np.ndarray = field(init=False)       # (r, r) int64 reduced basis rows
    unit_distances: np.ndarray = field(init=False)
    exact_cvp: bool = field(init=False)
    _gs: tuple = field(init=False, repr=False)

    def __post_init__(self):
        A = np.asarray(self.generators, dtype=np.int64)
        r, n = A.shape
        # columns of A generate the lattice; a basis is the row HNF of A^T
        hnf = intlinalg.row_hnf([list(map(int, col)) for col in A.T])
        if len(hnf) < r:
            raise DegenerateLattice(
                f"column lattice has rank {len(hnf)} < r={r}"
            )
        reduced = reduce_basis([list(v) for v in hnf])
        self.basis = np.asarray(reduced, dtype=np.int64)
        self.unit_distances = np.asarray(
            [math.gcd(*[int(x) for x in row]) if np.any(row) else 0 for row in A],
            dtype=np.int64,
        )
        self.exact_cvp = r <= 4
        B = self.basis.astype(float)
        # Gram-Schmidt of the basis rows for nearest-plane rounding
        Bstar = np.zeros_like(B)
        mu = np.zeros((r, r))
        for i in range(r):
            Bstar[i] = B[i]
            for j in range(i):
                mu[i, j] = (B[i] @ Bstar[j]) / (Bstar[j] @ Bstar[j])
                Bstar[i] = Bstar[i] - mu[i, j] * Bstar[j]
        self._gs = (B, Bstar)

    @property
    def rank(self):
        return self.basis.shape[0]

    def cell_diameter(self):
        return float(np.sum(np.linalg.norm(self.basis.astype(float), axis=1)))

    def _babai_coeffs(self, y):
        B, Bstar = self._gs
        r = self.rank
        resid = np.asarray(y, dtype=float).copy()
        coeffs = np.zeros(r, dtype=np.int64)
        for j in range(r - 1, -1, -1):
            c = round(float(resid @ Bstar[j]) / float(Bstar[j] @ Bstar[j]))
            coeffs[j] = c
            resid -= c * B[j]
        return coeffs

    def round(self, y):
        """Nearest lattice point to y (exact for r <= 4 via candidate
        enumeration around the Babai plane solution; Babai approximation,
        flagged by .exact_cvp, above that).

        Returns (coeffs, point): point = coeffs @ basis.
        """
        coeffs = self._babai_coeffs(y)
        B = self.basis.astype(float)
        if self.exact_cvp:
            r = self.rank
            grids = np.meshgrid(*([np.array([-1, 0, 1])] * r), indexing="ij")
            offsets = np.stack([g.ravel() for g in grids], axis=1)
            cands = coeffs[None, :] + offsets
            pts = cands.astype(float) @ B
            d2 = np.sum((pts - np.asarray(y, dtype=float)) ** 2, axis=1)
            best = int(np.argmin(d2))
            coeffs = cands[best].astype(np.int64)
        point = coeffs @ self.basis
        return coeffs, point

    def cell_base(self, y):
        """Lattice point of y's unit cell: floor of y in reduced-basis
        coordinates. Exact inverse of adding fundamental_cell_uniform noise."""
        B = self.basis.astype(float)
        coords = np.linalg.solve(B.T, np.asarray(y, dtype=float))
        coeffs = np.floor(coords + 1e-12).astype(np.int64)
        return coeffs, coeffs @ self.basis

    def cell_base_batch(self, Y):
        """Vectorized cell_base over rows of Y; returns lattice points."""
        B = self.basis.astype(float)
        coords = np.linalg.solve(B.T, np.asarray(Y, dtype=float).T).T
        coeffs = np.floor(coords + 1e-12).astype(np.int64)
        return coeffs @ self.basis


def round_to_column_lattice(rounder: CellRounder, y):
    """Nearest point of the column lattice to y; see CellRounder.round."""
    return rounder.round(y)


def fundamental_cell_uniform(rounder: CellRounder, rng, size=None):
    """Uniform sample(s) from the fundamental parallelepiped of the reduced
    basis: eta = sum_i u_i b_i with u_i ~ U[0,1).

    cell_base(point + eta) recovers point for cell-interior samples.
    """
    rng = as_generator(rng)
    r = rounder.rank
    B = rounder.basis.astype(float)
    if size is None:
        return rng.random(r) @ B
    return rng.random((int(size), r)) @ B
