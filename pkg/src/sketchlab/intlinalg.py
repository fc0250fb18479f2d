"""Exact integer linear algebra: Hermite-normal-form elimination, integer
kernel bases, and LLL reduction in all-integer (de Weger) arithmetic.

Everything here works on Python big integers; nothing is floating point, so
results feed the certified length bounds directly.
"""

from .errors import DependentInput


def iround_div(a: int, b: int) -> int:
    """Nearest integer to a/b (ties toward +inf), exact."""
    if b < 0:
        a, b = -a, -b
    return (2 * a + b) // (2 * b)


def dot(u, v) -> int:
    return sum(x * y for x, y in zip(u, v))


def norm_sq(v) -> int:
    return sum(x * x for x in v)


def _gcd_eliminate_column(W, col, start_row, n_rows):
    """Zero out column `col` in rows >= start_row except one pivot row.

    Uses nearest-quotient gcd steps to keep entries small. Returns the index
    of the surviving nonzero row, or None if the column is already zero.
    """
    while True:
        idxs = [i for i in range(start_row, n_rows) if W[i][col] != 0]
        if not idxs:
            return None
        if len(idxs) == 1:
            return idxs[0]
        i0 = min(idxs, key=lambda i: abs(W[i][col]))
        p = W[i0][col]
        for i in idxs:
            if i == i0:
                continue
            q = iround_div(W[i][col], p)
            if q:
                Wi, W0 = W[i], W[i0]
                W[i] = [a - q * b for a, b in zip(Wi, W0)]


def kernel_basis_int(rows):
    """Basis of the integer kernel lattice {x in Z^n : A x = 0}.

    `rows` is the r x n matrix A as a list of int lists. Row-reduces
    [A^T | I_n] with unimodular operations; the transform rows whose left
    block vanishes form a (saturated) basis of ker(A) over Z.
    """
    r = len(rows)
    n = len(rows[0])
    W = [
        [int(rows[i][j]) for i in range(r)] + [1 if t == j else 0 for t in range(n)]
        for j in range(n)
    ]
    row = 0
    for col in range(r):
        piv = _gcd_eliminate_column(W, col, row, n)
        if piv is not None:
            W[row], W[piv] = W[piv], W[row]
            row += 1
    kernel = []
    for i in range(row, n):
        assert all(x == 0 for x in W[i][:r])
        kernel.append(W[i][r:])
    return kernel


def row_hnf(rows):
    """Canonical row-style Hermite normal form of the lattice spanned by `rows`.

    Unique per lattice: pivots positive, entries above each pivot reduced into
    [0, pivot), zero rows dropped. Used as a lattice-equality certificate.
    """
    W = [list(map(int, v)) for v in rows]
    W = [v for v in W if any(v)]
    if not W:
        return ()
    n = len(W[0])
    m = len(W)
    row = 0
    for col in range(n):
        piv = _gcd_eliminate_column(W, col, row, m)
        if piv is None:
            continue
        W[row], W[piv] = W[piv], W[row]
        if W[row][col] < 0:
            W[row] = [-x for x in W[row]]
        p = W[row][col]
        for i in range(row):
            q = W[i][col] // p
            if q:
                W[i] = [a - q * b for a, b in zip(W[i], W[row])]
        row += 1
        if row == m:
            break
    return tuple(tuple(v) for v in W[:row])


def same_lattice(rows_a, rows_b) -> bool:
    return row_hnf(rows_a) == row_hnf(rows_b)


def lll_reduce_int(basis, delta=(99, 100)):
    """LLL-reduce an independent integer basis with parameter delta = p/q.

    All-integer variant (Cohen, Alg. 2.6.3): Gram-Schmidt data is carried as
    integers lambda[i][j] and subdeterminants d[i], so the reduction is exact.
    Raises DependentInput if the vectors are dependent.
    """
    b = [list(map(int, v)) for v in basis]
    kn = len(b)
    if kn == 0:
        return []
    p, q = int(delta[0]), int(delta[1])
    d = [0] * (kn + 1)
    d[0] = 1
    lam = [[0] * kn for _ in range(kn)]

    def incremental_gram(k):
        for j in range(k + 1):
            u = dot(b[k], b[j])
            for i in range(j):
                u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
            if j < k:
                lam[k][j] = u
            else:
                if u == 0:
                    raise DependentInput("LLL input vectors are linearly dependent")
                d[k + 1] = u

    def red(k, l):
        if 2 * abs(lam[k][l]) > d[l + 1]:
            m = iround_div(lam[k][l], d[l + 1])
            bk, bl = b[k], b[l]
            b[k] = [x - m * y for x, y in zip(bk, bl)]
            lam[k][l] -= m * d[l + 1]
            for i in range(l):
                lam[k][i] -= m * lam[l][i]

    def swap(k, k_max):
        b[k], b[k - 1] = b[k - 1], b[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lam_ = lam[k][k - 1]
        B = (d[k - 1] * d[k + 1] + lam_ * lam_) // d[k]
        for i in range(k + 1, k_max + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lam_ * t) // d[k]
            lam[i][k - 1] = (B * t + lam_ * lam[i][k]) // d[k + 1]
        d[k] = B

    d[1] = dot(b[0], b[0])
    if d[1] == 0:
        raise DependentInput("LLL input contains the zero vector")
    k = 1
    k_max = 0
    while k < kn:
        if k > k_max:
            k_max = k
            incremental_gram(k)
        red(k, k - 1)
        if q * (d[k + 1] * d[k - 1] + lam[k][k - 1] ** 2) < p * d[k] ** 2:
            swap(k, k_max)
            k = max(k - 1, 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return b
