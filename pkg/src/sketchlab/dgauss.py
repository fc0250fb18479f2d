"""Discrete and continuous Gaussian sampling and pmf evaluation.

Conventions: D(0, Sigma) is the distribution on Z^n with mass proportional to
exp(-x^T Sigma^{-1} x / 2), so Sigma plays the role of a covariance parameter
(measured variances approach Sigma as it grows). In one dimension the weight
is exp(-z^2 / (2 sigma^2)).

Tails are truncated at 12 sigma everywhere (mass < 1e-30). Ellipsoidal
sampling over Z^n uses a continuous+discrete convolution: draw the continuous
part with covariance Sigma - r0^2 I, then round coordinatewise with 1-D
discrete Gaussians of variance r0^2 at the continuous centers; r0^2 is the
smoothing margin for Z.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from .errors import NonPositiveVariance, VarianceTooSmall
from .numerics import OrthonormalBasis
from .rng import as_generator

TAIL_SIGMAS = 12.0
TABLE_SIGMA2_MAX = 4.0  # below this variance, sample by exact table inversion
SMOOTHING_EPS = 1e-6


def smoothing_r0sq(n, eps=SMOOTHING_EPS):
    """Smoothing margin r0^2 = 4 ln(2n(1+1/eps)) / pi for the lattice Z."""
    return 4.0 * math.log(2.0 * n * (1.0 + 1.0 / eps)) / math.pi


def partition_1d(sigma2):
    """Z(sigma^2) = sum_k exp(-k^2/(2 sigma^2)), truncated at |k| <= ceil(12 sigma)+1."""
    if sigma2 <= 0:
        raise NonPositiveVariance(f"sigma2={sigma2}")
    K = int(math.ceil(TAIL_SIGMAS * math.sqrt(sigma2))) + 1
    k = np.arange(1, K + 1, dtype=float)
    return float(1.0 + 2.0 * np.sum(np.exp(-k * k / (2.0 * sigma2))))


def verify_normalization_fact(sigma2, dps=50):
    """Check max(sqrt(2 pi sigma^2), 1) <= Z(sigma^2) <= sqrt(2 pi sigma^2) + 1
    with mpmath at `dps` digits.

    The truncated sum over |k| <= 40 sigma lower-bounds Z and an explicit
    geometric tail bound upper-bounds the remainder, so the upper inequality
    is certified outright. The lower inequality is tight to within the
    Poisson-summation remainder ~ 2 exp(-2 pi^2 sigma^2), which for large
    sigma^2 is below any finite precision; it is therefore certified to
    10^(2-dps) relative. Returns bracketing values and `ok`.
    """
    import mpmath as mp

    with mp.workdps(dps):
        s2 = mp.mpf(sigma2)
        K = int(mp.ceil(40 * mp.sqrt(s2))) + 2
        core = 1 + 2 * mp.nsum(lambda k: mp.e ** (-(k * k) / (2 * s2)), [1, K])
        # tail: sum_{k>K} e^{-k^2/2s2} <= e^{-K^2/2s2} / (1 - e^{-K/s2})
        ratio = mp.e ** (-K / s2)
        tail = (mp.e ** (-(K * K) / (2 * s2))) / (1 - ratio)
        z_lo, z_hi = core, core + 2 * tail
        lo = max(mp.sqrt(2 * mp.pi * s2), mp.mpf(1))
        hi = mp.sqrt(2 * mp.pi * s2) + 1
        precision_slack = lo * mp.mpf(10) ** (2 - dps)
        ok = bool(z_lo >= lo - precision_slack and z_hi <= hi)
        # log10 of the true (Poisson) lower-bound slack, for the report
        log10_poisson_slack = float(-2 * mp.pi**2 * s2 / mp.log(10))
        return {
            "sigma2": float(sigma2),
            "Z_lower": float(z_lo),
            "Z_upper": float(z_hi),
            "bound_lo": float(lo),
            "bound_hi": float(hi),
            "log10_poisson_slack": log10_poisson_slack,
            "ok": ok,
        }


def pmf_dgauss_1d(z, sigma2):
    """Probability mass of the integer z under D(0, sigma^2) on Z."""
    if sigma2 <= 0:
        raise NonPositiveVariance(f"sigma2={sigma2}")
    z = np.asarray(z, dtype=float)
    val = np.exp(-z * z / (2.0 * sigma2)) / partition_1d(sigma2)
    return float(val) if val.ndim == 0 else val


def _rounded_gaussian_pmf(u, sigma):
    """Mass that round(N(0, sigma^2)) puts at offset u from the center.

    Evaluated through complementary tails so the difference stays accurate
    (a plain CDF difference underflows to 0 beyond ~8 sigma)."""
    au = np.abs(np.asarray(u, dtype=float))
    return ndtr(-(au - 0.5) / sigma) - ndtr(-(au + 0.5) / sigma)


@lru_cache(maxsize=256)
def _centered_envelope(sigma2):
    """Envelope max_z w(z)/q(z) over integer |z| <= K, where
    w(z)=exp(-z^2/2sigma^2) and q is the rounded-continuous proposal pmf.

    The ratio is monotone increasing in |z| (log-concavity of the Gaussian),
    so for very large K a subsampled scan that includes the dense center and
    the endpoint is exact enough; small K is scanned fully."""
    sigma = math.sqrt(sigma2)
    K = int(math.ceil(TAIL_SIGMAS * sigma)) + 1
    if K <= 20000:
        z = np.arange(0, K + 1, dtype=float)
    else:
        z = np.unique(np.concatenate([
            np.arange(0, 2001, dtype=float),
            np.round(np.linspace(2000.0, float(K), 8192)),
        ]))
    w = np.exp(-z * z / (2.0 * sigma2))
    q = _rounded_gaussian_pmf(z, sigma)
    return float(np.max(w / q)) * (1.0 + 1e-9), K


@lru_cache(maxsize=64)
def _offset_envelope(sigma2):
    """Envelope for real-valued center offsets, scanned on a fine grid over
    |u| <= 8 sigma. Proposals beyond the grid are acceptance-capped; their
    mass is < 1e-14, far below every statistical tolerance used here."""
    sigma = math.sqrt(sigma2)
    lim = 8.0 * sigma
    u = np.linspace(0.0, lim, 4096)
    w = np.exp(-u * u / (2.0 * sigma2))
    q = _rounded_gaussian_pmf(u, sigma)
    return float(np.max(w / q)) * 1.05, lim


def _sample_table(sigma2, rng, size):
    """Exact inversion sampling from a truncated pmf table (small variances)."""
    sigma = math.sqrt(sigma2)
    K = max(1, int(math.ceil(TAIL_SIGMAS * sigma)))
    support = np.arange(-K, K + 1)
    w = np.exp(-support.astype(float) ** 2 / (2.0 * sigma2))
    cdf = np.cumsum(w / np.sum(w))
    u = rng.random(size if size is not None else ())
    idx = np.searchsorted(cdf, u, side="right")
    out = support[np.minimum(idx, 2 * K)]
    return out if size is not None else int(out)


def _sample_rejection_centered(sigma2, rng, size):
    sigma = math.sqrt(sigma2)
    c_env, K = _centered_envelope(sigma2)
    m = int(np.prod(size)) if size is not None else 1
    out = np.empty(m, dtype=np.int64)
    pending = np.arange(m)
    while pending.size:
        z = np.rint(sigma * rng.standard_normal(pending.size))
        w = np.exp(-z * z / (2.0 * sigma2))
        q = _rounded_gaussian_pmf(z, sigma)
        ok = np.abs(z) <= K
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(q > 0, w / (c_env * q), 0.0)
        accept = ok & (rng.random(pending.size) < a)
        out[pending[accept]] = z[accept].astype(np.int64)
        pending = pending[~accept]
    if size is None:
        return int(out[0])
    return out.reshape(size)


def sample_dgauss_1d(sigma2, rng, size=None):
    """Exact sample(s) from D(0, sigma^2) on Z.

    Inversion on a truncated table for sigma^2 < 4; otherwise rejection with
    a rounded-continuous proposal and a precomputed envelope constant.
    """
    if sigma2 <= 0:
        raise NonPositiveVariance(f"sigma2={sigma2}")
    rng = as_generator(rng)
    if sigma2 < TABLE_SIGMA2_MAX:
        return _sample_table(sigma2, rng, size)
    return _sample_rejection_centered(sigma2, rng, size)


def _sample_dgauss_at_centers(centers, r0sq, rng):
    """Coordinatewise discrete Gaussians of variance r0^2 centered at the
    (real) entries of `centers`; vectorized rejection."""
    sigma = math.sqrt(r0sq)
    c_env, lim = _offset_envelope(r0sq)
    flat = np.asarray(centers, dtype=float).ravel()
    out = np.empty(flat.shape, dtype=np.int64)
    pending = np.arange(flat.size)
    while pending.size:
        c = flat[pending]
        z = np.rint(c + sigma * rng.standard_normal(pending.size))
        u = z - c
        w = np.exp(-u * u / (2.0 * r0sq))
        q = _rounded_gaussian_pmf(u, sigma)
        ok = np.abs(u) <= lim
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(q > 0, np.minimum(w / (c_env * q), 1.0), 0.0)
        accept = ok & (rng.random(pending.size) < a)
        out[pending[accept]] = z[accept].astype(np.int64)
        pending = pending[~accept]
    return out.reshape(np.asarray(centers).shape)


@dataclass
class GaussianSpec:
    """A centered or shifted Gaussian specification used by samplers/tests."""

    n: int
    covariance: np.ndarray
    center: np.ndarray = None
    kind: str = "discrete"  # "discrete" (over Z^n) or "continuous"

    def __post_init__(self):
        self.covariance = np.asarray(self.covariance, dtype=float)
        if self.center is None:
            self.center = np.zeros(self.n)
        if self.covariance.shape != (self.n, self.n):
            raise ValueError("covariance shape mismatch")
        if np.max(np.abs(self.covariance - self.covariance.T)) > 1e-10:
            raise ValueError("covariance not symmetric")
        if np.min(np.linalg.eigvalsh(self.covariance)) <= 0:
            raise ValueError("covariance not positive definite")


@dataclass
class SubspaceGaussianSpec:
    """Covariance family Sigma_{sigma^2} = (3 sigma^2/4) P_perp^T P_perp
    + (sigma^2/4) I for a forbidden subspace V: eigenvalue sigma^2/4 on V and
    sigma^2 on its complement."""

    n: int
    V: OrthonormalBasis
    sigma2: float

    def __post_init__(self):
        if self.V.dimension != self.n:
            raise ValueError("subspace dimension mismatch")
        if self.sigma2 <= 0:
            raise NonPositiveVariance(f"sigma2={self.sigma2}")

    def covariance(self):
        P_v = self.V.matrix.T @ self.V.matrix
        return self.sigma2 * np.eye(self.n) - 0.75 * self.sigma2 * P_v

    def eigenvalue_check(self, tol=1e-8):
        vals = np.linalg.eigvalsh(self.covariance())
        lo, hi = self.sigma2 / 4.0, self.sigma2
        return bool(np.all((np.abs(vals - lo) < tol * hi) | (np.abs(vals - hi) < tol * hi)))


def dump_samples_csv(path, samples):
    """Write a sample batch as CSV (one sample per row) for the stats module
    and external tools."""
    arr = np.atleast_2d(np.asarray(samples))
    np.savetxt(path, arr, fmt="%d" if np.issubdtype(arr.dtype, np.integer) else "%.17g",
               delimiter=",")


def sample_dgauss_ellipsoidal(Sigma, rng, size=None, eps=SMOOTHING_EPS):
    """Sample from D(0, Sigma) over Z^n by continuous+discrete convolution.

    Requires the smallest eigenvalue of Sigma to be >= 2 r0^2 where r0^2 is
    the smoothing margin for Z at failure parameter eps; raises
    VarianceTooSmall otherwise (the caller must rescale).
    """
    rng = as_generator(rng)
    Sigma = np.asarray(Sigma, dtype=float)
    n = Sigma.shape[0]
    r0sq = smoothing_r0sq(n, eps)
    vals, vecs = np.linalg.eigh(Sigma)
    if np.min(vals) < 2.0 * r0sq:
        raise VarianceTooSmall(
            f"min eigenvalue {np.min(vals):.3f} < 2*r0^2 = {2 * r0sq:.3f}"
        )
    sqrt_cont = vecs @ np.diag(np.sqrt(vals - r0sq)) @ vecs.T
    m = 1 if size is None else int(size)
    y = rng.standard_normal((m, n)) @ sqrt_cont
    z = _sample_dgauss_at_centers(y, r0sq, rng)
    return z[0] if size is None else z


def sample_subspace_query(spec: SubspaceGaussianSpec, kind, rng, size=None, eps=SMOOTHING_EPS):
    """Sample from D(V^perp, sigma^2) (discrete) or G(V^perp, sigma^2)
    (continuous).

    The discrete kind realizes D(0, Sigma_{sigma^2}) over Z^n via the
    convolution sampler with a structured covariance square root (no n x n
    eigendecomposition). The continuous kind returns
    P_perp g1 + g2 with g1 ~ N(0, 3 sigma^2/4 I), g2 ~ N(0, sigma^2/4 I).
    """
    rng = as_generator(rng)
    n, s2 = spec.n, float(spec.sigma2)
    m = 1 if size is None else int(size)
    V = spec.V.matrix  # (k, n), possibly k = 0

    if kind == "continuous":
        g1 = rng.standard_normal((m, n)) * math.sqrt(0.75 * s2)
        g2 = rng.standard_normal((m, n)) * math.sqrt(0.25 * s2)
        if len(spec.V):
            g1 = g1 - (g1 @ V.T) @ V
        out = g1 + g2
        return out[0] if size is None else out

    if kind != "discrete":
        raise ValueError(f"unknown kind {kind!r}")
    r0sq = smoothing_r0sq(n, eps)
    if s2 / 4.0 < 2.0 * r0sq:
        raise VarianceTooSmall(
            f"sigma^2/4 = {s2 / 4:.3f} below smoothing floor {2 * r0sq:.3f}"
        )
    a = math.sqrt(s2 - r0sq)        # continuous std on V^perp
    b = math.sqrt(s2 / 4.0 - r0sq)  # continuous std on V
    G = rng.standard_normal((m, n))
    y = a * G
    if len(spec.V):
        y = y - (a - b) * ((G @ V.T) @ V)
    z = _sample_dgauss_at_centers(y, r0sq, rng)
    return z[0] if size is None else z
