"""Integer linear sketches with turnstile-stream ingestion, concrete sketch
constructions, L2 estimators, and the GapNorm oracle wrapper the attack
interrogates.

Central design rule: estimators receive only (seed-derived constants, A x).
The query vector itself never reaches the estimator; `gap_bit` and
`l2_estimate` are deterministic functions of the sketched value, so two
queries with equal A x always get equal answers.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import dgauss
from .errors import BadParams, DimensionMismatch
from .lattice import IntMatrix
from .numerics import orthonormalize_rows
from .rng import derive

FAMILIES = ("sign", "rounded-gaussian", "countsketch", "projection-threshold")

_INT64_GUARD = 2**62


@dataclass
class GapNormParams:
    """Promise thresholds: answer 1 when ||x||^2 >= alpha*B, 0 when <= alpha."""

    B: float
    alpha: float

    def __post_init__(self):
        if self.B < 8:
            raise BadParams(f"B must be >= 8, got {self.B}")
        if self.alpha <= 0:
            raise BadParams(f"alpha must be positive, got {self.alpha}")

    def check_smoothing_floor(self, n):
        floor = 8.0 * dgauss.smoothing_r0sq(n)
        if self.alpha < floor:
            raise BadParams(
                f"alpha={self.alpha:.1f} below the discrete-sampling floor "
                f"{floor:.1f} for n={n}"
            )


class StreamState:
    """Accumulated sketch value A x for x = sum of turnstile updates (i, delta)."""

    def __init__(self, sketch):
        self._A = sketch.A.entries
        self.value = np.zeros(self._A.shape[0], dtype=np.int64)
        self.update_count = 0

    def update(self, i, delta):
        self.value += self._A[:, i] * int(delta)
        self.update_count += 1

    def ingest_updates(self, indices, deltas):
        indices = np.asarray(indices, dtype=np.intp)
        deltas = np.asarray(deltas, dtype=np.int64)
        if indices.size:
            self.value += self._A[:, indices] @ deltas
        self.update_count += int(indices.size)

    def ingest_vector(self, x):
        """Feed a whole query vector as one batch of coordinate updates."""
        x = np.asarray(x, dtype=np.int64)
        idx = np.nonzero(x)[0]
        self.ingest_updates(idx, x[idx])


@dataclass
class IntegerSketch:
    """An integer sketching matrix with its orthonormal working form and
    estimator constants. Immutable after build."""

    A: IntMatrix
    seed: int
    family: str
    params: dict
    Q: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    estimator: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        r, n = self.A.rows, self.A.cols
        if r > n:
            raise BadParams(f"sketch needs r <= n (got r={r}, n={n})")
        cap = n * n
        if self.A.max_abs_entry() > cap:
            raise BadParams(f"entry bound exceeds poly(n) cap {cap}")

    @classmethod
    def from_matrix(cls, rows, seed=0):
        """Wrap an explicit integer matrix (family "raw": no estimator;
        apply/streams/orthonormal form only)."""
        A = IntMatrix.from_rows(rows)
        Q, R = orthonormalize_rows(A.entries.astype(float))
        return cls(A=A, seed=int(seed), family="raw", params={}, Q=Q, R=R)

    @property
    def n(self):
        return self.A.cols

    @property
    def r(self):
        return self.A.rows

    def apply(self, x):
        """Exact integer product A x."""
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"expected dim {self.n}, got {x.shape}")
        a_max = self.A.max_abs_entry()
        x_max = int(np.max(np.abs(x))) if x.size else 0
        if a_max * max(x_max, 1) * self.n >= _INT64_GUARD:
            rows = self.A.to_lists()
            xs = [int(v) for v in x]
            return np.array([sum(a * b for a, b in zip(row, xs)) for row in rows],
                            dtype=object)
        return self.A.entries @ x.astype(np.int64)

    def new_stream(self):
        return StreamState(self)

    def working_value(self, y):
        """Sketched value in the orthonormal row basis: Q x = R (A x)."""
        return self.R @ np.asarray(y, dtype=float)

    def l2_estimate(self, y):
        """Numeric estimate of ||x||^2 from the sketched value y = A x."""
        kind = self.family
        est = self.estimator
        y = np.asarray(y, dtype=float)
        if kind == "sign":
            groups = est["groups"]
            vals = [np.sum(y[g] ** 2) / len(g) for g in groups]
            return float(np.median(vals) * est["median_correction"])
        if kind == "countsketch":
            blocks = est["blocks"]
            vals = [np.sum(y[b] ** 2) for b in blocks]
            return float(np.median(vals) * est["median_correction"])
        if kind == "rounded-gaussian":
            w = self.working_value(y)
            return float(self.n / self.r * np.sum(w**2))
        if kind == "projection-threshold":
            w = self.working_value(y)
            return float(np.sum(w**2))
        raise BadParams(f"unknown family {kind}")

    def gap_bit(self, y, params: GapNormParams):
        """Thresholded GapNorm answer from the sketched value only."""
        if self.family == "projection-threshold":
            w = self.working_value(y)
            return int(np.sum(w**2) >= self.estimator["tau"])
        mid = params.alpha * math.sqrt(params.B)
        return int(self.l2_estimate(y) >= mid)

    def spec_json(self):
        """Replayable build spec (family, n, r, seed, params)."""
        return json.dumps(
            {
                "family": self.family,
                "n": self.n,
                "r": self.r,
                "seed": self.seed,
                "params": self.params,
            },
            sort_keys=True,
        )


def _median_correction(group_sizes, rng, trials=4000):
    """Monte Carlo correction so the median-of-group-means estimator is
    unbiased on Gaussian-like inputs (the median of chi^2 means sits below 1)."""
    sims = np.empty(trials)
    for t in range(trials):
        vals = [np.mean(rng.standard_normal(k) ** 2) for k in group_sizes]
        sims[t] = np.median(vals)
    m = float(np.mean(sims))
    return 1.0 / m


def _calibrate_projection_threshold(Q, R, n, r, alpha, B, rng, m_cal=4000):
    """Fit tau so false rates on both promise-side distributions (isotropic
    discrete Gaussians at sigma^2 in {2 alpha, alpha B / 2}) are minimized.

    At desk-scale (small r, small B) a 1% target on both sides may be
    infeasible; the achieved rates are recorded, not asserted.
    """
    lo_s2, hi_s2 = 2.0 * alpha, alpha * B / 2.0
    lows = dgauss.sample_dgauss_1d(lo_s2, rng, size=(m_cal, n)).astype(float)
    highs = dgauss.sample_dgauss_1d(hi_s2, rng, size=(m_cal, n)).astype(float)
    low_stat = np.sum((lows @ Q.T) ** 2, axis=1)
    high_stat = np.sum((highs @ Q.T) ** 2, axis=1)
    cands = np.unique(np.concatenate([low_stat, high_stat]))
    # false_low: low-side samples answered 1; false_high: high-side answered 0
    false_low = 1.0 - np.searchsorted(np.sort(low_stat), cands, side="left") / m_cal
    false_high = np.searchsorted(np.sort(high_stat), cands, side="left") / m_cal
    worst = np.maximum(false_low, false_high)
    k = int(np.argmin(worst))
    tau = float(cands[k])
    return {
        "tau": tau,
        "c": tau / (alpha * B * r / n),
        "false_low": float(false_low[k]),
        "false_high": float(false_high[k]),
        "calibration_sigma2": [lo_s2, hi_s2],
        "m_cal": m_cal,
    }


def build_sketch(family, n, r, params=None, seed=0):
    """Construct an IntegerSketch of the given family with its estimator.

    sign: +-1 entries, median over row-groups of mean squared entries.
    rounded-gaussian: entries round(N(0, s^2)), estimate (n/r) ||Q x||^2.
    countsketch: one +-1 per column per repetition block.
    projection-threshold: GapNorm bit ||Q x||^2 >= tau with tau calibrated
    from params {"alpha": float, "B": float}.
    """
    if family not in FAMILIES:
        raise BadParams(f"unknown family {family!r}; choose from {FAMILIES}")
    if not (1 <= r <= n):
        raise BadParams(f"need 1 <= r <= n, got r={r}, n={n}")
    params = dict(params or {})
    rng = derive(seed, "sketch", family)
    est = {}

    if family in ("sign", "projection-threshold"):
        A = rng.choice(np.array([-1, 1], dtype=np.int64), size=(r, n))
    elif family == "rounded-gaussian":
        s = float(params.get("entry_std", math.sqrt(n)))
        A = np.rint(rng.standard_normal((r, n)) * s).astype(np.int64)
        if int(np.max(np.abs(A))) > n * n:
            raise BadParams(
                f"entry_std={s} produced entries beyond the poly(n) cap {n * n}"
            )
        if not np.any(A):
            raise BadParams("rounded-gaussian entries all zero; increase entry_std")
    elif family == "countsketch":
        reps = int(params.get("reps", max(1, r // 8)))
        if r % reps != 0:
            raise BadParams(f"reps={reps} must divide r={r}")
        buckets = r // reps
        A = np.zeros((r, n), dtype=np.int64)
        blocks = []
        for j in range(reps):
            h = rng.integers(0, buckets, size=n)
            s = rng.choice(np.array([-1, 1], dtype=np.int64), size=n)
            rows = np.arange(j * buckets, (j + 1) * buckets)
            A[rows[h], np.arange(n)] = s
            blocks.append(rows)
        est["blocks"] = blocks
        params["reps"] = reps

    Q, R = orthonormalize_rows(A.astype(float))

    if family == "sign":
        g = int(params.get("groups", min(5, r)))
        groups = np.array_split(np.arange(r), g)
        est["groups"] = groups
        est["median_correction"] = _median_correction(
            [len(grp) for grp in groups], derive(seed, "sketch-cal", family)
        )
        params["groups"] = g
    elif family == "countsketch":
        est["median_correction"] = _median_correction(
            [r // params["reps"]] * params["reps"],
            derive(seed, "sketch-cal", family),
        )
    elif family == "projection-threshold":
        if "alpha" not in params or "B" not in params:
            raise BadParams("projection-threshold needs params alpha and B")
        est.update(
            _calibrate_projection_threshold(
                Q, R, n, r, float(params["alpha"]), float(params["B"]),
                derive(seed, "sketch-cal", family),
                m_cal=int(params.get("m_cal", 4000)),
            )
        )

    sk = IntegerSketch(
        A=IntMatrix.from_rows(A),
        seed=int(seed),
        family=family,
        params=params,
        Q=Q,
        R=R,
        estimator=est,
    )
    return sk


def gapnorm_oracle(sketch: IntegerSketch, params: GapNormParams, x):
    """One-shot GapNorm bit for query x, computed only from A x."""
    return sketch.gap_bit(sketch.apply(x), params)


class GapNormOracle:
    """Query interface handed to the attack: bits only, no access to A.

    Queries are ingested as turnstile coordinate-update batches through
    StreamState, honoring the streaming contract.
    """

    safe_concurrent = True
    is_ground_truth = False

    def __init__(self, sketch: IntegerSketch, params: GapNormParams):
        self._sketch = sketch
        self.params = params
        self.query_count = 0

    @property
    def n(self):
        return self._sketch.n

    def query(self, x):
        stream = self._sketch.new_stream()
        stream.ingest_vector(x)
        self.query_count += 1
        return self._sketch.gap_bit(stream.value, self.params)

    def query_batch(self, X):
        return np.array([self.query(x) for x in np.asarray(X)], dtype=np.int8)


class ExactNormOracle:
    """Negative control: answers from the true squared norm of the query.

    Default threshold 3 alpha n sits between the verifier's low-side window
    3 alpha (n-d) and the high-side demands at sigma^2 >= alpha B / 2 for the
    desk-scale B used here, so this oracle admits no failure certificate.
    """

    safe_concurrent = True
    is_ground_truth = True

    def __init__(self, n, params: GapNormParams, threshold=None):
        self.n = n
        self.params = params
        self.threshold = float(threshold if threshold is not None
                               else 3.0 * params.alpha * n)
        self.query_count = 0

    def query(self, x):
        self.query_count += 1
        x = np.asarray(x, dtype=float)
        return int(x @ x >= self.threshold)

    def query_batch(self, X):
        X = np.asarray(X, dtype=float)
        self.query_count += X.shape[0]
        return (np.sum(X * X, axis=1) >= self.threshold).astype(np.int8)
