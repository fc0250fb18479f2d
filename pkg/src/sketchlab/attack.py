"""Adaptive attack engine for GapNorm oracles: learns the sketch rowspace
from yes/no answers, terminates with a failure certificate when the answer
rate at some subspace-variance pair contradicts correctness, and extracts
integer exploit queries from the certificate.

Round structure: per round the variance grid is swept in ascending order,
m queries are drawn from D(V_t^perp, sigma^2) per grid point, and the first
direction whose positive-sample singular score crosses
sigma^2 + sigma^2/4 + slack is orthogonalized into the learned basis.
"""

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .dgauss import SubspaceGaussianSpec, sample_subspace_query, smoothing_r0sq
from .errors import (
    BadParams,
    DegenerateResidual,
    NoExploitFound,
    NoPositives,
    OracleFailure,
    VarianceTooSmall,
)
from .numerics import OrthonormalBasis, gram_schmidt_residual, top_right_singular_vector
from .rng import as_generator
from .sketch import GapNormParams

MAX_GRID_POINTS = 100_000


def zeta_floor(B, n):
    """Termination-rate resolution 1/(20 (Bn)^2 log(Bn)); the zeta grid is
    spaced at this value."""
    return 1.0 / (20.0 * (B * n) ** 2 * math.log(B * n))


@dataclass
class AttackConfig:
    """Tunable attack parameters. Defaults are desk-scale: the sample counts
    and grid resolution behind the asymptotic guarantees are astronomically
    larger and matter only for the proofs, not the mechanism."""

    gap: GapNormParams
    m: int = 2000
    grid_kind: str = "geometric"   # "geometric" | "zeta" (arithmetic, zeta-spaced)
    grid_points: int = 16
    positive_floor: float = None   # min positive count; default m/(100 B^2 n)
    slack_mode: str = "relative"   # sigma^2/(14Br) ("relative") or 1/(14Br)
    round_cap: int = None          # default r_budget + 1
    zeta: float = None             # default max(zeta_floor, 5/sqrt(m))
    verify_trials: int = 10_000

    def __post_init__(self):
        if self.m < 100:
            raise BadParams(f"m must be >= 100, got {self.m}")
        if self.grid_kind not in ("geometric", "zeta"):
            raise BadParams(f"unknown grid kind {self.grid_kind!r}")
        if self.slack_mode not in ("relative", "absolute"):
            raise BadParams(f"unknown slack mode {self.slack_mode!r}")

    def validate_for(self, n):
        if self.gap.alpha / 4.0 < 2.0 * smoothing_r0sq(n):
            raise VarianceTooSmall(
                f"alpha={self.gap.alpha} too small for exact discrete sampling at n={n}"
            )

    def effective_zeta(self, n):
        if self.zeta is not None:
            return self.zeta
        return max(zeta_floor(self.gap.B, n), 5.0 / math.sqrt(self.m))

    def effective_floor(self, n):
        if self.positive_floor is not None:
            return self.positive_floor
        return self.m / (100.0 * self.gap.B**2 * n)

    def slack(self, sigma2, r_budget):
        denom = 14.0 * self.gap.B * r_budget
        return sigma2 / denom if self.slack_mode == "relative" else 1.0 / denom

    def grid_for(self, n):
        a, b = self.gap.alpha, self.gap.alpha * self.gap.B
        if self.grid_kind == "geometric":
            return np.geomspace(a, b, self.grid_points)
        zeta = zeta_floor(self.gap.B, n)
        count = int((b - a) / zeta) + 1
        if count > MAX_GRID_POINTS:
            raise BadParams(
                f"zeta-spaced grid would need {count} points (> {MAX_GRID_POINTS}); "
                "use the geometric grid at desk scale"
            )
        return a + zeta * np.arange(count)


@dataclass
class AttackState:
    t: int
    V: OrthonormalBasis
    stats: dict = field(default_factory=dict)       # (t, sigma2) -> record
    transcript: list = field(default_factory=list)  # ordered records
    accepted: list = field(default_factory=list)    # (t, sigma2, score)


@dataclass
class FailureCertificate:
    """(subspace, variance, side) on which the oracle's answer rate is
    inconsistent with correctness at the recorded zeta."""

    subspace: list          # orthonormal rows spanning V
    sigma2: float
    side: str               # "high" (rate <= 1-zeta) | "low" (rate >= zeta)
    empirical_rate: float
    sample_count: int
    zeta: float
    alpha: float
    B: float
    round: int

    def __post_init__(self):
        a, b = self.alpha, self.alpha * self.B
        if self.side == "high" and not (self.sigma2 >= a * self.B / 2.0):
            raise ValueError("high-side certificate needs sigma^2 >= alpha*B/2")
        if self.side == "low" and not (self.sigma2 <= 2.0 * a):
            raise ValueError("low-side certificate needs sigma^2 <= 2*alpha")
        if self.side not in ("high", "low"):
            raise ValueError(f"bad side {self.side}")

    @property
    def dim(self):
        return len(self.subspace)

    def basis(self, n):
        return OrthonormalBasis(n, [np.asarray(v, float) for v in self.subspace])

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, s):
        return cls(**json.loads(s))


@dataclass
class Exploit:
    x: list
    norm_sq: float
    answer: int
    wrong: bool


@dataclass
class AttackOutcome:
    outcome: str  # "certificate" | "exhausted"
    state: AttackState
    certificate: FailureCertificate = None


def _ask(oracle, X):
    try:
        if hasattr(oracle, "query_batch"):
            return np.asarray(oracle.query_batch(X), dtype=np.int8)
        return np.array([oracle.query(x) for x in X], dtype=np.int8)
    except Exception as exc:  # noqa: BLE001 - wrapped per contract
        raise OracleFailure(str(exc)) from exc


def round_step(state: AttackState, oracle, n, r_budget, config: AttackConfig, rng):
    """One attack round: sweep the grid, test termination per grid point,
    then fold the first above-threshold singular direction into the basis.

    Returns ("certificate", cert) | ("direction", v_t) | ("no-progress", None).
    """
    rng = as_generator(rng)
    zeta = config.effective_zeta(n)
    floor = config.effective_floor(n)
    alpha, B = config.gap.alpha, config.gap.B
    t = state.t
    found = None

    for sigma2 in config.grid_for(n):
        spec = SubspaceGaussianSpec(n, state.V, float(sigma2))
        X = sample_subspace_query(spec, "discrete", rng, size=config.m)
        answers = _ask(oracle, X)
        m_prime = int(answers.sum())
        rate = m_prime / config.m
        rec = {
            "round": t,
            "sigma2": float(sigma2),
            "rate": rate,
            "m_prime": m_prime,
            "score": None,
            "accepted": False,
        }
        state.stats[(t, float(sigma2))] = rec
        state.transcript.append(rec)

        if sigma2 >= alpha * B / 2.0 and rate <= 1.0 - zeta:
            cert = FailureCertificate(
                subspace=[list(map(float, v)) for v in state.V],
                sigma2=float(sigma2),
                side="high",
                empirical_rate=rate,
                sample_count=config.m,
                zeta=zeta,
                alpha=alpha,
                B=B,
                round=t,
            )
            return "certificate", cert
        if sigma2 <= 2.0 * alpha and rate >= zeta:
            cert = FailureCertificate(
                subspace=[list(map(float, v)) for v in state.V],
                sigma2=float(sigma2),
                side="low",
                empirical_rate=rate,
                sample_count=config.m,
                zeta=zeta,
                alpha=alpha,
                B=B,
                round=t,
            )
            return "certificate", cert

        # only the first above-threshold direction is consumed, so singular
        # scores are computed until one is found (later grid records carry
        # score None for this round)
        if m_prime >= max(floor, 1) and found is None:
            positives = X[answers == 1].astype(float)
            v_sigma, _ = top_right_singular_vector(positives)
            score = float(np.mean((positives @ v_sigma) ** 2))
            rec["score"] = score
            threshold = sigma2 + sigma2 / 4.0 + config.slack(sigma2, r_budget)
            if score >= threshold:
                rec["accepted"] = True
                found = (v_sigma, float(sigma2), score)

    if found is None:
        return "no-progress", None
    v_sigma, sigma2, score = found
    try:
        v_t = gram_schmidt_residual(v_sigma, state.V)
    except DegenerateResidual:
        return "no-progress", None
    state.V = state.V.extended(v_t)
    state.accepted.append((t, sigma2, score))
    return "direction", v_t


def run_attack(oracle, n, r_budget, config: AttackConfig, rng):
    """Run the adaptive attack; returns an AttackOutcome.

    Executes rounds t = 1..round_cap (default r_budget + 1); terminates with
    a FailureCertificate as soon as a grid point's answer rate contradicts
    correctness, else reports exhaustion with the final state.
    """
    rng = as_generator(rng)
    config.validate_for(n)
    cap = config.round_cap if config.round_cap is not None else r_budget + 1
    state = AttackState(t=1, V=OrthonormalBasis.empty(n))
    for t in range(1, cap + 1):
        state.t = t
        kind, payload = round_step(state, oracle, n, r_budget, config, rng)
        if kind == "certificate":
            return AttackOutcome("certificate", state, payload)
    return AttackOutcome("exhausted", state)


def verify_certificate(oracle, cert: FailureCertificate, trials, rng, n=None):
    """Draw fresh queries at the certificate's (V, sigma^2) and extract
    integer exploits.

    high side: exploits are queries answered 0 with ||x||^2 > alpha B (n-d)/3;
    low side: answered 1 with ||x||^2 < 3 alpha (n-d). Raises NoExploitFound
    when no exploit shows up in `trials` queries (certificate spurious).
    """
    rng = as_generator(rng)
    if n is None:
        n = oracle.n
    basis = cert.basis(n)
    d = cert.dim
    spec = SubspaceGaussianSpec(n, basis, cert.sigma2)
    X = sample_subspace_query(spec, "discrete", rng, size=int(trials))
    answers = _ask(oracle, X)
    norms = np.sum(X.astype(float) ** 2, axis=1)
    if cert.side == "high":
        mask = (answers == 0) & (norms > cert.alpha * cert.B * (n - d) / 3.0)
    else:
        mask = (answers == 1) & (norms < 3.0 * cert.alpha * (n - d))
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        raise NoExploitFound(
            f"no exploit in {trials} trials for {cert.side}-side certificate"
        )
    exploits = [
        Exploit(
            x=[int(v) for v in X[i]],
            norm_sq=float(norms[i]),
            answer=int(answers[i]),
            wrong=True,
        )
        for i in idx
    ]
    return {"failure_rate": idx.size / int(trials), "exploits": exploits}


def conditional_gap_estimate(oracle, spec: SubspaceGaussianSpec, u, m, rng):
    """Delta-hat = E[<u,x>^2 | f(x)=1] - E[<u,x>^2], with standard error.

    Raises NoPositives when the oracle never answers 1 on the m samples.
    """
    if m < 1000:
        raise BadParams("conditional gap estimation needs m >= 1000")
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-8:
        raise BadParams("u must be a unit vector")
    rng = as_generator(rng)
    X = sample_subspace_query(spec, "discrete", rng, size=int(m))
    answers = _ask(oracle, X)
    dots = (X.astype(float) @ u) ** 2
    m_prime = int(answers.sum())
    if m_prime == 0:
        raise NoPositives("oracle never answered 1")
    pos = dots[answers == 1]
    delta = float(pos.mean() - dots.mean())
    se = float(math.sqrt(pos.var(ddof=1) / m_prime + dots.var(ddof=1) / m)) \
        if m_prime > 1 else float("inf")
    return {
        "delta": delta,
        "se": se,
        "positive_rate": m_prime / m,
        "m": int(m),
        "m_prime": m_prime,
    }


def invariant_diagnostic(state: AttackState, true_sketch):
    """White-box diagnostic (test-only): distance between the learned basis
    V_t and the closest equal-dimensional subspace W_t inside rowspan(A).

    W_t is built from the principal vectors of V_t against the rowspan;
    distance is the operator norm of the projector difference.
    """
    Qa = true_sketch.Q  # (r, n) orthonormal rows
    Bv = state.V.matrix  # (k, n)
    k = Bv.shape[0]
    n = Qa.shape[1]
    if k == 0:
        return {"t": state.t, "dim": 0, "distance": 0.0, "sin_theta_max": 0.0}
    M = Bv @ Qa.T  # (k, r)
    U, S, _ = np.linalg.svd(M)
    S = np.clip(S, 0.0, 1.0)
    principal_v = U.T @ Bv  # rows: principal directions of V
    W_rows = []
    for i in range(k):
        w = (principal_v[i] @ Qa.T) @ Qa  # project onto rowspan
        nrm = np.linalg.norm(w)
        if nrm > 1e-9:
            w = w / nrm
            # orthogonalize against already-chosen rows for numerical safety
            for prev in W_rows:
                w = w - (w @ prev) * prev
            nrm2 = np.linalg.norm(w)
            if nrm2 > 1e-9:
                W_rows.append(w / nrm2)
                continue
        # principal direction orthogonal to rowspan; pad with any rowspan
        # direction orthogonal to the chosen ones
        for cand in Qa:
            w = cand.copy()
            for prev in W_rows:
                w = w - (w @ prev) * prev
            nrm2 = np.linalg.norm(w)
            if nrm2 > 1e-6:
                W_rows.append(w / nrm2)
                break
    Bw = np.vstack(W_rows) if W_rows else np.zeros((0, n))
    P_diff = Bv.T @ Bv - Bw.T @ Bw
    dist = float(np.linalg.norm(P_diff, 2))
    return {
        "t": state.t,
        "dim": k,
        "distance": dist,
        "sin_theta_max": float(math.sqrt(max(0.0, 1.0 - float(np.min(S)) ** 2))),
    }
