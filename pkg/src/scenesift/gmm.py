"""Online Gaussian mixture model with discounted updates and exact marginalization.

The model is a value: every operation returns a new state and never mutates
its input. Scoring code evaluates ``log_density`` against the state *before*
feeding the observation to ``update``, so each frame is judged by a model
that has not seen it. ``marginalize`` drops dimensions exactly (restricting
means and covariances), which is how a modality is "ignored" when attributing
a score.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError, DimensionError, InsufficientDataError, ParameterError

LOG_2PI = math.log(2.0 * math.pi)

# Additive responsibility smoothing: g <- (g + SMOOTHING/k) / (1 + SMOOTHING).
# Keeps every component's statistics alive so none collapses to zero weight.
RESP_SMOOTHING = 1e-2

COVARIANCE_MODES = ("diagonal", "full")


@dataclass(frozen=True)
class GmmConfig:
    k: int = 3
    discount_r: float = 0.005
    covariance: str = "diagonal"
    reg_eps: float = 1e-6
    seed: int = 0
    init_frames: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"k must be >= 1, got {self.k}")
        if not 0.0 < self.discount_r < 1.0:
            raise ParameterError(f"discount_r must be in (0,1), got {self.discount_r}")
        if self.covariance not in COVARIANCE_MODES:
            raise ParameterError(f"covariance must be one of {COVARIANCE_MODES}")
        if self.reg_eps <= 0.0:
            raise ParameterError(f"reg_eps must be > 0, got {self.reg_eps}")

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "discount_r": self.discount_r,
            "covariance": self.covariance,
            "reg_eps": self.reg_eps,
            "seed": self.seed,
            "init_frames": self.init_frames,
        }


@dataclass
class GmmState:
    """Mixture parameters over the dimensions listed in ``dim_index``.

    weights: (k,); means: (k, d); covariances: (k, d) for diagonal mode or
    (k, d, d) for full mode. ``dim_index`` maps state dimensions back to
    positions in the original feature vector, so marginal sub-models remember
    which dimensions they cover.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    frames_seen: int
    config: GmmConfig
    dim_index: np.ndarray

    @property
    def d(self) -> int:
        return self.means.shape[1]


def _check_vector(state: GmmState, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (state.d,):
        raise DimensionError(f"expected vector of length {state.d}, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise DataError("observation contains non-finite values")
    return x


def _component_log_densities(state: GmmState, x: np.ndarray) -> np.ndarray:
    """ln N(x; mu_k, Sigma_k) for every component, shape (k,)."""
    diff = x - state.means
    if state.config.covariance == "diagonal":
        log_det = np.log(state.covariances).sum(axis=1)
        maha = (diff * diff / state.covariances).sum(axis=1)
    else:
        k = state.weights.shape[0]
        log_det = np.empty(k)
        maha = np.empty(k)
        for j in range(k):
            chol = np.linalg.cholesky(state.covariances[j])
            log_det[j] = 2.0 * np.log(np.diagonal(chol)).sum()
            y = np.linalg.solve(chol, diff[j])
            maha[j] = y @ y
    return -0.5 * (state.d * LOG_2PI + log_det + maha)


def _logsumexp(v: np.ndarray) -> float:
    m = v.max()
    return float(m + np.log(np.exp(v - m).sum()))


def log_density(state: GmmState, x: np.ndarray) -> float:
    """ln sum_k w_k N(x; mu_k, Sigma_k), evaluated stably."""
    x = _check_vector(state, x)
    comp = _component_log_densities(state, x)
    return _logsumexp(np.log(state.weights) + comp)


def init(config: GmmConfig, warmup: np.ndarray) -> GmmState:
    """Seed a mixture from warmup vectors.

    Component means come from farthest-point selection over the warmup (the
    first pick drawn with ``config.seed``, each next pick the point farthest
    from the chosen set), so repeated points at two locations yield exactly
    those two means. All components start with the warmup's population
    covariance plus reg_eps, and uniform weights. Deterministic per seed.
    """
    warmup = np.asarray(warmup, dtype=np.float64)
    if warmup.ndim != 2 or warmup.shape[1] < 1:
        raise DimensionError(f"warmup must be (n, d), got shape {warmup.shape}")
    n, d = warmup.shape
    if n < config.k:
        raise InsufficientDataError(f"need >= {config.k} warmup vectors, got {n}")
    if not np.isfinite(warmup).all():
        raise DataError("warmup contains non-finite values")

    rng = np.random.default_rng(config.seed)
    chosen = [int(rng.integers(n))]
    min_dist = np.linalg.norm(warmup - warmup[chosen[0]], axis=1)
    while len(chosen) < config.k:
        nxt = int(np.argmax(min_dist))
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, np.linalg.norm(warmup - warmup[nxt], axis=1))
    means = warmup[chosen].copy()

    if config.covariance == "diagonal":
        var = warmup.var(axis=0) + config.reg_eps
        covs = np.tile(np.maximum(var, config.reg_eps), (config.k, 1))
    else:
        centered = warmup - warmup.mean(axis=0)
        cov = (centered.T @ centered) / n + config.reg_eps * np.eye(d)
        covs = np.tile(cov, (config.k, 1, 1))

    return GmmState(
        weights=np.full(config.k, 1.0 / config.k),
        means=means,
        covariances=covs,
        frames_seen=n,
        config=config,
        dim_index=np.arange(d),
    )


def update(state: GmmState, x: np.ndarray, discount: float | None = None) -> GmmState:
    """One discounted EM step; returns the new state.

    Responsibilities are computed under the current parameters, smoothed
    additively, and folded into exponentially forgotten sufficient statistics:
    every statistic is decayed by (1 - r) and incremented by r times the
    observation's contribution. ``discount`` overrides the configured rate for
    this step (e.g. to drive a 1/t schedule).
    """
    x = _check_vector(state, x)
    r = state.config.discount_r if discount is None else float(discount)
    if not 0.0 < r < 1.0:
        raise ParameterError(f"discount must be in (0,1), got {r}")
    k = state.weights.shape[0]
    eps = state.config.reg_eps

    comp = _component_log_densities(state, x)
    log_post = np.log(state.weights) + comp
    log_post -= log_post.max()
    gamma = np.exp(log_post)
    gamma /= gamma.sum()
    gamma = (gamma + RESP_SMOOTHING / k) / (1.0 + RESP_SMOOTHING)

    w_old = state.weights
    w_new = (1.0 - r) * w_old + r * gamma

    keep = ((1.0 - r) * w_old)[:, None]
    add = (r * gamma)[:, None]
    means_new = (keep * state.means + add * x) / w_new[:, None]

    if state.config.covariance == "diagonal":
        m2 = keep * (state.covariances + state.means ** 2) + add * x ** 2
        covs_new = m2 / w_new[:, None] - means_new ** 2
        covs_new = np.maximum(covs_new + eps, eps)
    else:
        covs_new = np.empty_like(state.covariances)
        eye = eps * np.eye(state.d)
        for j in range(k):
            second = state.covariances[j] + np.outer(state.means[j], state.means[j])
            m2 = (1.0 - r) * w_old[j] * second + r * gamma[j] * np.outer(x, x)
            cov = m2 / w_new[j] - np.outer(means_new[j], means_new[j])
            covs_new[j] = 0.5 * (cov + cov.T) + eye

    return GmmState(
        weights=w_new / w_new.sum(),
        means=means_new,
        covariances=covs_new,
        frames_seen=state.frames_seen + 1,
        config=state.config,
        dim_index=state.dim_index.copy(),
    )


def marginalize(state: GmmState, keep_dims) -> GmmState:
    """Exact marginal mixture over ``keep_dims`` (original-space indices).

    Gaussian marginalization under dimension dropping keeps the weights and
    restricts means and covariances to the kept rows/columns. The input state
    is untouched.
    """
    keep = set(int(i) for i in keep_dims)
    if not keep:
        raise ParameterError("keep_dims must be non-empty")
    positions = [i for i, orig in enumerate(state.dim_index) if int(orig) in keep]
    if len(positions) != len(keep):
        missing = keep - {int(v) for v in state.dim_index}
        raise ParameterError(f"keep_dims not covered by this state: {sorted(missing)}")

    pos = np.asarray(positions, dtype=int)
    if state.config.covariance == "diagonal":
        covs = state.covariances[:, pos].copy()
    else:
        covs = state.covariances[np.ix_(range(state.weights.shape[0]), pos, pos)].copy()

    return GmmState(
        weights=state.weights.copy(),
        means=state.means[:, pos].copy(),
        covariances=covs,
        frames_seen=state.frames_seen,
        config=state.config,
        dim_index=state.dim_index[pos].copy(),
    )


def serialize_state(state: GmmState) -> str:
    """JSON snapshot that round-trips bit-exactly (floats via repr)."""
    doc = {
        "weights": state.weights.tolist(),
        "means": state.means.tolist(),
        "covariances": state.covariances.tolist(),
        "frames_seen": state.frames_seen,
        "config": state.config.to_dict(),
        "dim_index": state.dim_index.tolist(),
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_state(text: str) -> GmmState:
    doc = json.loads(text)
    config = GmmConfig(**doc["config"])
    return GmmState(
        weights=np.asarray(doc["weights"], dtype=np.float64),
        means=np.asarray(doc["means"], dtype=np.float64),
        covariances=np.asarray(doc["covariances"], dtype=np.float64),
        frames_seen=int(doc["frames_seen"]),
        config=config,
        dim_index=np.asarray(doc["dim_index"], dtype=int),
    )
