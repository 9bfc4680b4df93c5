"""Analytical mean-weight and second-moment model of the NNLMF algorithm.

The model tracks the mean weight-error vector ``m(n) = E{w~(n)}`` and the
weight-error second-moment matrix ``K(n) = E{w~ w~^T}``.  The mean recursion
replaces ``K`` by ``m m^T`` inside its trace term by default; set
``mean_trace="full"`` to use the tracked ``K`` instead.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .signals import SystemModel, correlation_matrix, noise_moments

RANK_ONE = "rank_one"
FULL = "full"


@dataclass(frozen=True)
class TheoryConfig:
    w_star: np.ndarray
    R: np.ndarray
    mu: float
    sigma2: float
    m4: float
    m6: float
    mean_trace: str = RANK_ONE

    def __post_init__(self):
        w = np.asarray(self.w_star, dtype=float)
        R = np.asarray(self.R, dtype=float)
        if w.ndim != 1:
            raise ValueError("w_star must be a vector")
        if R.shape != (w.size, w.size):
            raise ValueError(f"R must be {w.size}x{w.size}, got {R.shape}")
        if not np.allclose(R, R.T, rtol=0, atol=1e-12 * max(1.0, np.abs(R).max())):
            raise ValueError("R must be symmetric")
        if np.linalg.eigvalsh(R).min() < -1e-10 * max(1.0, np.abs(R).max()):
            raise ValueError("R must be positive semidefinite")
        if not self.mu >= 0:
            raise ValueError("mu must be nonnegative")
        if self.mean_trace not in (RANK_ONE, FULL):
            raise ValueError(f"mean_trace must be {RANK_ONE!r} or {FULL!r}")
        object.__setattr__(self, "w_star", w)
        object.__setattr__(self, "R", R)

    @property
    def order(self) -> int:
        return self.w_star.size

    @classmethod
    def from_system(cls, system: SystemModel, mu: float, mean_trace: str = RANK_ONE) -> "TheoryConfig":
        s2, m4, m6 = noise_moments(system.noise)
        R = correlation_matrix(system.input, system.order)
        return cls(system.w_star, R, mu, s2, m4, m6, mean_trace)


@dataclass
class TheoryState:
    mean: np.ndarray
    K: np.ndarray
    n: int = 0

    @classmethod
    def initial(cls, psi0, w_star) -> "TheoryState":
        """Common deterministic start ``w(0) = psi0``, so ``K(0)`` is an outer product."""
        m = np.asarray(psi0, dtype=float) - np.asarray(w_star, dtype=float)
        return cls(m, np.outer(m, m), 0)


def _check(cfg: TheoryConfig, mean=None, K=None):
    M = cfg.order
    if mean is not None:
        mean = np.asarray(mean, dtype=float)
        if mean.shape != (M,):
            raise ValueError(f"mean must have length {M}, got shape {mean.shape}")
    if K is not None:
        K = np.asarray(K, dtype=float)
        if K.shape != (M, M):
            raise ValueError(f"K must be {M}x{M}, got shape {K.shape}")
    return mean, K


def _mean_step(m, cfg, trace):
    Rm = cfg.R @ m
    return m - 3.0 * cfg.mu * (cfg.sigma2 + trace) * (cfg.w_star + m) * Rm


def mean_step(mean, cfg: TheoryConfig, K=None) -> np.ndarray:
    """Advance ``E{w~(n)}`` by one iteration.

    ``m' = m - 3 mu sigma_z^2 D_[w*+m] R m - 3 mu Tr{R m m^T} D_[w*+m] R m``.
    With ``cfg.mean_trace == "full"`` and ``K`` supplied the trace uses ``K``.
    """
    m, K = _check(cfg, mean, K)
    if cfg.mean_trace == FULL and K is not None:
        trace = float(np.sum(cfg.R * K))
    else:
        trace = float(m @ cfg.R @ m)
    return _mean_step(m, cfg, trace)


def mean_step_white(mean, sigma_u2: float, sigma_z2: float, mu: float, w_star) -> np.ndarray:
    """Mean recursion specialised to white input, ``R = sigma_u2 * I``."""
    m = np.asarray(mean, dtype=float)
    w = np.asarray(w_star, dtype=float)
    if m.shape != w.shape:
        raise ValueError("mean and w_star differ in length")
    factor = 3.0 * mu * (sigma_z2 * sigma_u2 + sigma_u2**2 * (m @ m))
    return m - factor * m * (w + m)


def fixed_points(w_star) -> list[tuple[float, ...]]:
    """Per-tap stationary values of the mean weight error, ``{0, -w*_i}``.

    This is the fixed-point set of the white-input recursion.  With correlated
    input a tap can also rest where ``(R m)_i = 0``.
    """
    out = []
    for w in np.asarray(w_star, dtype=float):
        out.append((0.0,) if w == 0.0 else (0.0, -float(w)))
    return out


def _phi1(K, m, cfg, trace):
    A = (K @ cfg.R) * (m + cfg.w_star)[None, :]
    return -3.0 * (cfg.sigma2 + trace) * (A + A.T)


def _phi2(K, m, cfg, trace):
    w = cfg.w_star
    # D_m R D_w + D_w R D_m + D_w R D_w  ==  R o P  (same P for the Upsilon terms)
    P = np.outer(w, w) + np.outer(w, m) + np.outer(m, w)
    RK = cfg.R @ K
    upsilon = 2.0 * RK @ cfg.R + trace * cfg.R
    scalar = cfg.m6 + 45.0 * cfg.sigma2 * trace**2 + 15.0 * trace**3
    KP = K + P
    return scalar * (cfg.R * KP) + 15.0 * cfg.m4 * (upsilon * KP)


def phi1(K, mean, cfg: TheoryConfig) -> np.ndarray:
    """First-order-in-mu term of the ``K`` recursion."""
    m, K = _check(cfg, mean, K)
    return _phi1(K, m, cfg, float(np.sum(cfg.R * K)))


def phi2(K, mean, cfg: TheoryConfig) -> np.ndarray:
    """Second-order-in-mu term of the ``K`` recursion.

    Uses the noise moments ``sigma_z^2``, ``E{z^4}``, ``E{z^6}`` together with
    ``Upsilon = 2 R K R + Tr{RK} R``.
    """
    m, K = _check(cfg, mean, K)
    return _phi2(K, m, cfg, float(np.sum(cfg.R * K)))


def emse(R, K) -> float:
    """Excess mean-square error ``Tr{R K}``."""
    R = np.asarray(R, dtype=float)
    K = np.asarray(K, dtype=float)
    if R.shape != K.shape or R.ndim != 2:
        raise ValueError("R and K must be square matrices of equal size")
    return float(np.trace(R @ K))


def _advance(m, K, cfg):
    # Tr{RK} for symmetric R; numpy scalars so overflow gives inf instead of raising
    trace = np.sum(cfg.R * K)
    mean_trace = trace if cfg.mean_trace == FULL else m @ cfg.R @ m
    K_next = K + cfg.mu * _phi1(K, m, cfg, trace) + cfg.mu**2 * _phi2(K, m, cfg, trace)
    K_next = 0.5 * (K_next + K_next.T)
    return _mean_step(m, cfg, mean_trace), K_next


def covariance_step(state: TheoryState, cfg: TheoryConfig) -> TheoryState:
    """Advance ``(E{w~}, K)`` jointly; both updates read the time-``n`` state."""
    m, K = _check(cfg, state.mean, state.K)
    m_next, K_next = _advance(m, K, cfg)
    return TheoryState(m_next, K_next, state.n + 1)


@dataclass
class TheoryCurves:
    """Model predictions for ``n = 0 .. n_iters-1``.

    ``indefinite_at`` is the first iteration at which ``K`` had a negative
    diagonal entry or a non-finite value (``None`` if never).
    """

    mean_weights: np.ndarray
    emse: np.ndarray
    w_star: np.ndarray
    final_state: TheoryState
    indefinite_at: int | None = None

    @property
    def flagged(self) -> bool:
        return self.indefinite_at is not None


def predict_curves(cfg: TheoryConfig, psi0, n_iters: int) -> TheoryCurves:
    """Iterate the coupled model from the deterministic start ``w(0) = psi0``.

    Returns ``E{w(n)}`` and ``xi(n) = Tr{R K(n)}``; index 0 is the initial
    state, so the recursion is applied ``n_iters - 1`` times.  No positivity
    repair is applied to ``K``.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    psi0 = np.asarray(psi0, dtype=float)
    if psi0.shape != cfg.w_star.shape:
        raise ValueError("psi0 and w_star differ in length")
    state = TheoryState.initial(psi0, cfg.w_star)
    m, K = state.mean, state.K
    means = np.full((n_iters, cfg.order), np.nan)
    xi = np.full(n_iters, np.nan)
    flagged = None
    for n in range(n_iters):
        means[n] = m + cfg.w_star
        xi[n] = float(np.sum(cfg.R * K))
        if flagged is None and (not np.isfinite(xi[n]) or np.any(np.diag(K) < 0)):
            flagged = n
            if not np.isfinite(xi[n]):
                break
        if n + 1 < n_iters:
            with np.errstate(over="ignore", invalid="ignore"):
                m, K = _advance(m, K, cfg)
    last = min(n, n_iters - 1)
    return TheoryCurves(means, xi, cfg.w_star, TheoryState(m, K, last), flagged)


def with_step_size(cfg: TheoryConfig, mu: float) -> TheoryConfig:
    return replace(cfg, mu=mu)
