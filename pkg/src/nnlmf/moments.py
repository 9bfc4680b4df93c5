"""Gaussian higher-order moment kernels and their exact small-scale oracles.

The kernels used by the covariance model are exact when the weight-error
vector is deterministic and the regressor is zero-mean Gaussian with
correlation ``R``.  The ``*_oracle`` and ``*_monte_carlo`` functions
evaluate those exact quantities independently so the kernels can be checked.
"""
from __future__ import annotations

import numpy as np

from .signals import SeedLike, as_seed_sequence


def _square(R) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError("R must be a square matrix")
    return R


def _vector(v, M: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (M,):
        raise ValueError(f"{name} must have length {M}, got shape {v.shape}")
    return v


def cubic_moment_approx(R, K, mean) -> np.ndarray:
    """Approximation ``3 Tr{RK} R m`` of ``E{u (w~^T u)^3}``."""
    R = _square(R)
    K = np.asarray(K, dtype=float)
    if K.shape != R.shape:
        raise ValueError("K and R must have the same shape")
    m = _vector(mean, R.shape[0], "mean")
    return 3.0 * np.trace(R @ K) * (R @ m)


def isserlis_cubic_oracle(R, w_tilde) -> np.ndarray:
    """Exact ``E{u (w^T u)^3}`` for fixed ``w`` and ``u ~ N(0, R)``.

    Entry ``i`` is ``sum_{jkl} w_j w_k w_l E{u_i u_j u_k u_l}``; Isserlis'
    theorem splits the fourth moment into three pairings, each contributing
    ``(R w)_i (w^T R w)``.  The sum over pairings is written out explicitly
    rather than collapsed.
    """
    R = _square(R)
    w = _vector(w_tilde, R.shape[0], "w_tilde")
    # E{u_i u_j u_k u_l} = R_ij R_kl + R_ik R_jl + R_il R_jk
    fourth = (
        np.einsum("ij,kl->ijkl", R, R)
        + np.einsum("ik,jl->ijkl", R, R)
        + np.einsum("il,jk->ijkl", R, R)
    )
    return np.einsum("ijkl,j,k,l->i", fourth, w, w, w)


def _gaussian_draws(R, n_samples: int, seed: SeedLike) -> np.ndarray:
    R = _square(R)
    rng = np.random.Generator(np.random.PCG64(as_seed_sequence(seed)))
    try:
        L = np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(R)
        if vals.min() < -1e-10 * max(1.0, abs(vals).max()):
            raise ValueError("R is not positive semidefinite") from None
        L = vecs * np.sqrt(np.clip(vals, 0.0, None))
    return rng.standard_normal((n_samples, R.shape[0])) @ L.T


def isserlis_cubic_monte_carlo(R, w_tilde, n_samples: int = 1_000_000, seed: SeedLike = 0):
    """Sample estimate of ``E{u (w^T u)^3}`` with per-entry standard errors."""
    R = _square(R)
    w = _vector(w_tilde, R.shape[0], "w_tilde")
    u = _gaussian_draws(R, n_samples, seed)
    terms = u * ((u @ w) ** 3)[:, None]
    return terms.mean(axis=0), terms.std(axis=0, ddof=1) / np.sqrt(n_samples)


def hadamard_quadratic_exact(R, w_tilde) -> np.ndarray:
    """``E{D_u w w^T D_u} = R o (w w^T)`` for fixed ``w``."""
    R = _square(R)
    w = _vector(w_tilde, R.shape[0], "w_tilde")
    return R * np.outer(w, w)


def hadamard_quadratic_monte_carlo(R, w_tilde, n_samples: int = 1_000_000, seed: SeedLike = 0):
    """Sample estimate of ``E{D_u w w^T D_u}`` with entrywise standard errors."""
    R = _square(R)
    w = _vector(w_tilde, R.shape[0], "w_tilde")
    uw = _gaussian_draws(R, n_samples, seed) * w
    mean = uw.T @ uw / n_samples
    sq = (uw**2).T @ (uw**2) / n_samples
    var = (sq - mean**2) * n_samples / (n_samples - 1)
    return mean, np.sqrt(np.clip(var, 0.0, None) / n_samples)


_EVEN_FACTOR = {2: 1.0, 4: 3.0, 6: 15.0}


def even_power_moment(variance: float, order: int) -> float:
    """``E{x^order}`` for ``x ~ N(0, variance)``, order in {2, 4, 6}."""
    if order not in _EVEN_FACTOR:
        raise ValueError(f"unsupported order {order}; expected 2, 4 or 6")
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    return _EVEN_FACTOR[order] * variance ** (order // 2)
