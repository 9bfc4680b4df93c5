"""Seeded Monte Carlo ensembles of adaptive-filter realizations.

Realizations are grouped into fixed blocks of :data:`BLOCK_SIZE`.  Each block
sums its convergent trajectories in realization order and the block sums are
combined in block order, so the floating-point result does not depend on how
many worker threads ran the blocks.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .filters import ALGORITHMS, DEFAULT_DIVERGENCE_THRESHOLD, NNLMF, _ERROR_POWER, simulate
from .signals import SystemModel, correlation_matrix, realization_seed
from .theory import TheoryCurves

BLOCK_SIZE = 8


class AllRealizationsDiverged(RuntimeError):
    """Every realization of an ensemble diverged; no averages exist."""


@dataclass(frozen=True)
class EnsembleConfig:
    system: SystemModel
    mu: float
    psi: np.ndarray
    n_iters: int
    n_realizations: int = 200
    master_seed: int = 0
    algorithm: str = NNLMF
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        if psi.shape != self.system.w_star.shape:
            raise ValueError("initial weights and w_star differ in length")
        object.__setattr__(self, "psi", psi)
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ValueError("mu must be finite and nonnegative")
        if self.n_iters < 1:
            raise ValueError("n_iters must be >= 1")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not self.divergence_threshold > 0:
            raise ValueError("divergence_threshold must be positive")


@dataclass
class EnsembleResult:
    """Ensemble averages over the convergent realizations.

    ``emse`` is the average of ``(e(n) - z(n))**2``.  ``emse_trace`` is the
    average of ``w~(n)^T R w~(n)`` using the exact input correlation; it is a
    diagnostic, not the reported learning curve.  The curve arrays are
    ``None`` when every realization diverged or recording was disabled.
    """

    mean_weights: np.ndarray | None
    emse: np.ndarray | None
    emse_trace: np.ndarray | None
    diverged: np.ndarray
    n_iters: int

    @property
    def n_realizations(self) -> int:
        return self.diverged.size

    @property
    def n_diverged(self) -> int:
        return int(self.diverged.sum())

    @property
    def n_converged(self) -> int:
        return self.n_realizations - self.n_diverged

    @property
    def divergence_fraction(self) -> float:
        return self.n_diverged / self.n_realizations

    @property
    def all_diverged(self) -> bool:
        return self.n_converged == 0


def _run_block(cfg: EnsembleConfig, indices: range, record: bool, R):
    M = cfg.system.order
    power = _ERROR_POWER[cfg.algorithm]
    flags = np.zeros(len(indices), dtype=bool)
    sums = None
    if record:
        sums = [np.zeros((cfg.n_iters, M)), np.zeros(cfg.n_iters), np.zeros(cfg.n_iters)]
    for j, r in enumerate(indices):
        run = simulate(cfg.system, cfg.psi, cfg.mu, power, cfg.n_iters,
                       realization_seed(cfg.master_seed, r), cfg.divergence_threshold, record)
        flags[j] = run.diverged
        if record and not run.diverged:
            wt = run.weights - cfg.system.w_star
            sums[0] += run.weights
            sums[1] += run.emse
            sums[2] += np.einsum("ni,ij,nj->n", wt, R, wt)
    return flags, sums


def run_ensemble(cfg: EnsembleConfig, workers: int = 1, record: bool = True,
                 allow_all_diverged: bool = False) -> EnsembleResult:
    """Run ``cfg.n_realizations`` independent realizations from the shared start ``cfg.psi``.

    Realization ``r`` draws its input and noise from streams seeded by
    ``(cfg.master_seed, r)``.  Divergent realizations are excluded from the
    averages and counted.  Raises :class:`AllRealizationsDiverged` when no
    realization converged, unless ``allow_all_diverged`` is set (the result
    then carries ``None`` curves).
    """
    R = correlation_matrix(cfg.system.input, cfg.system.order)
    blocks = [range(s, min(s + BLOCK_SIZE, cfg.n_realizations))
              for s in range(0, cfg.n_realizations, BLOCK_SIZE)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _run_block(cfg, b, record, R), blocks))
    else:
        parts = [_run_block(cfg, b, record, R) for b in blocks]

    flags = np.concatenate([p[0] for p in parts])
    n_ok = int((~flags).sum())
    if n_ok == 0 and not allow_all_diverged:
        raise AllRealizationsDiverged(f"all {cfg.n_realizations} realizations diverged")
    if not record or n_ok == 0:
        return EnsembleResult(None, None, None, flags, cfg.n_iters)

    totals = [np.zeros_like(a) for a in parts[0][1]]
    for _, sums in parts:
        for acc, s in zip(totals, sums):
            acc += s
    W, E, T = (t / n_ok for t in totals)
    return EnsembleResult(W, E, T, flags, cfg.n_iters)


def to_db(x):
    """``10 log10(x)``; raises for non-positive input."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("to_db requires strictly positive values")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def _db_or_nan(x):
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, np.nan)
    pos = x > 0
    out[pos] = 10.0 * np.log10(x[pos])
    return out


@dataclass
class DeviationReport:
    """Model vs simulation deviations.

    ``weight_dev[n]`` is ``max_i |sim_i(n) - model_i(n)|``; ``tap_max_dev[i]``
    is the maximum over iterations for tap ``i``.  ``emse_dev_db[n]`` is
    ``sim_dB(n) - model_dB(n)``: zero where the linear values are equal, NaN
    where they differ and either is not positive.
    The summary maxima cover iterations ``>= burn_in`` and the last
    ``tail_window`` iterations.
    """

    weight_dev: np.ndarray
    tap_max_dev: np.ndarray
    emse_dev_db: np.ndarray
    burn_in: int
    tail_window: int

    def _window(self, a, tail: bool):
        start = max(self.burn_in, a.size - self.tail_window) if tail else self.burn_in
        return a[start:]

    @property
    def max_weight_dev(self) -> float:
        return float(np.max(self.weight_dev))

    @property
    def max_emse_dev_db(self) -> float:
        return float(np.nanmax(np.abs(self._window(self.emse_dev_db, False))))

    @property
    def tail_max_weight_dev(self) -> float:
        return float(np.max(self._window(self.weight_dev, True)))

    @property
    def tail_max_emse_dev_db(self) -> float:
        return float(np.nanmax(np.abs(self._window(self.emse_dev_db, True))))

    def summary(self) -> dict:
        return {
            "max_weight_dev": self.max_weight_dev,
            "max_emse_dev_db": self.max_emse_dev_db,
            "tail_max_weight_dev": self.tail_max_weight_dev,
            "tail_max_emse_dev_db": self.tail_max_emse_dev_db,
            "burn_in": self.burn_in,
            "tail_window": self.tail_window,
        }


def compare_model_vs_simulation(result: EnsembleResult, theory: TheoryCurves,
                                burn_in: int = 0, tail_window: int | None = None) -> DeviationReport:
    if result.mean_weights is None:
        raise ValueError("ensemble result has no curves to compare")
    if result.mean_weights.shape != theory.mean_weights.shape or result.emse.shape != theory.emse.shape:
        raise ValueError("simulation and model curves differ in length")
    n = result.emse.size
    if not 0 <= burn_in < n:
        raise ValueError("burn_in must lie inside the curve")
    tail = n if tail_window is None else int(tail_window)
    if tail < 1:
        raise ValueError("tail_window must be >= 1")
    diff = np.abs(result.mean_weights - theory.mean_weights)
    return DeviationReport(
        weight_dev=diff.max(axis=1),
        tap_max_dev=diff.max(axis=0),
        emse_dev_db=np.where(result.emse == theory.emse, 0.0,
                             _db_or_nan(result.emse) - _db_or_nan(theory.emse)),
        burn_in=burn_in,
        tail_window=tail,
    )
