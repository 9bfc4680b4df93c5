"""Empirical convergence/divergence map over step size and initial distance.

For a target distance ``d`` the filter starts at ``w(0) = k psi0`` with ``k``
chosen so that ``||k psi0 - w*||^2 = d``.  Every cell of a sweep uses the
same master seed, so neighbouring cells see identical input and noise
streams (common random numbers).
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .montecarlo import EnsembleConfig, run_ensemble

ALL_CONVERGED = "AllConverged"
SOMETIMES_DIVERGENT = "SometimesDivergent"
ALWAYS_DIVERGENT = "AlwaysDivergent"
FAILED = "Failed"

PAPER_MU_VALUES = tuple(round((0.1 + 0.2 * i) * 1e-5, 12) for i in range(11))
PAPER_D_VALUES = tuple(float(2 + 10 * i) for i in range(11))

DESK_REALIZATIONS = 50
DESK_ITERATIONS = 100_000
PAPER_REALIZATIONS = 1000
PAPER_ITERATIONS = 500_000


def min_distance(psi0, w_star) -> float:
    """``min_k ||k psi0 - w*||^2``."""
    p = np.asarray(psi0, dtype=float)
    w = np.asarray(w_star, dtype=float)
    pp = p @ p
    if pp == 0:
        return float(w @ w)
    return float(w @ w - (p @ w) ** 2 / pp)


def solve_scaling(psi0, w_star, d: float) -> float:
    """Larger root ``k`` of ``||psi0||^2 k^2 - 2 (psi0^T w*) k + ||w*||^2 - d = 0``."""
    p = np.asarray(psi0, dtype=float)
    w = np.asarray(w_star, dtype=float)
    if p.shape != w.shape:
        raise ValueError("psi0 and w_star differ in length")
    a = float(p @ p)
    if a == 0.0:
        raise ValueError("psi0 must be nonzero")
    b = float(p @ w)
    ww = float(w @ w)
    disc = b * b - a * (ww - d)
    # d at the minimum can land a few ulps below zero
    if disc < 0 and -disc <= 8 * np.finfo(float).eps * (b * b + a * (ww + abs(d))):
        disc = 0.0
    if disc < 0:
        raise ValueError(
            f"distance d={d} is below the minimum achievable {min_distance(p, w):.6g} for this psi0"
        )
    return (b + math.sqrt(disc)) / a


def classify(n_diverged: int, n_total: int) -> str:
    if n_diverged == 0:
        return ALL_CONVERGED
    if n_diverged == n_total:
        return ALWAYS_DIVERGENT
    return SOMETIMES_DIVERGENT


@dataclass
class CellResult:
    mu: float
    d: float
    k: float
    classification: str
    divergence_fraction: float
    error: str | None = None


def classify_cell(template: EnsembleConfig, mu: float, d: float, n_realizations: int,
                  n_iters: int, master_seed: int, workers: int = 1) -> CellResult:
    """Run ``n_realizations`` realizations from ``k psi0`` and classify the cell.

    ``template`` supplies the system, base initialization ``psi0`` (its
    ``psi`` field), algorithm and divergence threshold.
    """
    k = solve_scaling(template.psi, template.system.w_star, d)
    cfg = replace(template, mu=mu, psi=k * template.psi, n_iters=n_iters,
                  n_realizations=n_realizations, master_seed=master_seed)
    result = run_ensemble(cfg, workers=workers, record=False, allow_all_diverged=True)
    return CellResult(mu, d, k, classify(result.n_diverged, result.n_realizations),
                      result.divergence_fraction)


@dataclass
class GridSpec:
    mu_values: tuple = PAPER_MU_VALUES
    d_values: tuple = PAPER_D_VALUES
    n_realizations: int = DESK_REALIZATIONS
    n_iters: int = DESK_ITERATIONS
    master_seed: int = 0

    def __post_init__(self):
        if not self.mu_values or not self.d_values:
            raise ValueError("grid must contain at least one mu and one d value")


@dataclass
class StabilityGrid:
    mu_values: tuple
    d_values: tuple
    cells: list = field(default_factory=list)

    @property
    def scaling(self) -> dict:
        return {c.d: c.k for c in self.cells if not math.isnan(c.k)}

    def cell(self, mu: float, d: float) -> CellResult:
        for c in self.cells:
            if math.isclose(c.mu, mu, rel_tol=1e-9, abs_tol=1e-15) and math.isclose(c.d, d, rel_tol=1e-9):
                return c
        raise KeyError((mu, d))

    @property
    def failed(self) -> list:
        return [c for c in self.cells if c.classification == FAILED]

    def classes(self) -> np.ndarray:
        """Classification matrix indexed ``[mu_index, d_index]``."""
        out = np.empty((len(self.mu_values), len(self.d_values)), dtype=object)
        for c in self.cells:
            out[self.mu_values.index(c.mu), self.d_values.index(c.d)] = c.classification
        return out


def sweep(spec: GridSpec, template: EnsembleConfig, workers: int = 1) -> StabilityGrid:
    """Classify every ``(mu, d)`` cell; a cell that raises is marked ``Failed``.

    Cells are ordered mu-major, then d.
    """
    pairs = [(mu, d) for mu in spec.mu_values for d in spec.d_values]

    def one(pair):
        mu, d = pair
        try:
            return classify_cell(template, mu, d, spec.n_realizations, spec.n_iters, spec.master_seed)
        except Exception as exc:  # noqa: BLE001 - a failed cell must not abort the sweep
            return CellResult(mu, d, math.nan, FAILED, math.nan, f"{type(exc).__name__}: {exc}")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(one, pairs))
    else:
        cells = [one(p) for p in pairs]
    return StabilityGrid(tuple(spec.mu_values), tuple(spec.d_values), cells)
