"""NNLMF / NNLMS weight updates.

Both algorithms scale the update of tap ``i`` by the current weight ``w_i``,
so a tap that reaches exactly zero stays there.  No projection onto the
nonnegative orthant is performed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .signals import SeedLike, SystemModel, generate_input_sequence, generate_noise_sequence, stream_seeds

NNLMF = "nnlmf"
NNLMS = "nnlms"
ALGORITHMS = (NNLMF, NNLMS)

DEFAULT_DIVERGENCE_THRESHOLD = 1e6

_ERROR_POWER = {NNLMF: 3, NNLMS: 1}


class FilterState:
    """Mutable weight vector of one adaptive filter."""

    def __init__(self, weights, step_size: float, algorithm: str = NNLMF):
        w = np.array(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty vector")
        if algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
        if not (math.isfinite(step_size) and step_size >= 0):
            raise ValueError("step_size must be finite and nonnegative")
        self.weights = w
        self.step_size = float(step_size)
        self.algorithm = algorithm

    @property
    def order(self) -> int:
        return self.weights.size

    @property
    def error_power(self) -> int:
        return _ERROR_POWER[self.algorithm]

    def copy(self) -> "FilterState":
        return FilterState(self.weights.copy(), self.step_size, self.algorithm)


@dataclass
class StepRecord:
    error: float
    weights: np.ndarray
    weight_error: np.ndarray | None = None


def _step(state: FilterState, u_vec, d: float, power: int, w_star=None) -> StepRecord:
    u = np.asarray(u_vec, dtype=float)
    if u.shape != state.weights.shape:
        raise ValueError(f"regressor length {u.size} does not match filter length {state.order}")
    if not (np.all(np.isfinite(u)) and math.isfinite(d)):
        raise ValueError("non-finite regressor or desired response")
    w = state.weights
    e = float(d - w @ u)
    with np.errstate(over="ignore", invalid="ignore"):
        # overflow yields inf weights, as in the batch kernel
        state.weights = w + state.step_size * np.float64(e) ** power * u * w
    w_tilde = None if w_star is None else state.weights - np.asarray(w_star, dtype=float)
    return StepRecord(e, state.weights.copy(), w_tilde)


def nnlmf_step(state: FilterState, u_vec, d: float, w_star=None) -> StepRecord:
    """One NNLMF iteration, ``w_i += mu * u(n-i) * w_i * e^3``.

    The a priori error is computed once from the pre-update weights and used
    for every tap.
    """
    if state.algorithm != NNLMF:
        raise ValueError("nnlmf_step requires an NNLMF filter state")
    return _step(state, u_vec, d, 3, w_star)


def nnlms_step(state: FilterState, u_vec, d: float, w_star=None) -> StepRecord:
    if state.algorithm != NNLMS:
        raise ValueError("nnlms_step requires an NNLMS filter state")
    return _step(state, u_vec, d, 1, w_star)


@numba.njit(cache=True, nogil=True)
def _adapt(u, z, w, w_star, mu, power, threshold, weights_out, errors_out, emse_out):
    """Run the filter over a whole stream, updating ``w`` in place.

    ``u`` holds ``M-1`` warm-up samples followed by one sample per
    iteration.  Row ``n`` of ``weights_out`` receives ``w(n)``,
    ``errors_out[n]`` receives ``e(n)`` and ``emse_out[n]`` receives
    ``(e(n) - z(n))**2``; zero-length buffers skip recording.  Returns
    ``(iterations completed, diverged)``.
    """
    M = w.shape[0]
    n_iters = z.shape[0]
    record_w = weights_out.shape[0] > 0
    record_e = errors_out.shape[0] > 0
    record_x = emse_out.shape[0] > 0
    for n in range(n_iters):
        y = 0.0
        y_star = 0.0
        top = n + M - 1
        for i in range(M):
            x = u[top - i]
            y += w[i] * x
            y_star += w_star[i] * x
        e = (y_star + z[n]) - y
        if record_w:
            for i in range(M):
                weights_out[n, i] = w[i]
        if record_e:
            errors_out[n] = e
        if record_x:
            a = e - z[n]
            emse_out[n] = a * a
        if not (abs(e) <= threshold):
            return n, True
        g = mu * e
        if power == 3:
            g = g * e * e
        finite = True
        for i in range(M):
            w[i] += g * u[top - i] * w[i]
            if not math.isfinite(w[i]):
                finite = False
        if not finite:
            return n + 1, True
    return n_iters, False


@dataclass
class FilterRun:
    """Trajectory of one realization.

    ``weights[n]`` is ``w(n)``, the weight vector used to form ``errors[n]``.
    Entries past a divergence are NaN.
    """

    weights: np.ndarray
    errors: np.ndarray
    emse: np.ndarray
    noise: np.ndarray
    w_star: np.ndarray
    final_weights: np.ndarray
    diverged: bool
    n_completed: int

    @property
    def weight_errors(self) -> np.ndarray:
        return self.weights - self.w_star


def draw_streams(system: SystemModel, n_iters: int, seed: SeedLike) -> tuple[np.ndarray, np.ndarray]:
    """Input stream (with ``M-1`` warm-up samples) and noise for one realization."""
    in_seed, noise_seed = stream_seeds(seed)
    u = generate_input_sequence(system.input, n_iters + system.order - 1, in_seed)
    z = generate_noise_sequence(system.noise, n_iters, noise_seed)
    return u, z


def simulate(system: SystemModel, w0, mu: float, power: int, n_iters: int, seed: SeedLike,
             threshold: float = DEFAULT_DIVERGENCE_THRESHOLD, record: bool = True) -> FilterRun:
    """Low-level driver shared by :func:`run_filter` and the ensemble code.

    With ``record=False`` only the divergence outcome and final weights are
    kept (the trajectory arrays are empty).
    """
    w = np.array(w0, dtype=float)
    if w.shape != system.w_star.shape:
        raise ValueError("initial weights and w_star differ in length")
    if not (math.isfinite(mu) and mu >= 0):
        raise ValueError("step size must be finite and nonnegative")
    u, z = draw_streams(system, n_iters, seed)
    m = n_iters if record else 0
    weights = np.full((m, w.size), np.nan)
    errors = np.full(m, np.nan)
    emse = np.full(m, np.nan)
    done, diverged = _adapt(u, z, w, system.w_star, float(mu), int(power), float(threshold),
                            weights, errors, emse)
    return FilterRun(weights, errors, emse, z, system.w_star, w, bool(diverged), int(done))


def run_filter(system: SystemModel, state: FilterState, n_iters: int, seed: SeedLike,
               threshold: float = DEFAULT_DIVERGENCE_THRESHOLD) -> FilterRun:
    """Drive ``state`` with ``n_iters`` samples generated from ``system``.

    The run stops early when a weight becomes non-finite or ``|e(n)|``
    exceeds ``threshold``.  ``state.weights`` is left at the final weights.
    """
    if isinstance(n_iters, bool) or not isinstance(n_iters, (int, np.integer)) or n_iters < 1:
        raise ValueError("n_iters must be a positive integer")
    if state.order != system.order:
        raise ValueError("filter length does not match the system")
    run = simulate(system, state.weights, state.step_size, state.error_power, int(n_iters), seed, threshold)
    state.weights = run.final_weights.copy()
    return run
