"""Input and noise processes for the nonnegative system-identification setup.

Seeding convention
------------------
Every generator accepts either an integer seed or a
:class:`numpy.random.SeedSequence`.  Monte Carlo realization ``r`` of an
ensemble with master seed ``s`` uses ``SeedSequence(s, spawn_key=(r,))``; the
input and noise streams of that realization are the children obtained by
appending ``0`` and ``1`` to the spawn key (see :func:`stream_seeds`).  The
bit generator is PCG64, so a realization's samples depend only on
``(s, r)`` and never on execution order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.signal import lfilter

SeedLike = Union[int, np.random.SeedSequence]

WHITE = "white"
AR1 = "ar1"
INPUT_KINDS = (WHITE, AR1)

UNIFORM = "uniform"
BINARY = "binary"
GAUSSIAN = "gaussian"
NOISE_KINDS = (UNIFORM, BINARY, GAUSSIAN)

# Impulse response of the unknown system.  The published vector reads
# "0.2.0.1"; it is taken as the two entries 0.2 and 0.1 (length 10).
PAPER_W_STAR = (0.8, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, -0.1, -0.3, -0.6)

# Shared initial weights psi_0: np.random.default_rng(PSI0_SEED).uniform(size=10)
PSI0_SEED = 2016
PAPER_PSI0 = (
    0.9671888500944387,
    0.3396758804244413,
    0.255665585540541,
    0.40343507850405846,
    0.6990352544711408,
    0.9481748318999045,
    0.9155907760776116,
    0.5064567615195221,
    0.35604935096513757,
    0.30103018078480603,
)


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an int or SeedSequence, got {type(seed).__name__}")
    if seed < 0:
        raise ValueError("seed must be nonnegative")
    return np.random.SeedSequence(int(seed))


def _child(seed: SeedLike, index: int) -> np.random.SeedSequence:
    # Derived without SeedSequence.spawn(), which is stateful.
    ss = as_seed_sequence(seed)
    return np.random.SeedSequence(ss.entropy, spawn_key=tuple(ss.spawn_key) + (index,))


def realization_seed(master_seed: SeedLike, realization: int) -> np.random.SeedSequence:
    """Seed of realization ``realization`` within an ensemble."""
    return _child(master_seed, realization)


def stream_seeds(seed: SeedLike) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """(input seed, noise seed) for a single realization."""
    return _child(seed, 0), _child(seed, 1)


def _rng(seed: SeedLike) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(as_seed_sequence(seed)))


@dataclass(frozen=True)
class InputModel:
    """Stationary zero-mean Gaussian input ``u(n)``.

    ``kind="white"`` gives i.i.d. samples of variance ``variance``;
    ``kind="ar1"`` gives ``u(n) = ar_pole*u(n-1) + v(n)`` with Gaussian ``v``
    of variance ``innovation_variance``.
    """

    kind: str = WHITE
    variance: float = 1.0
    ar_pole: float = 0.5
    innovation_variance: float = 0.75

    def __post_init__(self):
        if self.kind not in INPUT_KINDS:
            raise ValueError(f"input kind must be one of {INPUT_KINDS}, got {self.kind!r}")
        if self.kind == WHITE:
            if not self.variance > 0:
                raise ValueError("input variance must be positive")
        else:
            if not -1.0 < self.ar_pole < 1.0:
                raise ValueError("ar_pole must lie in (-1, 1)")
            if not self.innovation_variance > 0:
                raise ValueError("innovation_variance must be positive")

    @classmethod
    def white(cls, variance: float = 1.0) -> "InputModel":
        return cls(kind=WHITE, variance=variance)

    @classmethod
    def ar1(cls, pole: float = 0.5, innovation_variance: float = 0.75) -> "InputModel":
        return cls(kind=AR1, ar_pole=pole, innovation_variance=innovation_variance)

    @property
    def process_variance(self) -> float:
        if self.kind == WHITE:
            return self.variance
        return self.innovation_variance / (1.0 - self.ar_pole**2)

    def autocovariance(self, lag: int) -> float:
        if self.kind == WHITE:
            return self.variance if lag == 0 else 0.0
        return self.process_variance * self.ar_pole ** abs(lag)

    def to_dict(self) -> dict:
        if self.kind == WHITE:
            return {"kind": WHITE, "variance": self.variance}
        return {"kind": AR1, "ar_pole": self.ar_pole, "innovation_variance": self.innovation_variance}


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean i.i.d. measurement noise with an even density.

    ``scale`` is the half-width ``a`` for ``uniform``, the magnitude ``c`` for
    ``binary`` and the standard deviation for ``gaussian``.  A Gaussian with
    ``scale=0`` is the degenerate noiseless case.
    """

    kind: str = UNIFORM
    scale: float = 5.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"noise kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if not math.isfinite(self.scale):
            raise ValueError("noise scale must be finite")
        if self.kind == GAUSSIAN:
            if self.scale < 0:
                raise ValueError("gaussian noise standard deviation must be >= 0")
        elif self.scale <= 0:
            raise ValueError(f"{self.kind} noise scale must be positive")

    @classmethod
    def uniform(cls, half_width: float = 5.0) -> "NoiseModel":
        return cls(UNIFORM, half_width)

    @classmethod
    def binary(cls, magnitude: float = 2.0) -> "NoiseModel":
        return cls(BINARY, magnitude)

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "NoiseModel":
        return cls(GAUSSIAN, sigma)

    @property
    def moments(self) -> tuple[float, float, float]:
        return noise_moments(self)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "scale": self.scale}


@dataclass(frozen=True)
class SystemModel:
    """``d(n) = w*^T u(n) + z(n)``."""

    w_star: np.ndarray
    input: InputModel = field(default_factory=InputModel)
    noise: NoiseModel = field(default_factory=NoiseModel)

    def __post_init__(self):
        w = np.asarray(self.w_star, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("w_star must be a nonempty vector")
        if not np.all(np.isfinite(w)):
            raise ValueError("w_star must be finite")
        object.__setattr__(self, "w_star", w)

    @property
    def order(self) -> int:
        return self.w_star.size

    @classmethod
    def paper(cls, input: InputModel | None = None, noise: NoiseModel | None = None) -> "SystemModel":
        return cls(np.array(PAPER_W_STAR), input or InputModel(), noise or NoiseModel())


def _check_count(n: int, name: str = "n_samples") -> int:
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise TypeError(f"{name} must be an integer")
    if n < 1:
        raise ValueError(f"{name} must be >= 1, got {n}")
    return int(n)


def generate_input_sequence(model: InputModel, n_samples: int, seed: SeedLike) -> np.ndarray:
    """Draw ``n_samples`` consecutive input samples.

    The AR(1) recursion starts from a pre-history sample drawn from the
    stationary law, so the output is stationary from its first sample.
    """
    n = _check_count(n_samples)
    rng = _rng(seed)
    if model.kind == WHITE:
        return math.sqrt(model.variance) * rng.standard_normal(n)
    a = model.ar_pole
    u_prev = math.sqrt(model.process_variance) * rng.standard_normal()
    v = math.sqrt(model.innovation_variance) * rng.standard_normal(n)
    out, _ = lfilter([1.0], [1.0, -a], v, zi=[a * u_prev])
    return out


def generate_noise_sequence(model: NoiseModel, n_samples: int, seed: SeedLike) -> np.ndarray:
    n = _check_count(n_samples)
    rng = _rng(seed)
    if model.kind == UNIFORM:
        return rng.uniform(-model.scale, model.scale, n)
    if model.kind == BINARY:
        return model.scale * (2.0 * rng.integers(0, 2, n) - 1.0)
    if model.scale == 0.0:
        return np.zeros(n)
    return model.scale * rng.standard_normal(n)


def noise_moments(model: NoiseModel) -> tuple[float, float, float]:
    """Closed-form ``(E{z^2}, E{z^4}, E{z^6})``."""
    s = model.scale
    if model.kind == GAUSSIAN:
        return s**2, 3.0 * s**4, 15.0 * s**6
    if model.kind == UNIFORM:
        return s**2 / 3.0, s**4 / 5.0, s**6 / 7.0
    return s**2, s**4, s**6


def snr_db(model: NoiseModel, signal_power: float = 1.0) -> float:
    """SNR in dB under the unit-signal-power convention ``10 log10(P/sigma_z^2)``."""
    var = noise_moments(model)[0]
    if var == 0.0:
        return math.inf
    return 10.0 * math.log10(signal_power / var)


def correlation_matrix(model: InputModel, M: int) -> np.ndarray:
    """Exact ``R = E{u(n) u(n)^T}`` of the length-``M`` regressor."""
    M = _check_count(M, "M")
    lags = np.abs(np.subtract.outer(np.arange(M), np.arange(M)))
    if model.kind == WHITE:
        return model.variance * np.eye(M)
    return model.process_variance * model.ar_pole**lags


def desired_response(system: SystemModel, u_vec, z: float) -> float:
    u = np.asarray(u_vec, dtype=float)
    if u.shape != system.w_star.shape:
        raise ValueError(f"regressor length {u.size} does not match filter length {system.order}")
    return float(system.w_star @ u + z)
