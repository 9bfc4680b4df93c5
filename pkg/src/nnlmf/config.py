"""Experiment configuration: JSON grammar, validation and round-tripping.

A configuration is a JSON object.  Every key is optional; missing keys take
the defaults shown by ``nnlmf <command> --print-config``::

    {
      "experiment": "emse",              # mean_weights | emse | stability_map | moments
      "system": {
        "w_star": "paper",               # or a list of floats
        "input": {"kind": "white", "variance": 1.0},
                 # or {"kind": "ar1", "ar_pole": 0.5, "innovation_variance": 0.75}
        "noise": {"kind": "uniform", "scale": 5.0}   # uniform | binary | gaussian
      },
      "algorithm": "nnlmf",              # nnlmf | nnlms
      "mu": 2e-05,
      "psi0": {"source": "paper_default"},
              # {"source": "explicit", "values": [...]} | {"source": "uniform", "seed": 7}
      "n_iters": 200000,
      "n_realizations": 200,
      "master_seed": 0,
      "divergence_threshold": 1000000.0,
      "mean_trace": "rank_one",          # rank_one | full
      "compare": {"burn_in": 1000, "tail_window": 10000},
      "stability": {"mu_values": [...], "d_values": [...],
                    "n_realizations": 50, "n_iters": 100000},
      "output": {"path": "results", "format": "csv", "subsample": 100}
    }

Unknown keys are rejected.  Comments are not part of the grammar.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .filters import ALGORITHMS, DEFAULT_DIVERGENCE_THRESHOLD, NNLMF
from .signals import (
    INPUT_KINDS,
    NOISE_KINDS,
    PAPER_PSI0,
    PAPER_W_STAR,
    WHITE,
    InputModel,
    NoiseModel,
    SystemModel,
)
from .stability import (
    DESK_ITERATIONS,
    DESK_REALIZATIONS,
    PAPER_D_VALUES,
    PAPER_ITERATIONS,
    PAPER_MU_VALUES,
    PAPER_REALIZATIONS,
)
from .theory import FULL, RANK_ONE

MEAN_WEIGHTS = "mean_weights"
EMSE = "emse"
STABILITY_MAP = "stability_map"
MOMENTS = "moments"
EXPERIMENTS = (MEAN_WEIGHTS, EMSE, STABILITY_MAP, MOMENTS)

PSI0_PAPER = "paper_default"
PSI0_EXPLICIT = "explicit"
PSI0_UNIFORM = "uniform"


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key path."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def _keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(where or "<root>", "expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}.{unknown[0]}" if where else unknown[0], "unknown key")


def _number(obj, key, where, default, *, positive=False, nonneg=False):
    v = obj.get(key, default)
    name = f"{where}.{key}" if where else key
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(name, "expected a finite number")
    if positive and not v > 0:
        raise ConfigError(name, "must be positive")
    if nonneg and v < 0:
        raise ConfigError(name, "must be nonnegative")
    return float(v)


def _int(obj, key, where, default, minimum=1):
    v = obj.get(key, default)
    name = f"{where}.{key}" if where else key
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(name, "expected an integer")
    if v < minimum:
        raise ConfigError(name, f"must be >= {minimum}")
    return v


def _choice(obj, key, where, default, choices):
    v = obj.get(key, default)
    if v not in choices:
        raise ConfigError(f"{where}.{key}" if where else key, f"must be one of {list(choices)}")
    return v


def _floats(v, name, *, nonempty=True):
    if not isinstance(v, (list, tuple)) or (nonempty and not v):
        raise ConfigError(name, "expected a nonempty list of numbers")
    out = []
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ConfigError(name, "expected a list of finite numbers")
        out.append(float(x))
    return tuple(out)


@dataclass(frozen=True)
class Psi0Spec:
    source: str = PSI0_PAPER
    values: tuple | None = None
    seed: int | None = None

    def resolve(self, M: int) -> np.ndarray:
        if self.source == PSI0_PAPER:
            if M != len(PAPER_PSI0):
                raise ConfigError("psi0.source", f"paper_default needs M={len(PAPER_PSI0)}, got M={M}")
            return np.array(PAPER_PSI0)
        if self.source == PSI0_EXPLICIT:
            if len(self.values) != M:
                raise ConfigError("psi0.values", f"expected {M} values, got {len(self.values)}")
            return np.array(self.values)
        return np.random.default_rng(self.seed).uniform(size=M)

    def to_dict(self) -> dict:
        if self.source == PSI0_EXPLICIT:
            return {"source": self.source, "values": list(self.values)}
        if self.source == PSI0_UNIFORM:
            return {"source": self.source, "seed": self.seed}
        return {"source": self.source}


@dataclass(frozen=True)
class StabilitySpec:
    mu_values: tuple = PAPER_MU_VALUES
    d_values: tuple = PAPER_D_VALUES
    n_realizations: int = DESK_REALIZATIONS
    n_iters: int = DESK_ITERATIONS


@dataclass(frozen=True)
class OutputSpec:
    path: str = "results"
    format: str = "csv"
    subsample: int = 100


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = EMSE
    w_star: tuple = PAPER_W_STAR
    input: InputModel = field(default_factory=InputModel)
    noise: NoiseModel = field(default_factory=NoiseModel)
    algorithm: str = NNLMF
    mu: float = 2e-5
    psi0: Psi0Spec = field(default_factory=Psi0Spec)
    n_iters: int = 200_000
    n_realizations: int = 200
    master_seed: int = 0
    divergence_threshold: float = DEFAULT_DIVERGENCE_THRESHOLD
    mean_trace: str = RANK_ONE
    burn_in: int = 1000
    tail_window: int = 10_000
    stability: StabilitySpec = field(default_factory=StabilitySpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def system(self) -> SystemModel:
        return SystemModel(np.array(self.w_star), self.input, self.noise)

    @property
    def initial_weights(self) -> np.ndarray:
        return self.psi0.resolve(len(self.w_star))

    def to_dict(self) -> dict:
        w_star = "paper" if self.w_star == PAPER_W_STAR else list(self.w_star)
        return {
            "experiment": self.experiment,
            "system": {"w_star": w_star, "input": self.input.to_dict(), "noise": self.noise.to_dict()},
            "algorithm": self.algorithm,
            "mu": self.mu,
            "psi0": self.psi0.to_dict(),
            "n_iters": self.n_iters,
            "n_realizations": self.n_realizations,
            "master_seed": self.master_seed,
            "divergence_threshold": self.divergence_threshold,
            "mean_trace": self.mean_trace,
            "compare": {"burn_in": self.burn_in, "tail_window": self.tail_window},
            "stability": {
                "mu_values": list(self.stability.mu_values),
                "d_values": list(self.stability.d_values),
                "n_realizations": self.stability.n_realizations,
                "n_iters": self.stability.n_iters,
            },
            "output": asdict(self.output),
        }

    def paper_scale(self) -> "ExperimentConfig":
        """Full-size protocol: 200 realizations per curve, 1000 x 5e5 per stability cell."""
        return replace(
            self,
            n_realizations=max(self.n_realizations, 200),
            stability=replace(self.stability, n_realizations=PAPER_REALIZATIONS, n_iters=PAPER_ITERATIONS),
        )


def _parse_input(obj) -> InputModel:
    _keys(obj, ("kind", "variance", "ar_pole", "innovation_variance"), "system.input")
    kind = _choice(obj, "kind", "system.input", WHITE, INPUT_KINDS)
    where = "system.input"
    if kind == WHITE:
        if "ar_pole" in obj or "innovation_variance" in obj:
            raise ConfigError(where, "white input takes only 'variance'")
        return InputModel.white(_number(obj, "variance", where, 1.0, positive=True))
    if "variance" in obj:
        raise ConfigError(f"{where}.variance", "ar1 variance follows from ar_pole and innovation_variance")
    pole = _number(obj, "ar_pole", where, 0.5)
    if not -1 < pole < 1:
        raise ConfigError(f"{where}.ar_pole", "must lie in (-1, 1)")
    return InputModel.ar1(pole, _number(obj, "innovation_variance", where, 0.75, positive=True))


def _parse_noise(obj) -> NoiseModel:
    where = "system.noise"
    _keys(obj, ("kind", "scale"), where)
    kind = _choice(obj, "kind", where, "uniform", NOISE_KINDS)
    scale = _number(obj, "scale", where, {"uniform": 5.0, "binary": 2.0, "gaussian": 1.0}[kind])
    try:
        return NoiseModel(kind, scale)
    except ValueError as exc:
        raise ConfigError(f"{where}.scale", str(exc)) from None


def config_from_dict(obj: dict) -> ExperimentConfig:
    _keys(obj, ("experiment", "system", "algorithm", "mu", "psi0", "n_iters", "n_realizations",
                "master_seed", "divergence_threshold", "mean_trace", "compare", "stability", "output"), "")
    experiment = _choice(obj, "experiment", "", EMSE, EXPERIMENTS)

    system = obj.get("system", {})
    _keys(system, ("w_star", "input", "noise"), "system")
    w_raw = system.get("w_star", "paper")
    w_star = PAPER_W_STAR if w_raw == "paper" else _floats(w_raw, "system.w_star")
    inp = _parse_input(system.get("input", {}))
    noise = _parse_noise(system.get("noise", {}))

    algorithm = _choice(obj, "algorithm", "", NNLMF, ALGORITHMS)
    mu = _number(obj, "mu", "", 2e-5, nonneg=True)

    p = obj.get("psi0", {})
    _keys(p, ("source", "values", "seed"), "psi0")
    source = _choice(p, "source", "psi0", PSI0_PAPER, (PSI0_PAPER, PSI0_EXPLICIT, PSI0_UNIFORM))
    if source == PSI0_EXPLICIT:
        if "seed" in p:
            raise ConfigError("psi0.seed", "not used with explicit values")
        psi0 = Psi0Spec(source, values=_floats(p.get("values"), "psi0.values"))
    elif source == PSI0_UNIFORM:
        if "values" in p:
            raise ConfigError("psi0.values", "not used with a uniform draw")
        psi0 = Psi0Spec(source, seed=_int(p, "seed", "psi0", 0, minimum=0))
    else:
        if set(p) - {"source"}:
            raise ConfigError("psi0", "paper_default takes no other keys")
        psi0 = Psi0Spec()

    compare = obj.get("compare", {})
    _keys(compare, ("burn_in", "tail_window"), "compare")
    st = obj.get("stability", {})
    _keys(st, ("mu_values", "d_values", "n_realizations", "n_iters"), "stability")
    stability = StabilitySpec(
        mu_values=_floats(st.get("mu_values", list(PAPER_MU_VALUES)), "stability.mu_values"),
        d_values=_floats(st.get("d_values", list(PAPER_D_VALUES)), "stability.d_values"),
        n_realizations=_int(st, "n_realizations", "stability", DESK_REALIZATIONS),
        n_iters=_int(st, "n_iters", "stability", DESK_ITERATIONS),
    )
    if any(m < 0 for m in stability.mu_values):
        raise ConfigError("stability.mu_values", "step sizes must be nonnegative")
    out = obj.get("output", {})
    _keys(out, ("path", "format", "subsample"), "output")
    path = out.get("path", "results")
    if not isinstance(path, str) or not path:
        raise ConfigError("output.path", "expected a nonempty string")
    output = OutputSpec(path, _choice(out, "format", "output", "csv", ("csv", "json")),
                        _int(out, "subsample", "output", 100))

    cfg = ExperimentConfig(
        experiment=experiment,
        w_star=w_star,
        input=inp,
        noise=noise,
        algorithm=algorithm,
        mu=mu,
        psi0=psi0,
        n_iters=_int(obj, "n_iters", "", 200_000),
        n_realizations=_int(obj, "n_realizations", "", 200),
        master_seed=_int(obj, "master_seed", "", 0, minimum=0),
        divergence_threshold=_number(obj, "divergence_threshold", "", DEFAULT_DIVERGENCE_THRESHOLD,
                                     positive=True),
        mean_trace=_choice(obj, "mean_trace", "", RANK_ONE, (RANK_ONE, FULL)),
        burn_in=_int(compare, "burn_in", "compare", 1000, minimum=0),
        tail_window=_int(compare, "tail_window", "compare", 10_000),
        stability=stability,
        output=output,
    )
    if cfg.burn_in >= cfg.n_iters and experiment in (MEAN_WEIGHTS, EMSE):
        raise ConfigError("compare.burn_in", "must be smaller than n_iters")
    cfg.initial_weights  # validates psi0 against the filter length
    return cfg


def parse_config(text: str) -> ExperimentConfig:
    """Parse JSON text into a validated config.

    An emitted run manifest is also accepted; its ``config`` member is used.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<syntax>", f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if isinstance(obj, dict) and "config" in obj and "library_version" in obj:
        obj = obj["config"]
    return config_from_dict(obj)


def render_config(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2) + "\n"
