"""Generational genetic algorithm over fixed-length bit strings.

Linear (Baker) ranking, stochastic universal sampling, uniform crossover,
bit-flip mutation and elitism. All randomness is drawn from one
``numpy.random.Generator`` on the coordinating thread, so a seed fixes the
whole run; fitness evaluation is a pure batch function and may be
parallelised freely.

A fitness function maps a ``(n, length)`` uint8 bit matrix to ``n``
objective values (ms^2, lower is better).
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import CheckpointError, ParameterError, ShapeError

Fitness = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 200
    crossover_rate: float = 0.6
    mutation_rate: float = 0.01
    selective_pressure: float = 1.5
    elite_count: int = 8
    max_generations: int = 500
    mse_target: float = 0.25
    seed: int = 0
    miss_penalty: float = 100.0

    def __post_init__(self):
        if self.population_size < 1:
            raise ParameterError("population_size must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ParameterError(f"{name} must lie in [0, 1]")
        if not 1.0 <= self.selective_pressure <= 2.0:
            raise ParameterError("selective_pressure must lie in [1, 2]")
        if not 0 <= self.elite_count <= self.population_size:
            raise ParameterError("elite_count must lie in 0..population_size")
        if self.max_generations < 0:
            raise ParameterError("max_generations must be >= 0")
        if self.miss_penalty < 0:
            raise ParameterError("miss_penalty must be >= 0")


# --------------------------------------------------------------------------
# objective


class ObjectiveMode(str, enum.Enum):
    LMS = "lms"
    MSE = "mse"


def pattern_errors(actual_first, desired, miss_penalty: float) -> np.ndarray:
    """Squared timing error per pattern; NaN marks "no spike" on either side.

    ``actual_first`` may carry leading batch dimensions; the last axis runs
    over patterns and must match ``desired``.
    """
    a = np.asarray(actual_first, dtype=np.float64)
    d = np.asarray(desired, dtype=np.float64)
    a_has = ~np.isnan(a)
    d_has = ~np.isnan(d)
    both = a_has & d_has
    sq = np.where(both, (np.where(both, a, 0.0) - np.where(d_has, d, 0.0)) ** 2, 0.0)
    return np.where(both, sq, np.where(a_has == d_has, 0.0, miss_penalty))


def _first_or_nan(train) -> float:
    if train is None:
        return math.nan
    if np.isscalar(train):
        return float(train)
    return float(train[0]) if len(train) else math.nan


def objective(actual, desired, mode: ObjectiveMode | str = ObjectiveMode.MSE,
              miss_penalty: float = 100.0) -> float:
    """LMS (half the sum) or MSE (mean) of per-pattern errors.

    ``actual`` holds one output spike train per pattern (only the first spike
    counts); ``desired`` holds a time in ms or ``None`` per pattern.
    """
    if len(actual) == 0 or len(actual) != len(desired):
        raise ParameterError("need one actual train per pattern and at least one pattern")
    a = [_first_or_nan(tr) for tr in actual]
    d = [math.nan if t is None else float(t) for t in desired]
    e = pattern_errors(a, d, miss_penalty)
    if ObjectiveMode(mode) is ObjectiveMode.LMS:
        return 0.5 * float(e.sum())
    return float(e.mean())


# --------------------------------------------------------------------------
# operators


def rank_probabilities(n: int, eta_max: float) -> np.ndarray:
    """Linear ranking probabilities, index 0 = best."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    if not 1.0 <= eta_max <= 2.0:
        raise ParameterError(f"eta_max must lie in [1, 2], got {eta_max}")
    if n == 1:
        return np.ones(1)
    eta_min = 2.0 - eta_max
    i = np.arange(n)
    return (eta_max - (eta_max - eta_min) * i / (n - 1)) / n


def sus_select(probs, k: int, rng: np.random.Generator) -> np.ndarray:
    """Stochastic universal sampling of ``k`` indices (in marker order)."""
    p = np.asarray(probs, dtype=np.float64)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ParameterError("probs must be a non-empty 1-D array of non-negative numbers")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ParameterError(f"probs must sum to 1, got {p.sum()!r}")
    if k < 1:
        raise ParameterError("k must be >= 1")
    cum = np.cumsum(p)
    markers = rng.uniform(0.0, 1.0 / k) + np.arange(k) / k
    idx = np.searchsorted(cum, markers, side="right")
    # float slack at the top end: fall back to the last index with mass
    return np.minimum(idx, np.flatnonzero(p > 0)[-1])


def _crossover_rows(a: np.ndarray, b: np.ndarray, rate: float, rng: np.random.Generator):
    do = rng.random(a.shape[0]) < rate
    mask = rng.integers(0, 2, size=a.shape, dtype=np.uint8).astype(bool) & do[:, None]
    return np.where(mask, b, a), np.where(mask, a, b)


def uniform_crossover(a, b, crossover_rate: float, rng: np.random.Generator):
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.shape != b.shape or a.ndim != 1:
        raise ShapeError("parents must be 1-D and of equal length")
    c, d = _crossover_rows(a[None], b[None], crossover_rate, rng)
    return c[0], d[0]


def bitflip_mutate(c, p_m: float, rng: np.random.Generator) -> np.ndarray:
    """Flip each bit independently with probability ``p_m``; any array shape."""
    if not 0.0 <= p_m <= 1.0:
        raise ParameterError("p_m must lie in [0, 1]")
    c = np.asarray(c, dtype=np.uint8)
    return c ^ (rng.random(c.shape) < p_m).astype(np.uint8)


# --------------------------------------------------------------------------
# population state


@dataclass
class Individual:
    chromosome: np.ndarray
    objective: float = math.nan
    cached: bool = False


@dataclass
class GaRunState:
    """Population sorted best-first, plus the generator and per-generation log.

    ``history`` rows are ``(generation, best_objective, mean_objective)``.
    """

    generation: int
    bits: np.ndarray
    objectives: np.ndarray
    rng: np.random.Generator
    history: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def best(self) -> Individual:
        return Individual(self.bits[0].copy(), float(self.objectives[0]), True)

    @property
    def population(self) -> list[Individual]:
        return [Individual(b.copy(), float(o), True) for b, o in zip(self.bits, self.objectives)]

    def _log(self):
        self.history.append((self.generation, float(self.objectives[0]),
                             float(self.objectives.mean())))


def _sorted(bits, objectives):
    order = np.argsort(objectives, kind="stable")
    return bits[order], objectives[order]


def _evaluate(fitness: Fitness, bits: np.ndarray) -> np.ndarray:
    obj = np.asarray(fitness(bits), dtype=np.float64)
    if obj.shape != (bits.shape[0],):
        raise ShapeError(f"fitness returned shape {obj.shape}, expected ({bits.shape[0]},)")
    return obj


def initial_state(cfg: GaConfig, length: int, fitness: Fitness) -> GaRunState:
    rng = np.random.default_rng(cfg.seed)
    bits = rng.integers(0, 2, size=(cfg.population_size, length), dtype=np.uint8)
    bits, obj = _sorted(bits, _evaluate(fitness, bits))
    state = GaRunState(0, bits, obj, rng)
    state._log()
    return state


def evolve_generation(state: GaRunState, cfg: GaConfig, fitness: Fitness) -> GaRunState:
    """Produce the next generation; elites pass through untouched."""
    n, length = state.bits.shape
    rng = state.rng
    n_elite = min(cfg.elite_count, n)
    n_child = n - n_elite
    elite_bits = state.bits[:n_elite]
    elite_obj = state.objectives[:n_elite]
    if n_child:
        picks = sus_select(rank_probabilities(n, cfg.selective_pressure), n_child, rng)
        picks = rng.permutation(picks)
        children = state.bits[picks].copy()
        n_pairs = n_child // 2
        a, b = children[0:2 * n_pairs:2], children[1:2 * n_pairs:2]
        children[0:2 * n_pairs:2], children[1:2 * n_pairs:2] = _crossover_rows(
            a, b, cfg.crossover_rate, rng)
        children = bitflip_mutate(children, cfg.mutation_rate, rng)
        child_obj = _evaluate(fitness, children)
        bits = np.vstack([elite_bits, children])
        obj = np.concatenate([elite_obj, child_obj])
    else:
        bits, obj = elite_bits.copy(), elite_obj.copy()
    bits, obj = _sorted(bits, obj)
    nxt = GaRunState(state.generation + 1, bits, obj, rng, list(state.history))
    nxt._log()
    return nxt


def stop_reason(state: GaRunState, cfg: GaConfig) -> str | None:
    if state.objectives[0] <= cfg.mse_target:
        return "mse_target"
    if state.generation >= cfg.max_generations:
        return "max_generations"
    return None


@dataclass
class GaResult:
    best: Individual
    history: list[tuple[int, float, float]]
    stop_reason: str
    state: GaRunState


def run_ga(cfg: GaConfig, length: int, fitness: Fitness, state: GaRunState | None = None,
           until_generation: int | None = None,
           on_generation: Callable[[GaRunState], None] | None = None) -> GaResult:
    """Evolve until the best objective reaches ``mse_target`` or the generation cap.

    ``state`` resumes a previous run. ``until_generation`` halts early with
    stop reason ``"halted"`` (the state can be checkpointed and resumed).
    ``on_generation`` is called after every generation, including 0.
    """
    if state is None:
        state = initial_state(cfg, length, fitness)
        if on_generation:
            on_generation(state)
    while True:
        reason = stop_reason(state, cfg)
        if reason is None and until_generation is not None and state.generation >= until_generation:
            reason = "halted"
        if reason:
            return GaResult(state.best, list(state.history), reason, state)
        state = evolve_generation(state, cfg, fitness)
        if on_generation:
            on_generation(state)


# --------------------------------------------------------------------------
# persistence

CHECKPOINT_MAGIC = "srmga-checkpoint"
CHECKPOINT_VERSION = 1


def config_hash(obj) -> str:
    """SHA-256 over a canonical JSON rendering of a config mapping/dataclass."""
    if hasattr(obj, "__dataclass_fields__"):
        obj = asdict(obj)
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def _canonical(payload) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def checkpoint_save(state: GaRunState, path, cfg_hash: str, extra: dict | None = None) -> None:
    """Write atomically; ``extra`` carries caller data (e.g. the run config)."""
    payload = {
        "generation": state.generation,
        "length": int(state.bits.shape[1]),
        "population": [np.packbits(row).tobytes().hex() for row in state.bits],
        "objectives": [float(o) for o in state.objectives],
        "rng_state": state.rng.bit_generator.state,
        "history": [list(h) for h in state.history],
        "extra": extra or {},
    }
    body = _canonical(payload)
    doc = {
        "magic": CHECKPOINT_MAGIC,
        "version": CHECKPOINT_VERSION,
        "config_hash": cfg_hash,
        "checksum": hashlib.sha256(body.encode()).hexdigest(),
        "payload": payload,
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    os.replace(tmp, path)


def checkpoint_read(path) -> tuple[dict, str]:
    """Validated checkpoint payload and its config hash."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: corrupted checkpoint ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("magic") != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    payload = doc.get("payload")
    if hashlib.sha256(_canonical(payload).encode()).hexdigest() != doc.get("checksum"):
        raise CheckpointError(f"{path}: checksum mismatch, file is corrupted")
    return payload, doc["config_hash"]


def checkpoint_load(path, cfg_hash: str | None = None) -> GaRunState:
    payload, stored = checkpoint_read(path)
    if cfg_hash is not None and stored != cfg_hash:
        raise CheckpointError(f"{path}: config hash mismatch, refusing to resume")
    length = payload["length"]
    bits = np.array([np.unpackbits(np.frombuffer(bytes.fromhex(h), dtype=np.uint8))[:length]
                     for h in payload["population"]], dtype=np.uint8)
    rng = np.random.default_rng()
    rng.bit_generator.state = payload["rng_state"]
    history = [(int(g), float(b), float(m)) for g, b, m in payload["history"]]
    return GaRunState(int(payload["generation"]), bits,
                      np.array(payload["objectives"], dtype=np.float64), rng, history)


def write_history(history: Sequence[tuple[int, float, float]], stream) -> None:
    stream.write("generation\tbest_mse\tavg_mse\n")
    for g, best, avg in history:
        stream.write(f"{g}\t{best!r}\t{avg!r}\n")
