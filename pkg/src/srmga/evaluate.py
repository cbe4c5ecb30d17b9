"""Batch fitness: decode chromosomes, simulate every pattern, score first output spikes."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import ShapeError
from .evolve import pattern_errors
from .genome import QuantScheme, chromosome_length, decode_population
from .srm import QuantizedNetwork, SimParams, validate_topology
from .tasks import SpikePattern


@dataclass
class TaskEvaluator:
    """Callable fitness for :func:`srmga.evolve.run_ga` (returns MSE per row)."""

    topology: tuple[int, ...]
    scheme: QuantScheme
    params: SimParams
    patterns: Sequence[SpikePattern]
    miss_penalty: float = 100.0
    backend: str | None = None

    def __post_init__(self):
        self.topology = validate_topology(self.topology)
        self.scheme = QuantScheme(self.scheme)
        if self.topology[-1] != 1:
            raise ShapeError("training expects a single output neuron")
        if not self.patterns:
            raise ShapeError("no training patterns")
        for p in self.patterns:
            if len(p.input_times) != self.topology[0]:
                raise ShapeError(
                    f"pattern has {len(p.input_times)} inputs, topology expects {self.topology[0]}")
        self._in_t, self._in_n = kernels.pack_inputs([p.trains() for p in self.patterns])
        self.desired = np.array([np.nan if p.desired is None else p.desired for p in self.patterns])

    @property
    def chromosome_length(self) -> int:
        return chromosome_length(self.topology)

    def first_spikes_flat(self, weights: np.ndarray, delays: np.ndarray) -> np.ndarray:
        out = kernels.batch_first_spikes(
            self.topology, np.atleast_2d(weights), np.atleast_2d(delays), self._in_t, self._in_n,
            self.params.n_steps, self.params.dt_ms, self.params.tau_ms, self.params.tau_r_ms,
            self.params.theta, self.params.max_spikes, self.params.normalized,
            backend=self.backend)
        return out[..., 0]

    def first_spikes(self, bits: np.ndarray) -> np.ndarray:
        """(n, patterns) first output spike times, NaN where silent."""
        w, d = decode_population(np.atleast_2d(bits), self.scheme)
        return self.first_spikes_flat(w, d)

    def __call__(self, bits: np.ndarray) -> np.ndarray:
        return pattern_errors(self.first_spikes(bits), self.desired, self.miss_penalty).mean(axis=-1)

    def network_first_spikes(self, net: QuantizedNetwork) -> np.ndarray:
        if net.topology != self.topology:
            raise ShapeError(f"network topology {list(net.topology)} != task {list(self.topology)}")
        w, d = net.flat()
        return self.first_spikes_flat(w[None], d[None])[0]

    def network_mse(self, net: QuantizedNetwork) -> float:
        a = self.network_first_spikes(net)
        return float(pattern_errors(a, self.desired, self.miss_penalty).mean())
