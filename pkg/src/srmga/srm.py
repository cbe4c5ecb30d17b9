"""Time-stepped SRM0 simulation of fully connected feed-forward networks.

Each connection carries exactly one synapse with a weight and an axonal delay.
A neuron's potential is the weighted sum of delayed postsynaptic kernels plus
a refractory term keyed to its most recent own spike::

    u_j(t) = rho(t - t_j_last) + sum_i sum_g w_ji * eps(t - t_i_g - d_ji)

A spike is emitted on any grid sample where ``u >= theta`` and ``u`` is rising
relative to the previous sample. The refractory term restarts at the spike
sample, whose trace value is the pre-spike potential; the rise test on the
following sample compares against the freshly reset potential
``psp - 4 * theta`` so that it measures the slope of the new branch rather
than the reset jump.
"""
from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from . import kernels
from .errors import ParameterError, ShapeError

if TYPE_CHECKING:
    from .genome import QuantScheme


class KernelMode(str, enum.Enum):
    """Shape of the postsynaptic kernel.

    ``NORMALIZED`` peaks at exactly 1 when ``t == tau``; ``PAPER_LITERAL`` is
    ``(t/tau) exp(-t/tau)`` which peaks at ``1/e``.
    """

    NORMALIZED = "normalized"
    PAPER_LITERAL = "paper-literal"


def _on_grid(t: float, dt: float, tol: float = 1e-6) -> bool:
    s = t / dt
    return abs(s - round(s)) < tol


@dataclass(frozen=True)
class SimParams:
    sim_time_ms: float = 50.0
    dt_ms: float = 1.0
    tau_ms: float = 3.0
    tau_r_ms: float = 20.0
    theta: float = 1.5
    max_spikes: int = 10
    kernel_mode: KernelMode = KernelMode.NORMALIZED

    def __post_init__(self):
        object.__setattr__(self, "kernel_mode", KernelMode(self.kernel_mode))
        if not self.dt_ms > 0:
            raise ParameterError(f"dt_ms must be > 0, got {self.dt_ms}")
        if not self.sim_time_ms > 0 or not _on_grid(self.sim_time_ms, self.dt_ms):
            raise ParameterError(
                f"sim_time_ms={self.sim_time_ms} must be a positive multiple of dt_ms={self.dt_ms}")
        if not self.tau_ms > 0:
            raise ParameterError(f"tau_ms must be > 0, got {self.tau_ms}")
        if not self.tau_r_ms > 0:
            raise ParameterError(f"tau_r_ms must be > 0, got {self.tau_r_ms}")
        if not self.theta > 0:
            raise ParameterError(f"theta must be > 0, got {self.theta}")
        if int(self.max_spikes) != self.max_spikes or self.max_spikes < 1:
            raise ParameterError(f"max_spikes must be an integer >= 1, got {self.max_spikes}")
        object.__setattr__(self, "max_spikes", int(self.max_spikes))

    @property
    def n_steps(self) -> int:
        """Number of dt steps in the horizon; the grid has n_steps + 1 samples."""
        return int(round(self.sim_time_ms / self.dt_ms))

    @property
    def normalized(self) -> bool:
        return self.kernel_mode is KernelMode.NORMALIZED

    def grid(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt_ms


def validate_topology(layer_sizes: Sequence[int]) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in layer_sizes)
    if len(sizes) < 2:
        raise ShapeError(f"topology needs at least 2 layers, got {list(sizes)}")
    if any(s < 1 for s in sizes) or any(int(s) != s for s in layer_sizes):
        raise ShapeError(f"every layer needs at least one neuron, got {list(layer_sizes)}")
    return sizes


def n_synapses(layer_sizes: Sequence[int]) -> int:
    return sum(a * b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))


def neuron_labels(layer_sizes: Sequence[int]) -> list[str]:
    """Stable neuron ids: ``L<layer>N<index>``, 0-based, layer 0 = inputs."""
    return [f"L{l}N{i}" for l, n in enumerate(layer_sizes) for i in range(n)]


@dataclass
class QuantizedNetwork:
    """Topology plus one (weight, delay) matrix pair per adjacent layer pair.

    ``weights[p]`` and ``delays[p]`` have shape ``(n_post, n_pre)`` for the
    layer pair ``p -> p + 1``.
    """

    topology: tuple[int, ...]
    weights: list[np.ndarray]
    delays: list[np.ndarray]
    scheme: "QuantScheme | None" = None

    def __post_init__(self):
        self.topology = validate_topology(self.topology)
        if len(self.weights) != len(self.topology) - 1 or len(self.delays) != len(self.weights):
            raise ShapeError("need one weight and one delay matrix per layer pair")
        self.weights = [np.asarray(w, dtype=np.float64) for w in self.weights]
        self.delays = [np.asarray(d, dtype=np.float64) for d in self.delays]
        for p, (w, d) in enumerate(zip(self.weights, self.delays)):
            shape = (self.topology[p + 1], self.topology[p])
            if w.shape != shape or d.shape != shape:
                raise ShapeError(f"layer pair {p}: expected {shape}, got {w.shape} / {d.shape}")

    @classmethod
    def from_flat(cls, topology, weights, delays, scheme=None) -> "QuantizedNetwork":
        topology = validate_topology(topology)
        weights = np.asarray(weights, dtype=np.float64)
        delays = np.asarray(delays, dtype=np.float64)
        if weights.shape != (n_synapses(topology),) or delays.shape != weights.shape:
            raise ShapeError(f"expected {n_synapses(topology)} synapses, got {weights.shape}")
        ws, ds, s0 = [], [], 0
        for a, b in zip(topology[:-1], topology[1:]):
            ws.append(weights[s0:s0 + a * b].reshape(b, a))
            ds.append(delays[s0:s0 + a * b].reshape(b, a))
            s0 += a * b
        return cls(topology, ws, ds, scheme)

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """Weights and delays in chromosome order (pair, post, pre)."""
        return (np.concatenate([w.ravel() for w in self.weights]),
                np.concatenate([d.ravel() for d in self.delays]))

    def __eq__(self, other):
        if not isinstance(other, QuantizedNetwork):
            return NotImplemented
        return (self.topology == other.topology and self.scheme == other.scheme
                and all(np.array_equal(a, b) for a, b in zip(self.weights, other.weights))
                and all(np.array_equal(a, b) for a, b in zip(self.delays, other.delays)))


@dataclass
class MembraneTrace:
    grid: np.ndarray
    u: np.ndarray
    spikes: np.ndarray = field(default_factory=lambda: np.zeros(0))


def epsilon_kernel(t_e, tau: float, mode: KernelMode | str = KernelMode.NORMALIZED):
    """Postsynaptic kernel; zero for ``t_e <= 0``. Accepts scalars or arrays."""
    if not tau > 0:
        raise ParameterError(f"tau must be > 0, got {tau}")
    mode = KernelMode(mode)
    t_e = np.asarray(t_e, dtype=np.float64)
    x = np.where(t_e > 0, t_e / tau, 0.0)
    out = x * np.exp((1.0 if mode is KernelMode.NORMALIZED else 0.0) - x)
    return float(out) if out.ndim == 0 else out


def rho_kernel(t_p, theta: float, tau_r: float):
    """Refractory kernel ``-4 theta exp(-t_p / tau_r)`` for ``t_p > 0``, else 0."""
    if not tau_r > 0:
        raise ParameterError(f"tau_r must be > 0, got {tau_r}")
    t_p = np.asarray(t_p, dtype=np.float64)
    out = np.where(t_p > 0, -4.0 * theta * np.exp(-np.where(t_p > 0, t_p, 0.0) / tau_r), 0.0)
    return float(out) if out.ndim == 0 else out


def simulate_neuron(arrivals, params: SimParams, backend: str | None = None) -> MembraneTrace:
    """Simulate a single neuron driven by ``(arrival_time_ms, weight)`` pairs.

    Arrival time is the presynaptic spike time plus the synaptic delay.
    """
    arrivals = list(arrivals)
    arr_t = np.array([a[0] for a in arrivals], dtype=np.float64)
    arr_w = np.array([a[1] for a in arrivals], dtype=np.float64)
    if not (np.all(np.isfinite(arr_t)) and np.all(np.isfinite(arr_w))):
        raise ParameterError("arrivals must be finite")
    u, spk = kernels.neuron_response(arr_t, arr_w, params.n_steps, params.dt_ms, params.tau_ms,
                                     params.tau_r_ms, params.theta, params.max_spikes,
                                     params.normalized, backend=backend)
    return MembraneTrace(params.grid(), u, spk * params.dt_ms)


def _check_inputs(net: QuantizedNetwork, inputs, params: SimParams) -> list[np.ndarray]:
    if len(inputs) != net.topology[0]:
        raise ShapeError(f"network has {net.topology[0]} inputs, got {len(inputs)} trains")
    trains = []
    for i, tr in enumerate(inputs):
        tr = np.asarray(tr, dtype=np.float64).ravel()
        if np.any(tr <= 0) or np.any(np.diff(tr) <= 0):
            raise ParameterError(f"input {i}: spike times must be > 0 and strictly increasing")
        if not all(_on_grid(t, params.dt_ms) for t in tr):
            raise ParameterError(f"input {i}: spike times must lie on the dt grid")
        trains.append(tr)
    return trains


@dataclass
class NetworkResult:
    """Spike trains of every neuron (inputs first) and optional traces."""

    topology: tuple[int, ...]
    trains: list[np.ndarray]
    traces: dict[int, MembraneTrace]

    @property
    def outputs(self) -> list[np.ndarray]:
        return self.trains[-self.topology[-1]:]


def simulate_network(net: QuantizedNetwork, inputs, params: SimParams, trace: bool = False,
                     backend: str | None = None) -> NetworkResult:
    """Run a network on one input pattern (one spike train per input neuron)."""
    trains = _check_inputs(net, inputs, params)
    w, d = net.flat()
    out, us = kernels.network_spikes(net.topology, w, d, trains, params.n_steps, params.dt_ms,
                                     params.tau_ms, params.tau_r_ms, params.theta,
                                     params.max_spikes, params.normalized, keep_trace=trace,
                                     backend=backend)
    grid = params.grid()
    traces = {i: MembraneTrace(grid, u, out[i]) for i, u in us.items()}
    return NetworkResult(net.topology, out, traces)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trace_table(result: NetworkResult, stream: io.TextIOBase) -> None:
    """Tab-separated trace table followed by a spike-event list.

    Columns: ``time_ms`` then ``u_<id>`` for each computing neuron in network
    order. After a blank line: a ``neuron<TAB>time_ms`` table listing every
    spike of every neuron (inputs included) in network order.
    """
    labels = neuron_labels(result.topology)
    ids = sorted(result.traces)
    if not ids:
        raise ParameterError("result carries no membrane traces")
    grid = result.traces[ids[0]].grid
    stream.write("\t".join(["time_ms"] + [f"u_{labels[i]}" for i in ids]) + "\n")
    for k, t in enumerate(grid):
        stream.write("\t".join([_fmt(t)] + [_fmt(result.traces[i].u[k]) for i in ids]) + "\n")
    stream.write("\nneuron\ttime_ms\n")
    for i, tr in enumerate(result.trains):
        for t in tr:
            stream.write(f"{labels[i]}\t{_fmt(t)}\n")


def first_spike(train) -> float:
    return float(train[0]) if len(train) else math.nan
