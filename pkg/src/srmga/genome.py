"""3-bit quantization of synaptic weights and delays, and chromosome layout.

Each synapse takes 6 bits: a 3-bit delay genotype followed by a 3-bit weight
genotype, both read most-significant bit first. Synapses are concatenated
layer pair by layer pair, postsynaptic-major within a pair.
"""
from __future__ import annotations

import enum
import io
from fractions import Fraction

import numpy as np

from .errors import DataFormatError, QuantizationError, ShapeError
from .srm import QuantizedNetwork, n_synapses, validate_topology

BITS_PER_FIELD = 3
BITS_PER_SYNAPSE = 2 * BITS_PER_FIELD
LEVELS = 1 << BITS_PER_FIELD

# MSB-first place values for one 3-bit field.
_PLACE = np.array([4, 2, 1], dtype=np.int64)


class QuantScheme(str, enum.Enum):
    DECIMAL = "decimal"
    INTEGER = "integer"

    @property
    def weight_divisor(self) -> int:
        # weight = (4 - level) / divisor
        return 2 if self is QuantScheme.DECIMAL else 1


DELAY_TABLE = np.arange(1, LEVELS + 1, dtype=np.float64)
WEIGHT_TABLES = {
    QuantScheme.DECIMAL: np.array([2, 1.5, 1, 0.5, 0, -0.5, -1, -1.5]),
    QuantScheme.INTEGER: np.array([4, 3, 2, 1, 0, -1, -2, -3], dtype=np.float64),
}


def _level(g) -> int:
    if isinstance(g, str):
        if len(g) != BITS_PER_FIELD or set(g) - {"0", "1"}:
            raise QuantizationError(f"genotype must be 3 binary digits, got {g!r}")
        return int(g, 2)
    if isinstance(g, (tuple, list, np.ndarray)):
        return _level("".join(str(int(b)) for b in g))
    g = int(g)
    if not 0 <= g < LEVELS:
        raise QuantizationError(f"genotype must be in 0..7, got {g}")
    return g


def decode_delay(g) -> float:
    """Delay in ms for a 3-bit genotype (``'101'``, ``(1, 0, 1)`` or ``5``)."""
    return float(DELAY_TABLE[_level(g)])


def decode_weight(g, scheme: QuantScheme | str) -> float:
    return float(WEIGHT_TABLES[QuantScheme(scheme)][_level(g)])


def _lookup(value: float, table: np.ndarray, what: str) -> int:
    hits = np.flatnonzero(table == value)
    if hits.size != 1:
        raise QuantizationError(f"{what} {value!r} is not a codomain value {table.tolist()}")
    return int(hits[0])


def encode_delay(d: float) -> int:
    return _lookup(d, DELAY_TABLE, "delay")


def encode_weight(w: float, scheme: QuantScheme | str) -> int:
    return _lookup(w, WEIGHT_TABLES[QuantScheme(scheme)], "weight")


def chromosome_length(topology) -> int:
    return BITS_PER_SYNAPSE * n_synapses(validate_topology(topology))


def synapse_of_bit(k: int, topology) -> tuple[int, int, int, str]:
    """Locate bit ``k``: (layer pair, post index, pre index, 'delay' | 'weight')."""
    topology = validate_topology(topology)
    if not 0 <= k < chromosome_length(topology):
        raise ShapeError(f"bit {k} outside chromosome")
    s, r = divmod(k, BITS_PER_SYNAPSE)
    field = "delay" if r < BITS_PER_FIELD else "weight"
    for p, (a, b) in enumerate(zip(topology[:-1], topology[1:])):
        if s < a * b:
            j, i = divmod(s, a)
            return p, j, i, field
        s -= a * b
    raise AssertionError("unreachable")


def decode_levels(bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Delay and weight levels for a chromosome or a (pop, length) bit matrix."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.shape[-1] % BITS_PER_SYNAPSE:
        raise ShapeError(f"bit length {bits.shape[-1]} is not a multiple of 6")
    groups = bits.reshape(bits.shape[:-1] + (-1, 2, BITS_PER_FIELD))
    levels = groups @ _PLACE
    return levels[..., 0], levels[..., 1]


def decode_population(bits: np.ndarray, scheme: QuantScheme | str) -> tuple[np.ndarray, np.ndarray]:
    """Flat (weights, delays) arrays, one row per chromosome."""
    d_lvl, w_lvl = decode_levels(bits)
    return WEIGHT_TABLES[QuantScheme(scheme)][w_lvl], DELAY_TABLE[d_lvl]


def decode_chromosome(bits, topology, scheme: QuantScheme | str) -> QuantizedNetwork:
    topology = validate_topology(topology)
    bits = np.asarray(bits)
    if bits.ndim != 1 or bits.size != chromosome_length(topology):
        raise ShapeError(
            f"chromosome has {bits.size} bits, topology {list(topology)} needs "
            f"{chromosome_length(topology)}")
    if np.any((bits != 0) & (bits != 1)):
        raise ShapeError("chromosome must contain only 0/1")
    w, d = decode_population(bits, scheme)
    return QuantizedNetwork.from_flat(topology, w, d, QuantScheme(scheme))


def encode_network(net: QuantizedNetwork, scheme: QuantScheme | str | None = None) -> np.ndarray:
    scheme = QuantScheme(scheme or net.scheme)
    w, d = net.flat()
    out = np.empty((w.size, 2, BITS_PER_FIELD), dtype=np.uint8)
    for s, (ws, ds) in enumerate(zip(w, d)):
        for f, lvl in enumerate((encode_delay(ds), encode_weight(ws, scheme))):
            out[s, f] = [(lvl >> 2) & 1, (lvl >> 1) & 1, lvl & 1]
    return out.ravel()


# --------------------------------------------------------------------------
# trained-network text file

NETWORK_FORMAT = "srmga-network 1"


def _fmt_weight(w: float) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


def _fmt_delay(d: float) -> str:
    return str(int(d)) if float(d).is_integer() else repr(float(d))


def write_network(net: QuantizedNetwork, stream: io.TextIOBase) -> None:
    """Key-value text; each layer pair is a matrix of ``weight, delay`` cells.

    Rows are postsynaptic neurons, columns presynaptic neurons, cells are
    separated by tabs.
    """
    if net.scheme is None:
        raise QuantizationError("network has no quantization scheme")
    scheme = QuantScheme(net.scheme)
    encode_network(net, scheme)  # reject values outside the codomain
    stream.write(f"format: {NETWORK_FORMAT}\n")
    stream.write(f"scheme: {scheme.value}\n")
    stream.write("topology: " + " ".join(map(str, net.topology)) + "\n")
    for p, (w, d) in enumerate(zip(net.weights, net.delays)):
        stream.write(f"\n[pair {p}] {net.topology[p]} -> {net.topology[p + 1]}\n")
        for j in range(w.shape[0]):
            cells = [f"{_fmt_weight(w[j, i])}, {_fmt_delay(d[j, i])}" for i in range(w.shape[1])]
            stream.write("\t".join(cells) + "\n")


def read_network(stream: io.TextIOBase) -> QuantizedNetwork:
    header: dict[str, str] = {}
    mats: list[list[list[tuple[float, float]]]] = []
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[pair"):
            mats.append([])
            continue
        if not mats:
            key, sep, value = line.partition(":")
            if not sep:
                raise DataFormatError(f"line {lineno}: expected 'key: value', got {line!r}")
            header[key.strip()] = value.strip()
            continue
        try:
            row = []
            for cell in line.split("\t"):
                w, d = cell.split(",")
                row.append((float(w), float(d)))
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: bad synapse row {line!r}") from exc
        mats[-1].append(row)
    if header.get("format") != NETWORK_FORMAT:
        raise DataFormatError(f"not a network file (format {header.get('format')!r})")
    try:
        scheme = QuantScheme(header["scheme"])
        topology = validate_topology([int(x) for x in header["topology"].split()])
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"bad network header: {exc}") from exc
    ws, ds = [], []
    for m in mats:
        arr = np.array(m, dtype=np.float64)
        if arr.ndim != 3:
            raise DataFormatError("ragged synapse matrix")
        ws.append(arr[..., 0])
        ds.append(arr[..., 1])
    net = QuantizedNetwork(topology, ws, ds, scheme)
    encode_network(net, scheme)
    return net


def export_c_source(net: QuantizedNetwork, name: str = "snn") -> str:
    """Static integer arrays for an embedded target.

    Layout: ``<name>_weight_level[s]`` and ``<name>_delay_ms[s]`` for synapse
    ``s`` in chromosome order (layer pair, then postsynaptic, then
    presynaptic). Weight = (WEIGHT_BASE - level) / WEIGHT_DIVISOR.
    """
    scheme = QuantScheme(net.scheme)
    w, d = net.flat()
    levels = [encode_weight(x, scheme) for x in w]
    delays = [int(x) for x in d]
    up = name.upper()
    base = Fraction(float(WEIGHT_TABLES[scheme][0])) * scheme.weight_divisor
    out = io.StringIO()
    out.write(f"/* Trained SRM0 network, scheme {scheme.value}. Generated file. */\n")
    out.write(f"#ifndef {up}_NETWORK_H\n#define {up}_NETWORK_H\n\n#include <stdint.h>\n\n")
    out.write(f"#define {up}_N_LAYERS {len(net.topology)}\n")
    out.write(f"#define {up}_N_SYNAPSES {len(levels)}\n")
    out.write(f"#define {up}_WEIGHT_BASE {int(base)}\n")
    out.write(f"#define {up}_WEIGHT_DIVISOR {scheme.weight_divisor}\n\n")
    out.write(f"static const uint16_t {name}_topology[{up}_N_LAYERS] = {{"
              + ", ".join(map(str, net.topology)) + "};\n")
    out.write(f"static const uint8_t {name}_weight_level[{up}_N_SYNAPSES] = {{"
              + ", ".join(map(str, levels)) + "};\n")
    out.write(f"static const uint8_t {name}_delay_ms[{up}_N_SYNAPSES] = {{"
              + ", ".join(map(str, delays)) + "};\n")
    out.write(f"\n#endif /* {up}_NETWORK_H */\n")
    return out.getvalue()
