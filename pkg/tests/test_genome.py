import io
import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from srmga.errors import DataFormatError, QuantizationError, ShapeError
from srmga.genome import (QuantScheme, chromosome_length, decode_chromosome, decode_delay,
                          decode_weight, encode_network, export_c_source, read_network,
                          synapse_of_bit, write_network)
from srmga.srm import QuantizedNetwork

# genotype -> phenotype, reference encoding tables
DELAY_ROWS = [("000", 1), ("001", 2), ("010", 3), ("011", 4),
              ("100", 5), ("101", 6), ("110", 7), ("111", 8)]
DECIMAL_ROWS = [("000", 2), ("001", 1.5), ("010", 1), ("011", 0.5),
                ("100", 0), ("101", -0.5), ("110", -1), ("111", -1.5)]
INTEGER_ROWS = [("000", 4), ("001", 3), ("010", 2), ("011", 1),
                ("100", 0), ("101", -1), ("110", -2), ("111", -3)]


@pytest.mark.parametrize("g,ms", DELAY_ROWS)
def test_delay_table(g, ms):
    assert decode_delay(g) == ms
    assert decode_delay(int(g, 2)) == ms


@pytest.mark.parametrize("scheme,rows", [("decimal", DECIMAL_ROWS), ("integer", INTEGER_ROWS)])
def test_weight_tables(scheme, rows):
    for g, w in rows:
        assert decode_weight(g, scheme) == w
    assert len({decode_weight(g, scheme) for g, _ in rows}) == 8


def test_bad_genotype():
    with pytest.raises(QuantizationError):
        decode_delay("1010")
    with pytest.raises(QuantizationError):
        decode_delay(8)


@pytest.mark.parametrize("topology,bits", [((3, 1), 18), ((3, 5, 1), 120), ((33, 8, 1), 1632),
                                           ((3, 2, 1), 48)])
def test_chromosome_length(topology, bits):
    assert chromosome_length(topology) == bits


def test_all_zero_and_all_one():
    net = decode_chromosome(np.zeros(120, dtype=np.uint8), (3, 5, 1), "integer")
    w, d = net.flat()
    assert np.all(w == 4) and np.all(d == 1)
    net = decode_chromosome(np.ones(120, dtype=np.uint8), (3, 5, 1), "decimal")
    w, d = net.flat()
    assert np.all(w == -1.5) and np.all(d == 8)


def test_length_mismatch():
    with pytest.raises(ShapeError):
        decode_chromosome(np.zeros(119, dtype=np.uint8), (3, 5, 1), "integer")


def test_encode_single_synapse_example():
    net = QuantizedNetwork.from_flat((1, 1), [2], [7])
    assert encode_network(net, "integer").tolist() == [1, 1, 0, 0, 1, 0]


@pytest.mark.parametrize("scheme", list(QuantScheme))
def test_exhaustive_single_synapse_round_trip(scheme):
    for bits in itertools.product([0, 1], repeat=6):
        b = np.array(bits, dtype=np.uint8)
        net = decode_chromosome(b, (1, 1), scheme)
        assert encode_network(net, scheme).tolist() == list(bits)


def test_no_snapping():
    net = QuantizedNetwork.from_flat((1, 1), [2.3], [1])
    with pytest.raises(QuantizationError):
        encode_network(net, "integer")
    with pytest.raises(QuantizationError):
        encode_network(QuantizedNetwork.from_flat((1, 1), [1], [9]), "integer")


@given(st.data())
def test_round_trip_random(data):
    topology = tuple(data.draw(st.lists(st.integers(1, 5), min_size=2, max_size=4)))
    n = chromosome_length(topology)
    bits = np.array(data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n)), dtype=np.uint8)
    scheme = data.draw(st.sampled_from(list(QuantScheme)))
    net = decode_chromosome(bits, topology, scheme)
    assert np.array_equal(encode_network(net), bits)
    assert decode_chromosome(encode_network(net), topology, scheme) == net


def test_layout_is_post_major_and_position_stable():
    topology = (3, 2, 1)
    rng = np.random.default_rng(0)
    base = rng.integers(0, 2, chromosome_length(topology), dtype=np.uint8)
    net0 = decode_chromosome(base, topology, "integer")
    for k in range(base.size):
        flipped = base.copy()
        flipped[k] ^= 1
        net1 = decode_chromosome(flipped, topology, "integer")
        diffs = []
        for p in range(2):
            for field, a, b in (("weight", net0.weights[p], net1.weights[p]),
                                ("delay", net0.delays[p], net1.delays[p])):
                for j, i in zip(*np.nonzero(a != b)):
                    diffs.append((p, int(j), int(i), field))
        assert diffs == [synapse_of_bit(k, topology)]
    # synapse 4 = pair 0, post 1, pre 1; synapse 6 = pair 1, post 0, pre 0
    assert synapse_of_bit(24, topology) == (0, 1, 1, "delay")
    assert synapse_of_bit(39, topology) == (1, 0, 0, "weight")


def test_network_file_round_trip():
    # known trained [3 5 1] decimal network (dt = 1 run)
    w1 = [[0, -1, 2], [-1, -1, 1.5], [2, 1.5, -1], [1, 1.5, -1.5], [2, 0, -1]]
    d1 = [[6, 6, 5], [8, 4, 2], [8, 1, 1], [3, 4, 3], [4, 8, 7]]
    w2 = [[2, 1, 2, 1.5, 0.5]]
    d2 = [[1, 1, 6, 2, 1]]
    net = QuantizedNetwork((3, 5, 1), [w1, w2], [d1, d2], QuantScheme.DECIMAL)
    buf = io.StringIO()
    write_network(net, buf)
    text = buf.getvalue()
    assert "0, 6\t-1, 6\t2, 5" in text and "1.5, 2" in text
    again = read_network(io.StringIO(text))
    assert again == net
    buf2 = io.StringIO()
    write_network(again, buf2)
    assert buf2.getvalue() == text


def test_network_file_errors():
    with pytest.raises(DataFormatError):
        read_network(io.StringIO("format: other\n"))
    bad = "format: srmga-network 1\nscheme: integer\ntopology: 1 1\n\n[pair 0] 1 -> 1\n5, 1\n"
    with pytest.raises(QuantizationError):
        read_network(io.StringIO(bad))


def test_c_export_one_neuron():
    # known one-neuron integer network: (4, 8), (-3, 3), (4, 3)
    net = QuantizedNetwork((3, 1), [[[4, -3, 4]]], [[[8, 3, 3]]], QuantScheme.INTEGER)
    src = export_c_source(net)
    assert "snn_weight_level[SNN_N_SYNAPSES] = {0, 7, 0};" in src
    assert "snn_delay_ms[SNN_N_SYNAPSES] = {8, 3, 3};" in src
    assert "#define SNN_N_SYNAPSES 3" in src
    assert "#define SNN_WEIGHT_BASE 4" in src and "#define SNN_WEIGHT_DIVISOR 1" in src


@pytest.mark.parametrize("scheme", list(QuantScheme))
def test_c_export_decode_constants_reconstruct_weights(scheme):
    rng = np.random.default_rng(3)
    bits = rng.integers(0, 2, chromosome_length((3, 5, 1)), dtype=np.uint8)
    net = decode_chromosome(bits, (3, 5, 1), scheme)
    src = export_c_source(net)
    consts = {l.split()[1]: int(l.split()[2]) for l in src.splitlines() if l.startswith("#define SNN_W")}
    levels = [int(x) for x in src.split("snn_weight_level[SNN_N_SYNAPSES] = {")[1].split("}")[0].split(",")]
    assert all(0 <= v <= 7 for v in levels)
    rebuilt = [(consts["SNN_WEIGHT_BASE"] - v) / consts["SNN_WEIGHT_DIVISOR"] for v in levels]
    assert rebuilt == net.flat()[0].tolist()
