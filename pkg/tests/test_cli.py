import json
import subprocess
import sys
from pathlib import Path

import pytest

from srmga.cli import main
from srmga.genome import read_network

XOR_SMALL = """
[task]
name = xor-standard
topology = 3 5 1
scheme = integer

[ga]
population_size = 24
elite_count = 2
max_generations = 20
mse_target_ms2 = 0
seed = 5

[run]
checkpoint_every = 4
"""

IRIS_SMALL = """
[task]
name = iris

[ga]
population_size = 10
elite_count = 1
max_generations = 2
seed = 1

[sim]
theta = 6
"""


@pytest.fixture
def xor_cfg(tmp_path):
    p = tmp_path / "xor.ini"
    p.write_text(XOR_SMALL)
    return p


def _only_run(base: Path) -> Path:
    runs = [d for d in base.iterdir() if d.is_dir()]
    assert len(runs) == 1
    return runs[0]


def _train(cfg, out, *extra):
    assert main(["train", "--config", str(cfg), "--out", str(out), *extra]) == 0
    return _only_run(out)


def test_train_writes_artifacts(xor_cfg, tmp_path):
    run = _train(xor_cfg, tmp_path / "a")
    assert run.name.endswith("-seed5")
    for name in ("config.ini", "checkpoint.json", "network.txt", "history.tsv", "manifest.json"):
        assert (run / name).is_file()
    m = json.loads((run / "manifest.json").read_text())
    assert m["seed"] == 5 and m["stop_reason"] in ("mse_target", "max_generations")
    hist = (run / "history.tsv").read_text().splitlines()
    assert hist[0] == "generation\tbest_mse\tavg_mse"
    assert len(hist) == m["generations"] + 2
    assert float(hist[-1].split("\t")[1]) == m["best_mse"]


def test_seed_override_and_zero_generations(xor_cfg, tmp_path):
    xor_cfg.write_text(XOR_SMALL.replace("max_generations = 20", "max_generations = 0"))
    run = _train(xor_cfg, tmp_path / "z", "--seed", "9")
    m = json.loads((run / "manifest.json").read_text())
    assert m["seed"] == 9 and m["generations"] == 0
    assert len((run / "history.tsv").read_text().splitlines()) == 2


def test_same_seed_byte_identical(xor_cfg, tmp_path):
    a = _train(xor_cfg, tmp_path / "a")
    b = _train(xor_cfg, tmp_path / "b")
    for name in ("history.tsv", "network.txt", "checkpoint.json", "config.ini"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_halt_and_resume_equals_straight_run(xor_cfg, tmp_path):
    straight = _train(xor_cfg, tmp_path / "s")
    halted = _train(xor_cfg, tmp_path / "h", "--halt-at-generation", "7")
    assert json.loads((halted / "manifest.json").read_text())["stop_reason"] == "halted"
    resumed = tmp_path / "r"
    assert main(["resume", "--checkpoint", str(halted / "checkpoint.json"),
                 "--out", str(resumed)]) == 0
    for name in ("history.tsv", "network.txt", "checkpoint.json"):
        assert (resumed / name).read_bytes() == (straight / name).read_bytes()


def test_resume_finished_is_noop(xor_cfg, tmp_path, capsys):
    run = _train(xor_cfg, tmp_path / "a")
    before = (run / "history.tsv").read_bytes()
    capsys.readouterr()
    assert main(["resume", "--checkpoint", str(run / "checkpoint.json")]) == 0
    assert "nothing to do" in capsys.readouterr().out
    assert (run / "history.tsv").read_bytes() == before


def test_resume_refuses_corruption_and_mismatch(xor_cfg, tmp_path):
    run = _train(xor_cfg, tmp_path / "a", "--halt-at-generation", "3")
    ck = run / "checkpoint.json"
    other = tmp_path / "other.ini"
    other.write_text(XOR_SMALL.replace("seed = 5", "seed = 6"))
    assert main(["resume", "--checkpoint", str(ck), "--config", str(other)]) == 2
    ck.write_text(ck.read_text().replace('"generation": 3', '"generation": 4'))
    assert main(["resume", "--checkpoint", str(ck)]) == 2


def test_eval_matches_training_mse(xor_cfg, tmp_path):
    run = _train(xor_cfg, tmp_path / "a")
    out = tmp_path / "eval.tsv"
    assert main(["eval", "--config", str(xor_cfg), "--network", str(run / "network.txt"),
                 "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "pattern\tdesired_ms\tactual_ms" and len(lines) >= 8
    mse = float(next(l for l in lines if l.startswith("mse\t")).split("\t")[1])
    assert mse == json.loads((run / "manifest.json").read_text())["best_mse"]


def test_trace_grid_and_determinism(xor_cfg, tmp_path):
    run = _train(xor_cfg, tmp_path / "a")
    args = ["trace", "--config", str(xor_cfg), "--network", str(run / "network.txt"),
            "--pattern", "0,3"]
    assert main(args + ["--out", str(tmp_path / "t1")]) == 0
    assert main(args + ["--out", str(tmp_path / "t2")]) == 0
    for name in ("trace_p0.tsv", "trace_p3.tsv"):
        text = (tmp_path / "t1" / name).read_text()
        assert text == (tmp_path / "t2" / name).read_text()
        table = text.split("\n\n")[0].splitlines()
        assert table[0].startswith("time_ms\tu_") and len(table) == 1 + 51
        assert len(table[0].split("\t")) == 1 + 6
    assert main(["trace", "--config", str(xor_cfg), "--network", str(run / "network.txt"),
                 "--pattern", "9"]) == 1


def test_trace_zero_weights_is_flat(tmp_path, xor_cfg):
    net = tmp_path / "zero.txt"
    rows = "\n".join(["0, 1\t0, 1\t0, 1"] * 5)
    net.write_text("format: srmga-network 1\nscheme: integer\ntopology: 3 5 1\n\n"
                   f"[pair 0] 3 -> 5\n{rows}\n\n[pair 1] 5 -> 1\n"
                   + "\t".join(["0, 1"] * 5) + "\n")
    out = tmp_path / "t"
    assert main(["trace", "--config", str(xor_cfg), "--network", str(net), "--pattern", "1",
                 "--out", str(out)]) == 0
    table = (out / "trace_p1.tsv").read_text().split("\n\n")[0].splitlines()[1:]
    assert all(float(v) == 0.0 for row in table for v in row.split("\t")[1:])


def test_export_round_trip_and_static_arrays(xor_cfg, tmp_path):
    run = _train(xor_cfg, tmp_path / "a")
    txt = tmp_path / "net.txt"
    assert main(["export", "--network", str(run / "network.txt"), "--out", str(txt)]) == 0
    with open(txt) as a, open(run / "network.txt") as b:
        assert read_network(a) == read_network(b)
    src = tmp_path / "net.h"
    assert main(["export", "--network", str(run / "network.txt"), "--format",
                 "static-array-source", "--name", "xor", "--out", str(src)]) == 0
    text = src.read_text()
    assert "xor_weight_level[XOR_N_SYNAPSES]" in text and "#define XOR_N_SYNAPSES 20" in text


def test_patterns_dump(tmp_path):
    cfg = tmp_path / "one.ini"
    cfg.write_text("[task]\nname = xor-one-neuron\n")
    out = tmp_path / "p.tsv"
    assert main(["patterns", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "pattern\tin0_ms\tin1_ms\tin2_ms\tdesired_ms"
    assert lines[1] == "0\t1.0\t1.0\t1.0\t0"
    assert lines[2] == "1\t1.0\t1.0\t7.0\t10.0"


def test_iris_train_and_eval(tmp_path):
    cfg = tmp_path / "iris.ini"
    cfg.write_text(IRIS_SMALL)
    run = _train(cfg, tmp_path / "runs")
    m = json.loads((run / "manifest.json").read_text())
    assert m["fold"] == 0 and 0 <= m["validation_misclassified"] <= 120
    out = tmp_path / "eval.tsv"
    assert main(["eval", "--config", str(cfg), "--network", str(run / "network.txt"),
                 "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("fold\tn_train\tn_validation\ttrain_mse\tvalidation_misclassified\n0\t30\t120\t")
    assert f"\t{m['validation_misclassified']}\n" in text
    acc = float(text.split("accuracy_pct\t")[1])
    assert acc == pytest.approx(100 * (1 - m["validation_misclassified"] / 150))


def test_exit_codes(xor_cfg, tmp_path):
    assert main([]) == 1
    assert main(["train"]) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[task]\nname = xor-standard\n[ga]\npopsize = 3\n")
    assert main(["train", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert main(["eval", "--config", str(xor_cfg), "--network", str(tmp_path / "missing")]) == 2
    one = tmp_path / "one.txt"
    one.write_text("format: srmga-network 1\nscheme: integer\ntopology: 3 1\n\n"
                   "[pair 0] 3 -> 1\n0, 1\t0, 1\t0, 1\n")
    assert main(["eval", "--config", str(xor_cfg), "--network", str(one)]) == 2


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "srmga.cli", "export", "--network", "nope"],
                       capture_output=True, text=True)
    assert r.returncode == 2 and r.stderr.startswith("error:")
