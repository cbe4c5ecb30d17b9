"""Command-line front end: ``srmga train | resume | eval | trace | export | patterns``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import io
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import __version__, kernels
from .config import ConfigError, RunConfig, TaskName, dump_config, load_config, parse_config
from .errors import ParameterError, SrmgaError
from .evaluate import TaskEvaluator
from .evolve import (GaResult, checkpoint_load, checkpoint_read, checkpoint_save, run_ga,
                     stop_reason, write_history)
from .genome import decode_chromosome, export_c_source, read_network, write_network
from .srm import simulate_network, write_trace_table
from .tasks import (SpikePattern, XorVariant, iris_encode, iris_load, kfold_split, misclassified,
                    summarize_folds, xor_patterns)

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --------------------------------------------------------------------------
# task wiring


@dataclass
class TaskData:
    """Training patterns plus, for iris, the held-out validation patterns."""

    train: list[SpikePattern]
    validation: list[SpikePattern]
    all_patterns: list[SpikePattern]


def task_data(cfg: RunConfig, fold: int | None = None) -> TaskData:
    if cfg.task is TaskName.IRIS:
        samples = iris_load(cfg.iris.data_path or None)
        patterns = iris_encode(samples, cfg.grf, cfg.sim.dt_ms)
        folds = kfold_split(samples, cfg.iris.train_per_class, cfg.iris.k_folds,
                            cfg.iris.shuffle_seed)
        f = cfg.iris.fold if fold is None else fold
        if not 0 <= f < len(folds):
            raise ParameterError(f"fold {f} outside 0..{len(folds) - 1}")
        train, val = folds[f]
        return TaskData([patterns[i] for i in train], [patterns[i] for i in val], patterns)
    variant = XorVariant.STANDARD if cfg.task is TaskName.XOR_STANDARD else XorVariant.ONE_NEURON
    pats = xor_patterns(variant)
    return TaskData(pats, [], pats)


def make_evaluator(cfg: RunConfig, patterns) -> TaskEvaluator:
    return TaskEvaluator(cfg.topology, cfg.scheme, cfg.sim, patterns, cfg.ga.miss_penalty)


def _fmt_time(t) -> str:
    return "none" if t is None or (isinstance(t, float) and math.isnan(t)) else repr(float(t))


# --------------------------------------------------------------------------
# train / resume


def _new_run_dir(base: Path, seed: int) -> Path:
    stamp = time.strftime("%Y%m%d-%H%M%S")
    run = base / f"{stamp}-seed{seed}"
    n = 1
    while run.exists():
        n += 1
        run = base / f"{stamp}-seed{seed}-{n}"
    run.mkdir(parents=True)
    return run


def _write_artifacts(run_dir: Path, cfg: RunConfig, result: GaResult) -> dict:
    data = task_data(cfg)
    ev = make_evaluator(cfg, data.train)
    net = decode_chromosome(result.best.chromosome, cfg.topology, cfg.scheme)
    with open(run_dir / "network.txt", "w") as fh:
        write_network(net, fh)
    with open(run_dir / "history.tsv", "w") as fh:
        write_history(result.history, fh)
    manifest = {
        "package_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "run_id": run_dir.name,
        "task": cfg.task.value,
        "seed": cfg.ga.seed,
        "config_hash": cfg.hash(),
        "stop_reason": result.stop_reason,
        "generations": result.state.generation,
        "best_mse": result.best.objective,
        "train_misclassified": misclassified(ev.network_first_spikes(net).tolist(),
                                             [p.desired for p in data.train],
                                             cfg.iris.tolerance_ms),
        "files": ["config.ini", "history.tsv", "network.txt", "checkpoint.json"],
    }
    if data.validation:
        vev = make_evaluator(cfg, data.validation)
        manifest["fold"] = cfg.iris.fold
        manifest["validation_misclassified"] = misclassified(
            vev.network_first_spikes(net).tolist(), [p.desired for p in data.validation],
            cfg.iris.tolerance_ms)
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def _train_loop(cfg: RunConfig, run_dir: Path, state=None, halt_at: int | None = None) -> GaResult:
    data = task_data(cfg)
    ev = make_evaluator(cfg, data.train)
    ckpt = run_dir / "checkpoint.json"
    extra = {"config": dump_config(cfg)}

    def on_generation(st):
        if st.generation % cfg.run.checkpoint_every == 0:
            checkpoint_save(st, ckpt, cfg.hash(), extra)
        print(f"gen {st.generation:5d}  best {st.objectives[0]:.6g}  avg {st.objectives.mean():.6g}",
              file=sys.stderr)

    result = run_ga(cfg.ga, ev.chromosome_length, ev, state=state, until_generation=halt_at,
                    on_generation=on_generation)
    checkpoint_save(result.state, ckpt, cfg.hash(), extra)
    return result


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    run_dir = _new_run_dir(Path(args.out), cfg.ga.seed)
    (run_dir / "config.ini").write_text(dump_config(cfg))
    result = _train_loop(cfg, run_dir, halt_at=args.halt_at_generation)
    manifest = _write_artifacts(run_dir, cfg, result)
    print(run_dir)
    print(f"stop reason: {manifest['stop_reason']}  generations: {manifest['generations']}  "
          f"best mse: {manifest['best_mse']!r}")
    return EXIT_OK


def cmd_resume(args) -> int:
    ckpt = Path(args.checkpoint)
    payload, stored_hash = checkpoint_read(ckpt)
    cfg = parse_config(payload["extra"]["config"])
    if args.config is not None and load_config(args.config).hash() != stored_hash:
        raise SrmgaError(f"{ckpt}: config hash mismatch, refusing to resume")
    state = checkpoint_load(ckpt, cfg.hash())
    run_dir = Path(args.out) if args.out else ckpt.parent
    run_dir.mkdir(parents=True, exist_ok=True)
    if stop_reason(state, cfg.ga) is not None:
        print(f"run already finished at generation {state.generation} "
              f"({stop_reason(state, cfg.ga)}); nothing to do")
        return EXIT_OK
    (run_dir / "config.ini").write_text(dump_config(cfg))
    result = _train_loop(cfg, run_dir, state=state, halt_at=args.halt_at_generation)
    manifest = _write_artifacts(run_dir, cfg, result)
    print(run_dir)
    print(f"stop reason: {manifest['stop_reason']}  generations: {manifest['generations']}  "
          f"best mse: {manifest['best_mse']!r}")
    return EXIT_OK


# --------------------------------------------------------------------------
# eval / trace / export


def _read_net(path):
    with open(path) as fh:
        return read_network(fh)


def _out_stream(path):
    return open(path, "w") if path else sys.stdout


def cmd_eval(args) -> int:
    cfg = load_config(args.config)
    nets = [_read_net(p) for p in args.network]
    out = _out_stream(args.out)
    try:
        if cfg.task is TaskName.IRIS:
            folds = args.fold or ([cfg.iris.fold] if len(nets) == 1 else list(range(len(nets))))
            if len(folds) != len(nets):
                raise UsageError("give one --fold per --network")
            errors = []
            out.write("fold\tn_train\tn_validation\ttrain_mse\tvalidation_misclassified\n")
            for f, net in zip(folds, nets):
                data = task_data(cfg, f)
                tr = make_evaluator(cfg, data.train)
                va = make_evaluator(cfg, data.validation)
                bad = misclassified(va.network_first_spikes(net).tolist(),
                                    [p.desired for p in data.validation], cfg.iris.tolerance_ms)
                errors.append(bad)
                out.write(f"{f}\t{len(data.train)}\t{len(data.validation)}\t"
                          f"{tr.network_mse(net)!r}\t{bad}\n")
            summary = summarize_folds(errors, len(task_data(cfg).all_patterns))
            out.write("\nmetric\tvalue\n")
            out.write(f"mean_error\t{summary.mean_error!r}\n")
            out.write(f"accuracy_pct\t{summary.accuracy_pct!r}\n")
        else:
            data = task_data(cfg)
            for net in nets:
                ev = make_evaluator(cfg, data.train)
                actual = ev.network_first_spikes(net)
                out.write("pattern\tdesired_ms\tactual_ms\n")
                for m, (p, a) in enumerate(zip(data.train, actual)):
                    out.write(f"{m}\t{_fmt_time(p.desired)}\t{_fmt_time(a)}\n")
                out.write("\nmetric\tvalue\n")
                out.write(f"mse\t{ev.network_mse(net)!r}\n")
                out.write(f"misclassified\t"
                          f"{misclassified(actual.tolist(), [p.desired for p in data.train])}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _pattern_ids(selector: str, n: int) -> list[int]:
    if selector == "all":
        return list(range(n))
    ids = []
    for part in selector.split(","):
        try:
            k = int(part)
        except ValueError:
            raise ParameterError(f"unknown pattern id {part!r}") from None
        if not 0 <= k < n:
            raise ParameterError(f"unknown pattern id {k}; valid ids are 0..{n - 1}")
        ids.append(k)
    return ids


def cmd_trace(args) -> int:
    cfg = load_config(args.config)
    net = _read_net(args.network)
    if net.topology != cfg.topology:
        raise ParameterError(f"network topology {list(net.topology)} != config {list(cfg.topology)}")
    patterns = task_data(cfg).all_patterns
    try:
        ids = _pattern_ids(args.pattern, len(patterns))
    except ParameterError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
    for k in ids:
        res = simulate_network(net, patterns[k].trains(), cfg.sim, trace=True)
        if args.out:
            with open(Path(args.out) / f"trace_p{k}.tsv", "w") as fh:
                write_trace_table(res, fh)
        else:
            sys.stdout.write(f"# pattern {k}\n")
            write_trace_table(res, sys.stdout)
            sys.stdout.write("\n")
    return EXIT_OK


def cmd_export(args) -> int:
    net = _read_net(args.network)
    if args.format == "table-text":
        buf = io.StringIO()
        write_network(net, buf)
        text = buf.getvalue()
    else:
        text = export_c_source(net, args.name)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_patterns(args) -> int:
    cfg = load_config(args.config)
    patterns = task_data(cfg).all_patterns
    out = _out_stream(args.out)
    try:
        write_patterns(patterns, out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def write_patterns(patterns, stream) -> None:
    """Pattern dump; ``0`` stands for "no spike" in every time column."""
    n_in = len(patterns[0].input_times)
    stream.write("\t".join(["pattern"] + [f"in{i}_ms" for i in range(n_in)] + ["desired_ms"]) + "\n")
    for m, p in enumerate(patterns):
        cells = [str(m)] + [repr(float(t)) if t is not None else "0" for t in p.input_times]
        cells.append(repr(float(p.desired)) if p.desired is not None else "0")
        stream.write("\t".join(cells) + "\n")


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="srmga", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="run the genetic algorithm")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, help="override [ga] seed")
    p.add_argument("--out", default="runs", help="base directory for run folders")
    p.add_argument("--halt-at-generation", type=int, default=None,
                   help="stop after this generation, leaving a resumable checkpoint")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("resume", help="continue a run from its checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--config", help="refuse to resume unless this config matches")
    p.add_argument("--out", help="write artifacts here instead of the checkpoint's folder")
    p.add_argument("--halt-at-generation", type=int, default=None)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("eval", help="score trained networks")
    p.add_argument("--config", required=True)
    p.add_argument("--network", required=True, action="append")
    p.add_argument("--fold", type=int, action="append", help="iris fold per --network")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("trace", help="membrane potential traces")
    p.add_argument("--config", required=True)
    p.add_argument("--network", required=True)
    p.add_argument("--pattern", default="all", help="pattern id, comma list, or 'all'")
    p.add_argument("--out", help="directory for trace_p<id>.tsv files (default: stdout)")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("export", help="export a trained network")
    p.add_argument("--network", required=True)
    p.add_argument("--format", choices=["table-text", "static-array-source"], default="table-text")
    p.add_argument("--name", default="snn", help="identifier prefix for static-array-source")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("patterns", help="dump the encoded input patterns of a task")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_patterns)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SrmgaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
