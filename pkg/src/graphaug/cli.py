"""Command-line entry point: ``graphaug {augment,train,evaluate,investigate,sweep}``.

Settings come from three layers, later ones winning: built-in defaults, an
optional ``key = value`` config file (``--config``), and command-line flags.
The config file may have a ``[common]`` section plus one section per command;
keys are flag names with dashes replaced by underscores, and any
``TrainConfig`` or ``SyntheticSpec`` field is accepted.

Exit codes: 0 success, 2 configuration error, 3 I/O or parse error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .augmentation import CHANNEL_SPECS, build_feature_set
from .data_io import (
    SyntheticSpec,
    generate_synthetic,
    load_dataset,
    read_checkpoint,
    read_split,
    write_checkpoint,
    write_matrix,
)
from .errors import ConfigError, NumericalError, ParseError, ShapeError, ValidationError
from .evaluation import export_attention, export_embeddings, investigate_features, investigation_table, sweep_k
from .graph import make_splits
from .metrics import compute_metrics
from .training import TrainConfig, evaluate_params, init_model, prepare_channels, train

EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 2, 3, 4
COMMANDS = ("augment", "train", "evaluate", "investigate", "sweep")
SYNTHETIC = "synthetic"
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
# val/test sizes used when none are given; the 90-node synthetic graph cannot hold 500/1000
REAL_EVAL_SIZES = (500, 1000)
SYNTHETIC_EVAL_SIZES = (10, 20)


@dataclass
class RunConfig:
    command: str
    dataset: str | None = None
    edges: str | None = None
    features: str | None = None
    labels: str | None = None
    split: str | None = None
    checkpoint: str | None = None
    labels_per_class: int = 20
    val_size: int | None = None  # resolved from the dataset kind when unset
    test_size: int | None = None
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    graph_seed: int = 0
    k_values: tuple[int, ...] = tuple(range(2, 10))
    out: str = "out"
    train: TrainConfig = field(default_factory=TrainConfig)
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    @property
    def is_synthetic(self) -> bool:
        return self.dataset == SYNTHETIC

    def eval_sizes(self) -> tuple[int, int]:
        return self.val_size, self.test_size

    def lines(self) -> list[str]:
        """``key = value`` lines that reproduce this configuration."""
        out = [f"[{self.command}]"]
        for key in ("dataset", "edges", "features", "labels", "split", "checkpoint"):
            value = getattr(self, key)
            if value is not None:
                out.append(f"{key} = {value}")
        val, test = self.eval_sizes()
        out += [
            f"labels_per_class = {self.labels_per_class}",
            f"val_size = {val}",
            f"test_size = {test}",
            f"seeds = {','.join(map(str, self.seeds))}",
            f"out = {self.out}",
        ]
        if self.command == "sweep":
            out.append(f"k_values = {','.join(map(str, self.k_values))}")
        if self.is_synthetic or self.command == "investigate":
            out.append(f"graph_seed = {self.graph_seed}")
            out += [f"{k} = {_fmt(v)}" for k, v in asdict(self.synthetic).items()]
        # the per-run seed comes from ``seeds``
        out += [f"{k} = {_fmt(v)}" for k, v in asdict(self.train).items() if k != "seed"]
        return out


def _fmt(v) -> str:
    return "none" if v is None else str(v).lower() if isinstance(v, bool) else str(v)


# ---------------------------------------------------------------------------
# value parsing


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _int_list(text) -> tuple[int, ...]:
    """``"0,1,4"`` or ranges such as ``"2-9"``."""
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    out = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        try:
            if "-" in part[1:]:
                lo, hi = part.split("-", 1) if not part.startswith("-") else (part, part)
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"expected integers or ranges, got {text!r}") from None
    if not out:
        raise ConfigError("empty integer list")
    return tuple(out)


def _optional_int(text):
    return None if text is None or str(text).strip().lower() in ("", "none") else int(text)


def _convert(template, text):
    """Parse ``text`` into the type of the default ``template``."""
    if isinstance(template, bool):
        return _bool(text)
    if isinstance(template, int):
        return int(text)
    if isinstance(template, float):
        return float(text)
    return text


_TRAIN_TYPES = {f.name: f for f in fields(TrainConfig)}
_SYNTH_TYPES = {f.name: f for f in fields(SyntheticSpec)}
_OPTIONAL_INT_FIELDS = {"h_att", "single_channel", "val_size", "test_size"}
_ALIASES = {"lambda": "lam", "seed": "seeds", "correlation": "correlation_mode", "no_densify": "densify"}


def _apply(settings: dict, key: str, value, source: str):
    """Store one raw ``key``/``value`` pair into ``settings`` under canonical names."""
    key = key.replace("-", "_")
    if key == "no_densify":
        value = not _bool(value) if isinstance(value, str) else not value
    key = _ALIASES.get(key, key)
    known = (set(_TRAIN_TYPES) | set(_SYNTH_TYPES) | {f.name for f in fields(RunConfig)} | {"config"}) - {
        "command", "train", "synthetic"}
    if key not in known:
        raise ConfigError(f"{source}: unknown setting {key!r}")
    settings[key] = value


def _read_config_file(path: str, command: str) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    settings: dict = {}
    for section in ("common", command):
        if parser.has_section(section):
            for key, value in parser.items(section):
                _apply(settings, key, value, f"{path} [{section}]")
    unknown = set(parser.sections()) - {"common", *COMMANDS}
    if unknown:
        raise ConfigError(f"{path}: unknown section(s) {sorted(unknown)}")
    return settings


def _build_run_config(command: str, settings: dict) -> RunConfig:
    train_kw, synth_kw, run_kw = {}, {}, {}
    try:
        for key, value in settings.items():
            if key == "config":
                continue
            if key in _TRAIN_TYPES:
                default = _TRAIN_TYPES[key].default
                if key in _OPTIONAL_INT_FIELDS:
                    train_kw[key] = _optional_int(value)
                elif isinstance(value, str):
                    train_kw[key] = _convert(default, value)
                else:
                    train_kw[key] = value
            elif key in _SYNTH_TYPES:
                default = _SYNTH_TYPES[key].default
                synth_kw[key] = _convert(default, value) if isinstance(value, str) else value
            elif key in ("seeds", "k_values"):
                run_kw[key] = _int_list(value) if not isinstance(value, int) else (value,)
            elif key in _OPTIONAL_INT_FIELDS:
                run_kw[key] = _optional_int(value)
            elif key in ("labels_per_class", "graph_seed"):
                run_kw[key] = int(value)
            else:
                run_kw[key] = value
    except ValueError as exc:
        raise ConfigError(f"bad value: {exc}") from None
    cfg = RunConfig(command, train=replace(TrainConfig(), **train_kw),
                    synthetic=replace(SyntheticSpec(), **synth_kw), **run_kw)
    fallback = SYNTHETIC_EVAL_SIZES if cfg.is_synthetic else REAL_EVAL_SIZES
    if cfg.val_size is None:
        cfg.val_size = fallback[0]
    if cfg.test_size is None:
        cfg.test_size = fallback[1]
    cfg.train.validate()
    cfg.synthetic.validate()
    if cfg.dataset is None and cfg.features is None and command != "investigate":
        raise ConfigError("no input graph: give --dataset (a name, a directory or 'synthetic') "
                          "or --edges/--features/--labels")
    if cfg.features is not None and (cfg.edges is None or cfg.labels is None):
        raise ConfigError("--features requires --edges and --labels")
    if command == "evaluate" and cfg.checkpoint is None:
        raise ConfigError("evaluate requires --checkpoint")
    return cfg


# ---------------------------------------------------------------------------
# argument parser


def _common_parser() -> argparse.ArgumentParser:
    d = TrainConfig()
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    g = p.add_argument_group("input")
    g.add_argument("--config", help="key = value config file (sections [common] and per command)")
    g.add_argument("--dataset", help="dataset name under $GRAPHAUG_DATA, a directory, or 'synthetic'")
    g.add_argument("--edges", help="edge list file (with --features and --labels)")
    g.add_argument("--features", help="attribute matrix file")
    g.add_argument("--labels", help="label file")
    g.add_argument("--split", help="split file; default: random split per seed")
    g.add_argument("--labels-per-class", type=int, help="training labels per class (default: 20)")
    g.add_argument("--val-size", type=int, help="validation nodes (default: 500; 10 for synthetic)")
    g.add_argument("--test-size", type=int, help="test nodes (default: 1000; 20 for synthetic)")
    g.add_argument("--correlation", choices=("attributes", "topology", "both"),
                   help="synthetic graph: which signal carries the labels (default: both)")
    g.add_argument("--graph-seed", type=int, help="seed of the synthetic graph (default: 0)")
    h = p.add_argument_group("model and training")
    h.add_argument("--k", type=int, help=f"kNN neighbours per node (default: {d.k})")
    h.add_argument("--t", type=int, help=f"channel pairs sampled per step (default: {d.t})")
    h.add_argument("--lambda", type=float, dest="lambda", help=f"disparity weight (default: {d.lam})")
    h.add_argument("--lr", type=float, help=f"learning rate (default: {d.lr})")
    h.add_argument("--weight-decay", type=float, help=f"decoupled weight decay (default: {d.weight_decay})")
    h.add_argument("--dropout", type=float, help=f"dropout rate (default: {d.dropout})")
    h.add_argument("--h1", type=int, help=f"hidden width of the first GCN layer (default: {d.h1})")
    h.add_argument("--h2", type=int, help=f"embedding width (default: {d.h2})")
    h.add_argument("--epochs", type=int, help=f"maximum epochs (default: {d.epochs})")
    h.add_argument("--patience", type=int, help=f"early-stopping patience, 0 = off (default: {d.patience})")
    h.add_argument("--seed", type=int, dest="seeds", help="single seed")
    h.add_argument("--seeds", help="seed list such as 0,1,2 or 0-4 (default: 0-4)")
    h.add_argument("--single-channel", type=int, help="train one channel 1..9 without attention (default: off)")
    h.add_argument("--no-densify", action="store_const", const=True,
                   help="use A instead of its two-hop densification (default: densify)")
    p.add_argument("--out", help="output directory (default: out)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphaug", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()
    helps = {
        "augment": "write the augmented matrices and the channel manifest",
        "train": "train over all seeds; write logs, checkpoints and a summary",
        "evaluate": "score a checkpoint on a dataset split",
        "investigate": "train each channel alone and the full model on synthetic graphs",
        "sweep": "accuracy as a function of the kNN size k",
    }
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], help=helps[name], description=helps[name],
                            argument_default=argparse.SUPPRESS)
        if name == "evaluate":
            sp.add_argument("--checkpoint", help="checkpoint written by 'train'")
        if name == "sweep":
            sp.add_argument("--k-values", help="k values such as 2-9 (default: 2-9)")
    return parser


def resolve_config(argv) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    settings: dict = {}
    if "config" in args:
        settings.update(_read_config_file(args["config"], command))
    for key, value in args.items():
        _apply(settings, key, value, "command line")
    if command == "investigate":
        settings.setdefault("dataset", SYNTHETIC)
    return _build_run_config(command, settings)


# ---------------------------------------------------------------------------
# commands


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_graph(cfg: RunConfig):
    if cfg.is_synthetic:
        return generate_synthetic(cfg.synthetic, np.random.default_rng(cfg.graph_seed))
    if cfg.features is not None:
        return load_dataset({"edges": cfg.edges, "features": cfg.features, "labels": cfg.labels})
    return load_dataset(cfg.dataset)


def _splits(cfg: RunConfig, graph, seed: int):
    if cfg.split is not None:
        return read_split(cfg.split, graph.n)
    val, test = cfg.eval_sizes()
    return make_splits(graph, cfg.labels_per_class, val, test, np.random.default_rng(seed))


def cmd_augment(cfg: RunConfig) -> int:
    graph = _load_graph(cfg)
    fs = build_feature_set(graph, cfg.train.k, densify=cfg.train.densify)
    out = _out_dir(cfg)
    for name in ("a_high", "a_c", "x_c", "a_t", "x_t", "x"):
        write_matrix(out / f"{name}.txt", getattr(fs, name))
    with open(out / "manifest.txt", "w", encoding="utf-8") as fh:
        fh.write(f"nodes\t{graph.n}\n")
        fh.write(f"knn_k\t{fs.k}\n")
        fh.write(f"knn_degree_before_symmetrization\t{fs.k}\n")
        fh.write(f"densify\t{_fmt(cfg.train.densify)}\n")
        fh.write("channel\tadjacency\tattribute\n")
        for spec in CHANNEL_SPECS:
            fh.write(f"G{spec.index}\t{spec.adjacency_source}\t{spec.attribute_source}\n")
    print(f"wrote 6 matrices and manifest.txt to {out}")
    return 0


def _meta(cfg: RunConfig, run_cfg: TrainConfig, report, graph) -> dict:
    return {
        "config": asdict(run_cfg),
        "dataset": cfg.dataset if cfg.dataset is not None else cfg.features,
        "channels": report.channel_indices,
        "num_classes": graph.num_classes,
        "best_epoch": report.best_epoch,
    }


def _summary_rows(per_seed: list[tuple[int, dict]]) -> list[str]:
    lines = ["seed\tsplit\taccuracy\tmacro_f1"]
    for seed, metrics in per_seed:
        for split, m in metrics.items():
            lines.append(f"{seed}\t{split}\t{m.accuracy!r}\t{m.macro_f1!r}")
    splits = per_seed[0][1].keys() if per_seed else []
    for split in splits:
        acc = np.array([m[split].accuracy for _, m in per_seed])
        f1 = np.array([m[split].macro_f1 for _, m in per_seed])
        lines.append(f"mean\t{split}\t{float(acc.mean())!r}\t{float(f1.mean())!r}")
        lines.append(f"std\t{split}\t{float(acc.std())!r}\t{float(f1.std())!r}")
    return lines


def cmd_train(cfg: RunConfig) -> int:
    graph = _load_graph(cfg)
    out = _out_dir(cfg)
    fs = build_feature_set(graph, cfg.train.k, densify=cfg.train.densify)
    per_seed = []
    for seed in cfg.seeds:
        run_cfg = replace(cfg.train, seed=seed)
        splits = _splits(cfg, graph, seed)
        params, report = train(graph, splits, run_cfg, feature_set=fs)
        d = out / f"seed{seed}"
        d.mkdir(exist_ok=True)
        (d / "run_log.jsonl").write_text(report.run_log(), encoding="utf-8")
        write_checkpoint(d / "checkpoint.txt", params.named_arrays(), _meta(cfg, run_cfg, report, graph))
        export_embeddings(report.embeddings, d / "embeddings.txt")
        if report.attention is not None:
            export_attention(report.attention, d / "attention.tsv", report.channel_indices)
        test = report.metrics.get("test")
        if test is not None:
            print(f"seed {seed}: best epoch {report.best_epoch}, test acc {test.accuracy:.4f}, "
                  f"macro-F1 {test.macro_f1:.4f}")
        per_seed.append((seed, report.metrics))
    lines = _summary_rows(per_seed)
    (out / "summary.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    for line in lines:
        if line.startswith(("mean\ttest", "std\ttest")):
            print(line)
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    meta, arrays = read_checkpoint(cfg.checkpoint)
    try:
        run_cfg = replace(TrainConfig(), **meta["config"])
        indices = list(meta["channels"])
    except (KeyError, TypeError) as exc:
        raise ParseError(f"checkpoint meta is incomplete: {exc}", cfg.checkpoint) from None
    graph = _load_graph(cfg)
    channels = prepare_channels(graph, run_cfg)
    channels = [ch for ch in channels if ch.index in indices]
    skeleton = init_model([ch.attributes.shape[1] for ch in channels], graph.num_classes, run_cfg,
                          np.random.default_rng(0), indices)
    expected = [(n, np.shape(a)) for n, a in skeleton.named_arrays()]
    found = [(n, a.shape) for n, a in arrays]
    if expected != found:
        raise ShapeError(f"checkpoint parameters {found} do not fit this dataset/config {expected}")
    params = skeleton.with_arrays([a for _, a in arrays])
    ev = evaluate_params(params, channels, run_cfg)
    splits = _splits(cfg, graph, run_cfg.seed)
    out = _out_dir(cfg)
    lines = ["split\taccuracy\tmacro_f1\tn_eval"]
    for name in ("train", "val", "test"):
        idx = getattr(splits, name)
        if len(idx):
            m = compute_metrics(ev.probs, graph.labels, idx)
            lines.append(f"{name}\t{m.accuracy!r}\t{m.macro_f1!r}\t{m.n_eval}")
    (out / "metrics.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    export_embeddings(ev.fused, out / "embeddings.txt")
    print("\n".join(lines))
    return 0


def cmd_investigate(cfg: RunConfig) -> int:
    val, test = cfg.eval_sizes()
    rows = investigate_features(cfg.synthetic, cfg.seeds, cfg.train, cfg.labels_per_class, val, test)
    table = investigation_table(rows)
    (_out_dir(cfg) / "investigation.tsv").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    graph = _load_graph(cfg)
    bad = [k for k in cfg.k_values if not 1 <= k < graph.n]
    if bad:
        raise ConfigError(f"k values {bad} outside [1, {graph.n - 1}]")
    splits = _splits(cfg, graph, cfg.graph_seed)
    result = sweep_k(graph, splits, cfg.train, cfg.k_values, cfg.seeds)
    table = result.to_table()
    (_out_dir(cfg) / "sweep.tsv").write_text(table, encoding="utf-8")
    print(table, end="")
    for k in sorted(set(cfg.k_values)):
        print(f"# k={k}: mean accuracy {result.mean_accuracy(k):.4f}")
    return 0


HANDLERS = {
    "augment": cmd_augment,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "investigate": cmd_investigate,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
        print("# effective config")
        print("\n".join(cfg.lines()))
        print("# end config", flush=True)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, ValidationError, ShapeError, OSError, json.JSONDecodeError) as exc:
        print(f"input/output error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
