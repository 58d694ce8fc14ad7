"""Multi-run experiments: channel investigation, k sweep, and result export."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .attention import AttentionReport
from .augmentation import CHANNEL_SPECS, build_feature_set, enumerate_channels
from .data_io import SyntheticSpec, generate_synthetic, read_matrix, write_matrix
from .graph import Graph, SplitMasks, make_splits
from .metrics import MetricsRecord, compute_metrics  # noqa: F401 - re-exported
from .training import TrainConfig, train


@dataclass(frozen=True)
class InvestigationRow:
    name: str  # "G1(A,X)" ... or "full"
    accuracies: tuple[float, ...]  # one per seed

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))


@dataclass(frozen=True)
class SweepRow:
    k: int
    seed: int
    accuracy: float
    macro_f1: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]

    def mean_accuracy(self, k: int) -> float:
        return float(np.mean([r.accuracy for r in self.rows if r.k == k]))

    def to_table(self) -> str:
        lines = ["k\tseed\taccuracy\tmacro_f1"]
        lines += [f"{r.k}\t{r.seed}\t{r.accuracy!r}\t{r.macro_f1!r}" for r in self.rows]
        return "\n".join(lines) + "\n"


def investigate_features(spec: SyntheticSpec, seeds, cfg: TrainConfig, labels_per_class=20,
                         val_size=10, test_size=20) -> list[InvestigationRow]:
    """Test accuracy of each channel trained alone and of the fused model.

    For every seed a fresh synthetic graph and split are drawn; all ten models
    share them.  Returns nine channel rows followed by a ``full`` row.
    """
    per_model: dict[str, list[float]] = {s.label: [] for s in CHANNEL_SPECS}
    per_model["full"] = []
    for seed in seeds:
        graph = generate_synthetic(spec, np.random.default_rng(seed))
        splits = make_splits(graph, labels_per_class, val_size, test_size, np.random.default_rng(seed))
        run_cfg = replace(cfg, seed=seed)
        fs = build_feature_set(graph, run_cfg.k, densify=run_cfg.densify)
        all_channels = enumerate_channels(fs, run_cfg.normalize_attributes)
        for ch in all_channels:
            _, report = train(graph, splits, replace(run_cfg, single_channel=ch.index), channels=[ch])
            per_model[ch.spec.label].append(report.metrics["test"].accuracy)
        _, report = train(graph, splits, replace(run_cfg, single_channel=None), channels=all_channels)
        per_model["full"].append(report.metrics["test"].accuracy)
    return [InvestigationRow(name, tuple(accs)) for name, accs in per_model.items()]


def investigation_table(rows) -> str:
    seeds = len(rows[0].accuracies) if rows else 0
    lines = ["model\tmean_accuracy\t" + "\t".join(f"seed{i}" for i in range(seeds))]
    for r in rows:
        lines.append(f"{r.name}\t{r.mean!r}\t" + "\t".join(repr(a) for a in r.accuracies))
    return "\n".join(lines) + "\n"


def sweep_k(graph: Graph, splits: SplitMasks, cfg: TrainConfig, k_values, seeds) -> SweepResult:
    """One training run per ``(k, seed)``; rows sorted by ``(k, seed)``."""
    rows = []
    for k in sorted(set(k_values)):
        fs = build_feature_set(graph, k, densify=cfg.densify)
        for seed in sorted(set(seeds)):
            _, report = train(graph, splits, replace(cfg, k=k, seed=seed), feature_set=fs)
            m = report.metrics["test"]
            rows.append(SweepRow(k, seed, m.accuracy, m.macro_f1))
    return SweepResult(tuple(rows))


def export_embeddings(z, path):
    write_matrix(path, np.asarray(z))


def import_embeddings(path) -> np.ndarray:
    return read_matrix(path)


def export_attention(report: AttentionReport, path, channel_indices=range(1, 10)):
    """Tab-separated: header line, then ``node_id`` and one weight per channel."""
    cols = list(channel_indices)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("node\t" + "\t".join(f"alpha_{i}" for i in cols) + "\n")
        for node, row in enumerate(report.alpha):
            fh.write(f"{node}\t" + "\t".join(repr(float(v)) for v in row) + "\n")
