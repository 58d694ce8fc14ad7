"""Classifier head, objective and the full-graph training loop."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import autodiff as ad
from .attention import AttentionParams, AttentionReport, attention_scores, fuse, init_attention
from .augmentation import FeatureSet, build_feature_set, enumerate_channels
from .errors import ConfigError, NumericalError
from .gcn import GcnChannelParams, channel_forward, glorot, init_channel
from .graph import Graph, SplitMasks
from .hsic import disparity_loss, mean_pairwise_hsic, sample_pairs
from .metrics import MetricsRecord, compute_metrics
from .optim import AdamState, adam_step

PROB_EPS = 1e-12


@dataclass
class TrainConfig:
    lr: float = 5e-4
    weight_decay: float = 1e-4
    dropout: float = 0.5
    k: int = 4
    t: int = 8
    h1: int = 512
    h2: int = 256
    h_att: int | None = None  # defaults to h2
    lam: float = 0.01
    epochs: int = 1000
    patience: int = 100  # 0 disables early stopping
    seed: int = 0
    single_channel: int | None = None  # 1..9; bypasses attention
    densify: bool = True
    normalize_attributes: bool = True
    final_activation: bool = False
    num_layers: int = 2
    ordered_pairs: bool = False  # count each sampled pair twice, as in a sum over i != j

    def validate(self) -> "TrainConfig":
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.patience < 0:
            raise ConfigError(f"patience must be >= 0, got {self.patience}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not 1 <= self.t <= 36:
            raise ConfigError(f"t must be in [1, 36], got {self.t}")
        if min(self.h1, self.h2) < 1 or (self.h_att is not None and self.h_att < 1):
            raise ConfigError("hidden sizes must be positive")
        if self.num_layers < 1:
            raise ConfigError("num_layers must be >= 1")
        if self.single_channel is not None and not 1 <= self.single_channel <= 9:
            raise ConfigError(f"single_channel must be in 1..9, got {self.single_channel}")
        return self

    @property
    def channel_indices(self) -> list[int]:
        return [self.single_channel] if self.single_channel else list(range(1, 10))

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass
class ModelParams:
    channels: list[GcnChannelParams]
    attention: AttentionParams | None
    cls_w: np.ndarray  # C x h2
    cls_b: np.ndarray  # 1 x C

    def named_arrays(self) -> list[tuple[str, object]]:
        out = []
        for ch in self.channels:
            for layer, w in enumerate(ch.weights):
                out.append((f"g{ch.index}.w{layer}", w))
        if self.attention is not None:
            for ch, w, b in zip(self.channels, self.attention.w, self.attention.b):
                out.append((f"att{ch.index}.w", w))
                out.append((f"att{ch.index}.b", b))
            out.append(("att.q", self.attention.q))
        out.append(("cls.w", self.cls_w))
        out.append(("cls.b", self.cls_b))
        return out

    def with_arrays(self, arrays) -> "ModelParams":
        """Same structure, leaves replaced in ``named_arrays`` order."""
        it = iter(arrays)
        channels = [GcnChannelParams(ch.index, [next(it) for _ in ch.weights]) for ch in self.channels]
        attention = None
        if self.attention is not None:
            w, b = [], []
            for _ in self.channels:
                w.append(next(it))
                b.append(next(it))
            attention = AttentionParams(w, b, next(it))
        cls_w, cls_b = next(it), next(it)
        return ModelParams(channels, attention, cls_w, cls_b)

    def arrays(self) -> list:
        return [a for _, a in self.named_arrays()]

    def watched(self, tape: ad.Tape) -> "ModelParams":
        return self.with_arrays([tape.watch(a, name) for name, a in self.named_arrays()])


def init_model(in_dims, num_classes: int, cfg: TrainConfig, rng: np.random.Generator,
               indices=None) -> ModelParams:
    indices = cfg.channel_indices if indices is None else indices
    channels = [
        init_channel(d, cfg.h1, cfg.h2, rng, index=i, num_layers=cfg.num_layers)
        for i, d in zip(indices, in_dims)
    ]
    attention = None
    if len(channels) > 1:
        attention = init_attention(len(channels), cfg.h2, cfg.h_att or cfg.h2, rng)
    cls_w = glorot((num_classes, cfg.h2), rng)
    return ModelParams(channels, attention, cls_w, np.zeros((1, num_classes)))


def classify(z, w, b) -> ad.Tensor:
    """Row-softmax of ``Z W^T + b``."""
    return ad.softmax_rows(ad.add(ad.matmul(z, ad.transpose(w)), b))


def cross_entropy(y_hat, labels, mask) -> ad.Tensor:
    """Summed negative log-likelihood over the nodes in ``mask``."""
    mask = np.asarray(mask, dtype=np.int64)
    return ad.nll(y_hat, mask, np.asarray(labels)[mask], PROB_EPS)


@dataclass
class ForwardResult:
    z: list
    fused: object
    alpha: object
    probs: object


def forward(params: ModelParams, channels, cfg: TrainConfig, training=False, rng=None) -> ForwardResult:
    z = [
        channel_forward(p.weights, ch.a_hat, ch.attributes, training, cfg.dropout, rng, cfg.final_activation)
        for p, ch in zip(params.channels, channels)
    ]
    if params.attention is None:
        fused, alpha = z[0], None
    else:
        att = params.attention
        fused, alpha = fuse(attention_scores(att.w, att.b, att.q, z), z)
    return ForwardResult(z, fused, alpha, classify(fused, params.cls_w, params.cls_b))


@dataclass
class Objective:
    total: ad.Tensor
    loss_l: ad.Tensor
    loss_d: ad.Tensor
    out: ForwardResult


def objective(params, channels, labels, train_idx, pairs, cfg: TrainConfig, training=False, rng=None) -> Objective:
    """L = L_l + lam * L_d for one forward pass; ``pairs`` index ``params.channels``."""
    out = forward(params, channels, cfg, training, rng)
    loss_l = cross_entropy(out.probs, labels, train_idx)
    loss_d = disparity_loss(out.z, pairs)
    if cfg.ordered_pairs:
        loss_d = ad.scale(loss_d, 2.0)
    total = ad.add(loss_l, ad.scale(loss_d, cfg.lam)) if cfg.lam else loss_l
    return Objective(total, loss_l, loss_d, out)


@dataclass
class EpochRecord:
    epoch: int
    loss_l: float
    loss_d: float
    loss: float
    train_acc: float
    val_acc: float
    val_loss: float
    mean_hsic: float
    mean_attention: list

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(
            {
                "epoch": d["epoch"],
                "L_l": d["loss_l"],
                "L_d": d["loss_d"],
                "L": d["loss"],
                "train_acc": d["train_acc"],
                "val_acc": d["val_acc"],
                "val_loss": d["val_loss"],
                "mean_hsic": d["mean_hsic"],
                "mean_attention": d["mean_attention"],
            }
        )


@dataclass
class TrainReport:
    records: list[EpochRecord]
    best_epoch: int
    metrics: dict[str, MetricsRecord]
    embeddings: np.ndarray
    channel_embeddings: list[np.ndarray]
    attention: AttentionReport | None
    channel_indices: list[int]
    config: TrainConfig = field(repr=False, default=None)
    final_channel_embeddings: list[np.ndarray] = field(repr=False, default=None)  # last epoch

    @property
    def mean_pairwise_hsic(self) -> float:
        """Mean HSIC over all channel pairs of the best-validation embeddings."""
        return mean_pairwise_hsic(self.channel_embeddings)

    @property
    def final_mean_pairwise_hsic(self) -> float:
        return mean_pairwise_hsic(self.final_channel_embeddings)

    def run_log(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.records)


def _full_attention(alpha, indices) -> list[float]:
    """Per-channel mean weight laid out over all nine channels."""
    out = [0.0] * 9
    if alpha is None:
        out[indices[0] - 1] = 1.0
    else:
        for col, idx in enumerate(indices):
            out[idx - 1] = float(alpha[:, col].mean())
    return out


def prepare_channels(graph: Graph, cfg: TrainConfig, feature_set: FeatureSet | None = None):
    if feature_set is None or feature_set.k != cfg.k:
        feature_set = build_feature_set(graph, cfg.k, densify=cfg.densify)
    return enumerate_channels(feature_set, cfg.normalize_attributes, cfg.channel_indices)


def evaluate_params(params: ModelParams, channels, cfg: TrainConfig) -> ForwardResult:
    """Deterministic (dropout-free) forward pass returning plain arrays."""
    out = forward(params, channels, cfg, training=False)
    return ForwardResult(
        [z.value for z in out.z],
        out.fused.value,
        None if out.alpha is None else out.alpha.value,
        out.probs.value,
    )


def train(graph: Graph, splits: SplitMasks, cfg: TrainConfig, feature_set: FeatureSet | None = None,
          channels=None, callback=None) -> tuple[ModelParams, TrainReport]:
    """Train the fused model (or one channel) and keep the best-validation parameters.

    ``callback(record)`` is called after every epoch if given.
    """
    cfg.validate()
    splits.check_labeled(graph.labels)
    if channels is None:
        channels = prepare_channels(graph, cfg, feature_set)
    indices = [ch.index for ch in channels]
    rng = np.random.default_rng(cfg.seed)
    params = init_model([ch.attributes.shape[1] for ch in channels], graph.num_classes, cfg, rng, indices)
    adam = AdamState.for_params(params.arrays(), lr=cfg.lr, weight_decay=cfg.weight_decay)
    labels = graph.labels
    n_pairs = len(channels) * (len(channels) - 1) // 2
    t = min(cfg.t, n_pairs)

    records: list[EpochRecord] = []
    best = (-1.0, np.inf)
    best_params, best_epoch, stale = params, 0, 0
    for epoch in range(1, cfg.epochs + 1):
        tape = ad.Tape()
        watched = params.watched(tape)
        pairs = sample_pairs(t, rng, len(channels)) if t else []
        obj = objective(watched, channels, labels, splits.train, pairs, cfg, training=True, rng=rng)
        ll, ld = float(obj.loss_l.value), float(obj.loss_d.value)
        if not np.isfinite(ll):
            raise NumericalError(f"epoch {epoch}: classification loss L_l is non-finite ({ll})")
        if not np.isfinite(ld):
            raise NumericalError(f"epoch {epoch}: disparity loss L_d is non-finite ({ld})")
        grads = tape.backward(obj.total)
        new_arrays = adam_step(adam, params.arrays(), grads)
        if not all(np.isfinite(a).all() for a in new_arrays):
            raise NumericalError(f"epoch {epoch}: parameters became non-finite after the update")
        params = params.with_arrays(new_arrays)

        ev = evaluate_params(params, channels, cfg)
        train_acc = compute_metrics(ev.probs, labels, splits.train).accuracy
        val_acc = val_loss = float("nan")
        if len(splits.val):
            val_acc = compute_metrics(ev.probs, labels, splits.val).accuracy
            val_loss = float(cross_entropy(ev.probs, labels, splits.val).value) / len(splits.val)
        rec = EpochRecord(
            epoch=epoch,
            loss_l=ll,
            loss_d=ld,
            loss=float(obj.total.value),
            train_acc=train_acc,
            val_acc=val_acc,
            val_loss=val_loss,
            mean_hsic=ld / (len(pairs) * (2 if cfg.ordered_pairs else 1)) if pairs else 0.0,
            mean_attention=_full_attention(ev.alpha, indices),
        )
        records.append(rec)
        if callback is not None:
            callback(rec)

        if not len(splits.val):
            best_params, best_epoch = params, epoch
            continue
        if val_acc > best[0] or (val_acc == best[0] and val_loss < best[1]):
            best = (val_acc, val_loss)
            best_params, best_epoch, stale = params, epoch, 0
        else:
            stale += 1
            if cfg.patience and stale >= cfg.patience:
                break

    final_z = evaluate_params(params, channels, cfg).z
    ev = evaluate_params(best_params, channels, cfg)
    metrics = {}
    for name in ("train", "val", "test"):
        idx = getattr(splits, name)
        if len(idx):
            metrics[name] = compute_metrics(ev.probs, labels, idx)
    report = TrainReport(
        records=records,
        best_epoch=best_epoch,
        metrics=metrics,
        embeddings=ev.fused,
        channel_embeddings=ev.z,
        attention=None if ev.alpha is None else AttentionReport(ev.alpha),
        channel_indices=indices,
        config=replace(cfg),
        final_channel_embeddings=final_z,
    )
    return best_params, report
