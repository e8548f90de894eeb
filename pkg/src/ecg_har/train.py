"""Two-stage training: Adam with coupled L2, plateau LR, early stopping.

Stage defaults follow the published hyperparameter table: stage 1
(lr 4e-4, min_lr 1e-6, 30 epochs, weight decay 1e-4), stage 2 (lr 1e-4,
min_lr 1e-8, 30 epochs, weight decay 1e-3); stage 2 resumes from the
stage-1 best checkpoint with fresh optimizer state.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .datamodel import class_weights
from .errors import InvalidArgumentError, NonFiniteGradientError
from .evaluate import confusion, metrics
from .nn import Context, weighted_cross_entropy

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
PLATEAU_FACTOR = 0.5
PLATEAU_PATIENCE = 5
PLATEAU_THRESHOLD = 1e-4
EARLY_STOP_PATIENCE = 10
BATCH_SIZE = 64


@dataclass(frozen=True)
class StageConfig:
    lr: float
    min_lr: float
    epochs: int
    weight_decay: float

    def __post_init__(self):
        if self.min_lr > self.lr:
            raise InvalidArgumentError("min_lr must not exceed lr")
        if self.epochs < 1:
            raise InvalidArgumentError("epochs must be >= 1")


DEFAULT_STAGES = (
    StageConfig(lr=4e-4, min_lr=1e-6, epochs=30, weight_decay=1e-4),
    StageConfig(lr=1e-4, min_lr=1e-8, epochs=30, weight_decay=1e-3),
)


class AdamState:
    """Per-parameter first/second moments and the shared step counter."""

    def __init__(self, params):
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]
        self.t = 0


def adam_step(params, state: AdamState, lr: float, weight_decay: float) -> None:
    """One Adam update with coupled L2: g' = g + weight_decay * theta."""
    b1, b2 = ADAM_BETAS
    state.t += 1
    t = state.t
    for p, m, v in zip(params, state.m, state.v):
        if not np.all(np.isfinite(p.grad)):
            raise NonFiniteGradientError(p.name)
        g = p.grad + weight_decay * p.value
        m += (1 - b1) * (g - m)
        v += (1 - b2) * (g * g - v)
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


@dataclass
class PlateauSchedule:
    """Halve the LR after `patience` epochs without val-loss improvement."""

    lr: float
    min_lr: float
    factor: float = PLATEAU_FACTOR
    patience: int = PLATEAU_PATIENCE
    threshold: float = PLATEAU_THRESHOLD
    best: float = field(default=np.inf, init=False)
    stagnant: int = field(default=0, init=False)

    def step(self, val_loss: float) -> float:
        if val_loss < self.best - self.threshold:
            self.best = val_loss
            self.stagnant = 0
        else:
            self.stagnant += 1
            if self.stagnant >= self.patience:
                self.lr = max(self.lr * self.factor, self.min_lr)
                self.stagnant = 0
        return self.lr


@dataclass
class EarlyStopper:
    """Stop after `patience` epochs without a new best val accuracy."""

    patience: int = EARLY_STOP_PATIENCE
    best: float = field(default=-np.inf, init=False)
    best_epoch: int = field(default=-1, init=False)
    stagnant: int = field(default=0, init=False)

    def update(self, val_accuracy: float, epoch: int) -> bool:
        if val_accuracy > self.best:  # strict: ties keep the earlier epoch
            self.best = val_accuracy
            self.best_epoch = epoch
            self.stagnant = 0
        else:
            self.stagnant += 1
        return self.stagnant >= self.patience


@dataclass
class TrainReport:
    """One record per completed epoch plus the stopping outcome."""

    seed: int
    epochs: list = field(default_factory=list)
    lr_trace: list = field(default_factory=list)
    stopping_reasons: list = field(default_factory=list)
    best_epochs: list = field(default_factory=list)

    def add_epoch(self, **record):
        self.epochs.append(record)
        self.lr_trace.append(record["lr"])

    def to_json(self) -> str:
        return json.dumps(
            {
                "seed": self.seed,
                "epochs": self.epochs,
                "lr_trace": self.lr_trace,
                "stopping_reasons": self.stopping_reasons,
                "best_epochs": self.best_epochs,
            },
            sort_keys=True,
            indent=1,
        ) + "\n"


def _snapshot(graph):
    return ([p.value.copy() for p in graph.parameters()],
            [getattr(owner, attr).copy() for _, owner, attr in graph.named_buffers()])


def _restore(graph, snapshot):
    values, buffers = snapshot
    for p, v in zip(graph.parameters(), values):
        p.value = v.copy()
    for (_, owner, attr), v in zip(graph.named_buffers(), buffers):
        setattr(owner, attr, v.copy())


def _epoch_metrics(graph, x, y, weights, batch_size):
    """Eval-mode loss and accuracy metrics over a full array."""
    losses = []
    preds = []
    n = len(x)
    for start in range(0, n, batch_size):
        xb, yb = x[start:start + batch_size], y[start:start + batch_size]
        logits = graph.forward(xb, Context(train=False))
        loss, _ = weighted_cross_entropy(logits, yb, weights)
        losses.append(loss * len(xb))
        preds.append(np.argmax(logits, axis=1))
    report = metrics(confusion(y, np.concatenate(preds)))
    return float(np.sum(losses) / n), report


def run_stage(graph, train_x, train_y, val_x, val_y, stage: StageConfig, *,
              weights, seed: int, stage_name: str, report: TrainReport,
              batch_size: int = BATCH_SIZE) -> None:
    """Train one stage in place, restoring the best-val-accuracy epoch."""
    params = graph.parameters()
    adam = AdamState(params)
    schedule = PlateauSchedule(lr=stage.lr, min_lr=stage.min_lr)
    stopper = EarlyStopper()
    rng = np.random.default_rng(seed)
    best_values = _snapshot(graph)
    n = len(train_x)
    reason = "epoch budget exhausted"
    for epoch in range(stage.epochs):
        lr = schedule.lr
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            if len(batch) < 2:  # batchnorm needs >= 2 statistics samples
                continue
            graph.zero_grad()
            ctx = Context(train=True, rng=np.random.default_rng(rng.integers(2**63)))
            logits = graph.forward(train_x[batch], ctx)
            _, dlogits = weighted_cross_entropy(logits, train_y[batch], weights)
            graph.backward(dlogits)
            adam_step(params, adam, lr, stage.weight_decay)
        train_loss, train_report = _epoch_metrics(graph, train_x, train_y, weights, batch_size)
        val_loss, val_report = _epoch_metrics(graph, val_x, val_y, weights, batch_size)
        report.add_epoch(
            stage=stage_name,
            epoch=epoch,
            lr=lr,
            train_loss=train_loss,
            train_accuracy=train_report.accuracy,
            val_loss=val_loss,
            val_accuracy=val_report.accuracy,
            val_precision=val_report.macro_precision,
            val_recall=val_report.macro_recall,
            val_f1=val_report.macro_f1,
        )
        if val_report.accuracy > stopper.best:
            best_values = _snapshot(graph)
        if stopper.update(val_report.accuracy, epoch):
            reason = f"early stop after {stopper.patience} stagnant epochs"
            break
        schedule.step(val_loss)
    _restore(graph, best_values)
    report.stopping_reasons.append(f"{stage_name}: {reason}")
    report.best_epochs.append(stopper.best_epoch)


def run_protocol(graph, train_x, train_y, val_x, val_y, stages=DEFAULT_STAGES,
                 seed: int = 0, batch_size: int = BATCH_SIZE,
                 checkpoint_stem=None) -> TrainReport:
    """Run every stage in order; each resumes from the previous stage's best
    weights with fresh optimizer state. Returns the TrainReport."""
    if len(train_x) == 0:
        raise InvalidArgumentError("training split is empty")
    if len(val_x) == 0:
        raise InvalidArgumentError("validation split is empty")
    weights = class_weights(train_y)
    report = TrainReport(seed=seed)
    for i, stage in enumerate(stages):
        run_stage(graph, train_x, train_y, val_x, val_y, stage,
                  weights=weights, seed=seed + i, stage_name=f"stage{i + 1}",
                  report=report, batch_size=batch_size)
    if checkpoint_stem is not None:
        from .nn.checkpoint import save_checkpoint

        save_checkpoint(checkpoint_stem, graph, stage=f"stage{len(stages)}", seed=seed)
    return report
