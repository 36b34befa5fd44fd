"""Teacher-forced training, evaluation and run-directory persistence."""

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import torch
from torch import nn

from mocha_attention.transducer.decode import greedy_transduce
from mocha_attention.transducer.model import ModelConfig, Transducer
from mocha_attention.transducer.tasks import IGNORE, TaskSpec, collate, make_dataset

logger = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-6


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    steps: int = 20000
    batch_size: int = 16
    learning_rate: float = 3e-3
    clip_norm: float = 1.0
    eval_every: int = 250
    probe_size: int = 256
    # stop once teacher-forced probe accuracy reaches this value
    target_accuracy: Optional[float] = None


@dataclass
class TrainResult:
    model: Transducer
    curve: list = field(default_factory=list)  # (step, loss, accuracy)
    steps_run: int = 0


def held_out(task: TaskSpec, num_samples: int, offset: int = 1_000_003) -> TaskSpec:
    return dataclasses.replace(task, num_samples=num_samples, seed=task.seed + offset)


def token_loss(model: Transducer, batch, noise_gen=None, training=True):
    logits = model(batch.x, batch.x_mask, batch.y_in, noise_gen, training)
    loss = nn.functional.cross_entropy(
        logits.reshape(-1, logits.shape[-1]), batch.y_out.reshape(-1), ignore_index=IGNORE
    )
    return loss, logits


@torch.no_grad()
def teacher_forced_accuracy(model: Transducer, pairs, batch_size: int = 256) -> float:
    """Fraction of target tokens (END included) predicted correctly under teacher forcing, noise off."""
    correct = total = 0
    for start in range(0, len(pairs), batch_size):
        batch = collate(pairs[start:start + batch_size])
        _, logits = token_loss(model, batch, training=False)
        keep = batch.y_out != IGNORE
        correct += int((logits.argmax(-1) == batch.y_out)[keep].sum())
        total += int(keep.sum())
    return correct / max(total, 1)


def sequence_accuracy(model: Transducer, pairs, max_extra: int = 4) -> float:
    """Fraction of free-running greedy outputs that exactly match the target."""
    hits = 0
    for source, target in pairs:
        out = greedy_transduce(model, source, max_len=len(target) + max_extra)
        hits += int(not out.truncated and out.tokens == target)
    return hits / max(len(pairs), 1)


def train(task: TaskSpec, config: ModelConfig, train_config: TrainConfig = TrainConfig()) -> TrainResult:
    """Adam on mean token cross-entropy with teacher forcing; deterministic given seeds."""
    torch.set_num_threads(1)
    data = make_dataset(task)
    probe = make_dataset(held_out(task, train_config.probe_size))
    model = Transducer(config)
    opt = torch.optim.Adam(
        model.parameters(), lr=train_config.learning_rate, betas=ADAM_BETAS, eps=ADAM_EPS
    )
    rng = np.random.default_rng(config.seed)
    noise_gen = torch.Generator().manual_seed(config.seed + 1)
    result = TrainResult(model)
    running = []
    logger.info(
        "training %s on %s: adam lr=%g betas=%s eps=%g clip=%g batch=%d",
        config.mechanism, task.kind, train_config.learning_rate, ADAM_BETAS, ADAM_EPS,
        train_config.clip_norm, train_config.batch_size,
    )
    for step in range(1, train_config.steps + 1):
        idx = rng.integers(0, len(data), size=train_config.batch_size)
        batch = collate([data[i] for i in idx])
        loss, _ = token_loss(model, batch, noise_gen, training=True)
        if not math.isfinite(loss.item()):
            raise TrainingDiverged(
                f"loss became {loss.item()} at step {step} ({config.mechanism}, {task.kind}, "
                f"lr={train_config.learning_rate})"
            )
        opt.zero_grad()
        loss.backward()
        nn.utils.clip_grad_norm_(model.parameters(), train_config.clip_norm)
        opt.step()
        running.append(loss.item())
        result.steps_run = step
        if step % train_config.eval_every == 0 or step == train_config.steps:
            acc = teacher_forced_accuracy(model, probe)
            result.curve.append((step, float(np.mean(running)), acc))
            logger.info("step %d loss %.4f acc %.4f", step, np.mean(running), acc)
            running = []
            if train_config.target_accuracy is not None and acc >= train_config.target_accuracy:
                break
    return result


# -- Run directories -----------------------------------------------------


def _flatten(prefix: str, obj) -> dict:
    return {f"{prefix}.{k}": v for k, v in dataclasses.asdict(obj).items()}


def save_run(run_dir, task: TaskSpec, config: ModelConfig, train_config: TrainConfig, result: TrainResult):
    """Write ``config.txt``, ``loss.csv`` and ``model.pt`` into ``run_dir``."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    entries = {**_flatten("task", task), **_flatten("model", config), **_flatten("train", train_config)}
    entries["train.adam_betas"] = ",".join(map(str, ADAM_BETAS))
    entries["train.adam_eps"] = ADAM_EPS
    entries["result.steps_run"] = result.steps_run
    with open(run_dir / "config.txt", "w", encoding="utf-8", newline="\n") as f:
        for key, value in entries.items():
            f.write(f"{key}={value}\n")
    with open(run_dir / "loss.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["step", "loss", "accuracy"])
        for step, loss, acc in result.curve:
            writer.writerow([step, repr(loss), repr(acc)])
    torch.save(result.model.state_dict(), run_dir / "model.pt")


def read_config(run_dir) -> dict:
    entries = {}
    for line in (Path(run_dir) / "config.txt").read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition("=")
        entries[key] = value
    return entries


def _build(cls, entries: dict, prefix: str):
    kwargs = {}
    for f in dataclasses.fields(cls):
        raw = entries.get(f"{prefix}.{f.name}")
        if raw is None:
            continue
        if raw == "None":
            kwargs[f.name] = None
        elif f.type in (int, "int"):
            kwargs[f.name] = int(raw)
        elif f.type in (float, "float") or "float" in str(f.type):
            kwargs[f.name] = float(raw)
        else:
            kwargs[f.name] = raw
    return cls(**kwargs)


def load_run(run_dir) -> tuple[TaskSpec, Transducer]:
    entries = read_config(run_dir)
    task = _build(TaskSpec, entries, "task")
    config = _build(ModelConfig, entries, "model")
    model = Transducer(config)
    model.load_state_dict(torch.load(Path(run_dir) / "model.pt", weights_only=True))
    return task, model
