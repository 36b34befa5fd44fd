"""Synthetic transduction tasks.

``copy`` has a strictly diagonal alignment. ``pair_swap`` swaps adjacent
pairs (``a b c d -> b a d c``), the smallest local reordering a fixed
chunk of width 2 can express and a single attended entry cannot.
"""

from dataclasses import dataclass

import numpy as np
import torch

START = 0
END = 1
FIRST_SYMBOL = 2
IGNORE = -100

TASKS = ("copy", "pair_swap")


@dataclass(frozen=True)
class TaskSpec:
    kind: str = "copy"
    min_len: int = 5
    max_len: int = 12
    vocab_size: int = 16
    num_samples: int = 10000
    seed: int = 0

    def __post_init__(self):
        if self.kind not in TASKS:
            raise ValueError(f"unknown task {self.kind!r}; expected one of {TASKS}")
        if not 1 <= self.min_len <= self.max_len:
            raise ValueError(f"bad length range [{self.min_len}, {self.max_len}]")
        if self.vocab_size <= FIRST_SYMBOL:
            raise ValueError("vocabulary must leave room for data symbols after START/END")
        if self.kind == "pair_swap" and not self.lengths():
            raise ValueError("pair_swap needs at least one even length in range")

    def lengths(self) -> list[int]:
        lengths = range(self.min_len, self.max_len + 1)
        if self.kind == "pair_swap":
            return [n for n in lengths if n % 2 == 0]
        return list(lengths)


def target_for(kind: str, source: list[int]) -> list[int]:
    if kind == "copy":
        return list(source)
    if len(source) % 2:
        raise ValueError("pair_swap needs an even-length source")
    out = []
    for a, b in zip(source[::2], source[1::2]):
        out += [b, a]
    return out


def make_dataset(task: TaskSpec) -> list[tuple[list[int], list[int]]]:
    """``num_samples`` (source, target) pairs; neither includes END."""
    rng = np.random.default_rng(task.seed)
    lengths = task.lengths()
    data = []
    for _ in range(task.num_samples):
        n = int(rng.choice(lengths))
        source = rng.integers(FIRST_SYMBOL, task.vocab_size, size=n).tolist()
        data.append((source, target_for(task.kind, source)))
    return data


@dataclass
class Batch:
    """Padded batch. The encoder input carries a trailing END entry."""

    x: torch.Tensor  # (B, T) int64
    x_mask: torch.Tensor  # (B, T) bool
    y_in: torch.Tensor  # (B, U) previous tokens, START first
    y_out: torch.Tensor  # (B, U) targets with END, IGNORE padding


def collate(pairs) -> Batch:
    xs = [src + [END] for src, _ in pairs]
    ys = [tgt + [END] for _, tgt in pairs]
    B, T, U = len(pairs), max(map(len, xs)), max(map(len, ys))
    x = torch.full((B, T), END, dtype=torch.long)
    x_mask = torch.zeros((B, T), dtype=torch.bool)
    y_in = torch.full((B, U), END, dtype=torch.long)
    y_out = torch.full((B, U), IGNORE, dtype=torch.long)
    for b, (src, tgt) in enumerate(zip(xs, ys)):
        x[b, :len(src)] = torch.tensor(src)
        x_mask[b, :len(src)] = True
        y_out[b, :len(tgt)] = torch.tensor(tgt)
        y_in[b, :len(tgt)] = torch.tensor([START] + tgt[:-1])
    return Batch(x, x_mask, y_in, y_out)
