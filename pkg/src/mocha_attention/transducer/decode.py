"""Free-running greedy decoding with the mechanisms' online paths."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch

from mocha_attention.attention import initial_alpha, monotonic_decode_step, soft_attention
from mocha_attention.chunkwise import ChunkConfig, matcha_decode_step, mocha_decode_step
from mocha_attention.transducer.model import Transducer
from mocha_attention.transducer.tasks import END, START


@dataclass
class AlignmentTrace:
    """Per-output-step attention weights over the memory (rows) and stop indices."""

    weights: np.ndarray
    stops: list = field(default_factory=list)


@dataclass
class Transduction:
    tokens: list[int]
    trace: AlignmentTrace
    truncated: bool


def _energy_supplier(energy, state, memory, counter: Optional[list] = None):
    def supply(j: int) -> float:
        if counter is not None:
            counter.append(j)
        return float(energy(state, memory[j:j + 1])[0])

    return supply


@torch.no_grad()
def greedy_transduce(
    model: Transducer,
    source: list[int],
    max_len: int = 64,
    expected: bool = False,
    touched: Optional[list] = None,
) -> Transduction:
    """Greedy argmax decoding until END or ``max_len`` tokens.

    ``expected=True`` feeds the decoder the training-time expected context
    (noise off) instead of the hard online decision. Memory indices passed to
    the energy functions are appended to ``touched`` when given.
    """
    cfg = model.config
    x = torch.tensor([list(source) + [END]], dtype=torch.long)
    memory = model.encode(x)[0]
    T = memory.shape[0]
    state = model.initial_state(1)[0]
    token = START
    t_prev = 0
    prev_alpha = initial_alpha(T, (1,))
    mask = torch.ones(1, T, dtype=torch.bool)
    keys = model.memory_keys(memory.unsqueeze(0)) if expected else None
    tokens, rows, stops = [], [], []
    truncated = True
    for _ in range(max_len):
        row = torch.zeros(T, dtype=torch.float64)
        stop = None
        if cfg.mechanism == "soft":
            alpha, context = soft_attention(model.energy(state, memory), memory)
            row = alpha
        elif expected:
            weights, prev_alpha, context = model.expected_attention(
                state.unsqueeze(0), memory.unsqueeze(0), keys, mask, prev_alpha, None, False
            )
            row, context = weights[0], context[0]
        else:
            p_energy = _energy_supplier(model.energy, state, memory, touched)

            def p_supplier(j):
                return 1.0 / (1.0 + np.exp(-p_energy(j)))

            if model.chunk_energy is None:
                step = monotonic_decode_step(memory, p_supplier, t_prev)
            else:
                u_supplier = _energy_supplier(model.chunk_energy, state, memory, touched)
                if cfg.mechanism == "mocha":
                    step = mocha_decode_step(memory, p_supplier, u_supplier, t_prev, ChunkConfig(cfg.width))
                else:
                    step = matcha_decode_step(memory, p_supplier, u_supplier, t_prev)
            context = step.context
            stop = step.stop
            if stop is not None:
                t_prev = stop
                row[step.chunk_start:stop + 1] = step.chunk_weights
        state, logits = model.decode_step(
            torch.tensor([token]), state.unsqueeze(0), context.unsqueeze(0)
        )
        state = state[0]
        token = int(logits[0].argmax())
        rows.append(row.numpy())
        stops.append(stop)
        if token == END:
            truncated = False
            break
        tokens.append(token)
    weights = np.stack(rows) if rows else np.zeros((0, T))
    return Transduction(tokens, AlignmentTrace(weights, stops), truncated)
