"""Small GRU encoder-decoder with interchangeable attention."""

import math
from dataclasses import asdict, dataclass
from typing import Optional

import torch
from torch import nn

from mocha_attention.attention import (
    AdditiveEnergyParams,
    NoiseConfig,
    NormalizedEnergyParams,
    additive_energy,
    initial_alpha,
    monotonic_alpha_row,
    normalized_energy,
    project_memory,
    selection_probabilities,
    soft_attention,
)
from mocha_attention.chunkwise import ChunkConfig, matcha_beta_row, mocha_beta_row

MECHANISMS = ("soft", "monotonic", "mocha", "matcha")


@dataclass(frozen=True)
class ModelConfig:
    mechanism: str = "soft"
    chunk_size: int = 2
    d_h: int = 32
    d_s: int = 32
    d: int = 16
    vocab_size: int = 16
    sigma: float = 1.0
    r_init: float = -1.0
    seed: int = 0

    def __post_init__(self):
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}; expected one of {MECHANISMS}")
        if min(self.d_h, self.d_s, self.d, self.vocab_size) < 1:
            raise ValueError("dimensions must be positive")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @property
    def width(self) -> int:
        """Chunk width used by MoChA; hard monotonic attention is width 1."""
        return 1 if self.mechanism == "monotonic" else self.chunk_size

    def to_dict(self) -> dict:
        return asdict(self)


class Energy(nn.Module):
    """Learnable additive energy, optionally weight-normalized with gain and offset."""

    def __init__(self, d, d_h, d_s, normalized: bool, r_init: float, generator):
        super().__init__()
        init = AdditiveEnergyParams.init(d, d_h, d_s, generator)
        self.W_h = nn.Parameter(init.W_h)
        self.W_s = nn.Parameter(init.W_s)
        self.b = nn.Parameter(init.b)
        self.v = nn.Parameter(init.v)
        self.normalized = normalized
        if normalized:
            self.g = nn.Parameter(torch.tensor(1.0 / math.sqrt(d), dtype=torch.float64))
            self.r = nn.Parameter(torch.tensor(float(r_init), dtype=torch.float64))

    def base(self) -> AdditiveEnergyParams:
        return AdditiveEnergyParams(self.W_h, self.W_s, self.b, self.v)

    def keys(self, memory):
        return project_memory(self.base(), memory)

    def forward(self, query, memory=None, keys=None):
        if self.normalized:
            params = NormalizedEnergyParams(self.base(), self.g, self.r)
            return normalized_energy(params, query, memory, keys)
        return additive_energy(self.base(), query, memory, keys)


class Transducer(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        c = config
        with torch.random.fork_rng():
            torch.manual_seed(c.seed)
            gen = torch.Generator().manual_seed(c.seed)
            self.src_embed = nn.Embedding(c.vocab_size, c.d_h)
            self.encoder = nn.GRU(c.d_h, c.d_h, batch_first=True)
            self.tgt_embed = nn.Embedding(c.vocab_size, c.d_s)
            self.cell = nn.GRUCell(c.d_s + c.d_h, c.d_s)
            self.out = nn.Linear(c.d_s + c.d_h, c.vocab_size)
            if c.mechanism == "soft":
                self.energy = Energy(c.d, c.d_h, c.d_s, False, 0.0, gen)
            else:
                self.energy = Energy(c.d, c.d_h, c.d_s, True, c.r_init, gen)
            if c.mechanism in ("mocha", "matcha") and not (c.mechanism == "mocha" and c.width == 1):
                self.chunk_energy = Energy(c.d, c.d_h, c.d_s, True, 0.0, gen)
            else:
                self.chunk_energy = None
        self.double()

    # -- Building blocks -------------------------------------------------

    def encode(self, x: torch.Tensor) -> torch.Tensor:
        """Token ids ``(B, T)`` -> memory ``(B, T, d_h)``; strictly left to right."""
        if x.numel() and (int(x.min()) < 0 or int(x.max()) >= self.config.vocab_size):
            raise ValueError(f"token ids must lie in [0, {self.config.vocab_size})")
        memory, _ = self.encoder(self.src_embed(x))
        return memory

    def initial_state(self, batch: int) -> torch.Tensor:
        return torch.zeros(batch, self.config.d_s, dtype=torch.float64)

    def decode_step(self, prev_token, prev_state, context):
        """One decoder update; returns ``(state, logits)``."""
        state = self.cell(torch.cat([self.tgt_embed(prev_token), context], dim=-1), prev_state)
        logits = self.out(torch.cat([state, context], dim=-1))
        return state, logits

    # -- Training-time attention ----------------------------------------

    def expected_attention(self, state, memory, keys, mask, prev_alpha, noise_gen, training):
        """Expected attention row and context for one output step.

        Returns ``(weights, next_prev_alpha, context)``; ``weights`` is the
        distribution the context is taken under.
        """
        c = self.config
        e = self.energy(state, keys=keys["energy"])
        if c.mechanism == "soft":
            alpha, context = soft_attention(e, memory, mask)
            return alpha, prev_alpha, context
        noise = NoiseConfig(c.sigma if training else 0.0)
        p = selection_probabilities(e, noise, training, noise_gen) * mask
        alpha = monotonic_alpha_row(p, prev_alpha) * mask
        if self.chunk_energy is None:
            weights = alpha
        else:
            u = self.chunk_energy(state, keys=keys["chunk"])
            if c.mechanism == "mocha":
                weights = mocha_beta_row(alpha, u, ChunkConfig(c.width))
            else:
                weights = matcha_beta_row(prev_alpha, p, u)
        context = (weights.unsqueeze(-1) * memory).sum(dim=-2)
        return weights, alpha, context

    def memory_keys(self, memory):
        keys = {"energy": self.energy.keys(memory)}
        if self.chunk_energy is not None:
            keys["chunk"] = self.chunk_energy.keys(memory)
        return keys

    def forward(self, x, x_mask, y_in, noise_gen: Optional[torch.Generator] = None, training=True):
        """Teacher-forced logits ``(B, U, V)``."""
        memory = self.encode(x)
        keys = self.memory_keys(memory)
        B, T = x.shape
        state = self.initial_state(B)
        prev_alpha = initial_alpha(T, (B,))
        logits = []
        for i in range(y_in.shape[1]):
            _, prev_alpha, context = self.expected_attention(
                state, memory, keys, x_mask, prev_alpha, noise_gen, training
            )
            state, step_logits = self.decode_step(y_in[:, i], state, context)
            logits.append(step_logits)
        return torch.stack(logits, dim=1)
