"""Energy functions, soft attention and hard monotonic attention.

Indices are 0-based throughout. Memory tensors have shape ``(..., T, d_h)``
and queries ``(..., d_s)``; energy and attention rows are ``(..., T)``.
"""

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import torch

from mocha_attention.scans import as_real, cumprod_exclusive, cumsum_inclusive, linear_recurrence

P_EPS = 1e-12
DENOM_FLOOR = 1e-10


@dataclass(frozen=True)
class AdditiveEnergyParams:
    """Weights of ``v . tanh(W_h h + W_s s + b)``."""

    W_h: torch.Tensor
    W_s: torch.Tensor
    b: torch.Tensor
    v: torch.Tensor

    def __post_init__(self):
        for name in ("W_h", "W_s", "b", "v"):
            object.__setattr__(self, name, as_real(getattr(self, name)))
        d = self.v.shape[-1]
        if self.W_h.dim() != 2 or self.W_s.dim() != 2:
            raise ValueError("W_h and W_s must be matrices")
        if self.W_h.shape[0] != d or self.W_s.shape[0] != d or self.b.shape != (d,):
            raise ValueError(
                f"inconsistent energy shapes: W_h {tuple(self.W_h.shape)}, "
                f"W_s {tuple(self.W_s.shape)}, b {tuple(self.b.shape)}, v {tuple(self.v.shape)}"
            )

    @property
    def d(self) -> int:
        return self.v.shape[-1]

    @classmethod
    def init(cls, d: int, d_h: int, d_s: int, generator: Optional[torch.Generator] = None):
        """Glorot-uniform weights, zero bias."""

        def glorot(rows, cols):
            s = math.sqrt(6.0 / (rows + cols))
            return (torch.rand(rows, cols, generator=generator, dtype=torch.float64) * 2 - 1) * s

        return cls(
            W_h=glorot(d, d_h),
            W_s=glorot(d, d_s),
            b=torch.zeros(d, dtype=torch.float64),
            v=glorot(1, d)[0],
        )


@dataclass(frozen=True)
class NormalizedEnergyParams:
    """Weight-normalized energy ``g * (v/|v|) . tanh(...) + r``."""

    base: AdditiveEnergyParams
    g: torch.Tensor
    r: torch.Tensor

    def __post_init__(self):
        object.__setattr__(self, "g", as_real(self.g))
        object.__setattr__(self, "r", as_real(self.r))

    @classmethod
    def init(
        cls,
        d: int,
        d_h: int,
        d_s: int,
        r: float = -4.0,
        generator: Optional[torch.Generator] = None,
    ):
        return cls(
            base=AdditiveEnergyParams.init(d, d_h, d_s, generator),
            g=torch.tensor(1.0 / math.sqrt(d), dtype=torch.float64),
            r=torch.tensor(float(r), dtype=torch.float64),
        )


@dataclass(frozen=True)
class NoiseConfig:
    """Pre-sigmoid Gaussian noise; ``sigma=0`` makes training deterministic."""

    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be nonnegative, got {self.sigma}")

    def generator(self) -> torch.Generator:
        return torch.Generator().manual_seed(self.seed)


def project_memory(params: AdditiveEnergyParams, memory) -> torch.Tensor:
    """``W_h h_j`` for every entry; reusable across output steps."""
    memory = as_real(memory)
    if memory.shape[-1] != params.W_h.shape[1]:
        raise ValueError(
            f"memory feature size {memory.shape[-1]} does not match W_h columns {params.W_h.shape[1]}"
        )
    return memory @ params.W_h.T


def _hidden(params: AdditiveEnergyParams, query, memory, keys) -> torch.Tensor:
    query = as_real(query)
    if query.shape[-1] != params.W_s.shape[1]:
        raise ValueError(
            f"query size {query.shape[-1]} does not match W_s columns {params.W_s.shape[1]}"
        )
    if keys is None:
        keys = project_memory(params, memory)
    q = query @ params.W_s.T + params.b
    return torch.tanh(keys + q.unsqueeze(-2))


def additive_energy(params: AdditiveEnergyParams, query, memory, keys=None) -> torch.Tensor:
    """``e_j = v . tanh(W_h h_j + W_s s + b)``; ``keys`` may carry a cached ``project_memory``."""
    return _hidden(params, query, memory, keys) @ params.v


def normalized_energy(params: NormalizedEnergyParams, query, memory, keys=None) -> torch.Tensor:
    v = params.base.v
    norm = torch.linalg.vector_norm(v)
    if not bool(norm.detach() > 0):
        raise ValueError("normalized energy needs a nonzero v")
    return params.g * (_hidden(params.base, query, memory, keys) @ (v / norm)) + params.r


def soft_attention(energies, memory, mask=None):
    """Softmax over the memory and the expected context.

    ``mask`` (bool, same shape as ``energies``) excludes padded entries.
    Returns ``(alpha, context)``.
    """
    energies = as_real(energies)
    memory = as_real(memory)
    if mask is not None:
        energies = energies.masked_fill(~mask, -math.inf)
    shifted = energies - energies.max(dim=-1, keepdim=True).values.detach()
    weights = torch.exp(shifted)
    alpha = weights / weights.sum(dim=-1, keepdim=True)
    context = (alpha.unsqueeze(-1) * memory).sum(dim=-2)
    return alpha, context


def selection_probabilities(energies, noise: NoiseConfig, training: bool, generator=None):
    """``sigmoid(e + eps)`` clamped into ``[1e-12, 1 - 1e-12]``.

    ``eps ~ N(0, sigma^2)`` is only drawn when ``training``. Pass a
    ``generator`` to continue a stream across calls; otherwise one is seeded
    from ``noise.seed``.
    """
    energies = as_real(energies)
    if training and noise.sigma > 0:
        gen = generator if generator is not None else noise.generator()
        eps = torch.randn(energies.shape, generator=gen, dtype=torch.float64) * noise.sigma
        energies = energies + eps
    return torch.sigmoid(energies).clamp(P_EPS, 1.0 - P_EPS)


def initial_alpha(T: int, batch_shape=()) -> torch.Tensor:
    """One-hot on the first memory entry, matching ``t_0 = 0`` at decode time."""
    alpha = torch.zeros(*batch_shape, T, dtype=torch.float64)
    alpha[..., 0] = 1.0
    return alpha


def monotonic_alpha_row(p_row, prev_alpha, method: str = "scan") -> torch.Tensor:
    """Expected hard-monotonic attention for one output step.

    ``method="scan"`` solves ``q[j] = (1 - p[j-1]) q[j-1] + prev_alpha[j]``
    with a division-free associative scan. ``method="closed_form"`` uses
    ``cumprod(1 - p) * cumsum(prev_alpha / cumprod(1 - p))`` with the
    denominator floored at 1e-10; it loses accuracy once the running
    product of ``1 - p`` drops below that floor.

    The scan takes ``p`` in ``[0, 1]`` as given, so hard 0/1 decisions are
    reproduced exactly; only the closed form clamps ``p`` first.
    """
    p = as_real(p_row)
    prev = as_real(prev_alpha)
    if method == "scan":
        decay = torch.cat([torch.ones_like(p[..., :1]), 1.0 - p[..., :-1]], dim=-1)
        q = linear_recurrence(decay, prev)
    elif method == "closed_form":
        p = p.clamp(P_EPS, 1.0 - P_EPS)
        cp = cumprod_exclusive(1.0 - p)
        q = cp * cumsum_inclusive(prev / cp.clamp_min(DENOM_FLOOR))
    else:
        raise ValueError(f"unknown method {method!r}")
    return p * q


class DecodeStep(NamedTuple):
    """Result of one online attention step.

    ``stop`` is ``None`` when the scan ran off the end of the memory. The
    chunk is ``memory[chunk_start : stop + 1]`` weighted by ``chunk_weights``.
    """

    stop: Optional[int]
    context: torch.Tensor
    chunk_start: Optional[int] = None
    chunk_weights: Optional[torch.Tensor] = None


def scan_for_stop(
    T: int,
    p_supplier: Callable[[int], float],
    t_prev: int,
    stochastic: bool = False,
    generator: Optional[torch.Generator] = None,
) -> Optional[int]:
    """First ``j >= t_prev`` with ``p_j >= 0.5`` (or a Bernoulli draw when stochastic).

    ``p_supplier`` is only called for indices up to the returned stop.
    """
    if not 0 <= t_prev < T:
        raise ValueError(f"t_prev={t_prev} outside memory of length {T}")
    for j in range(t_prev, T):
        p = float(p_supplier(j))
        if stochastic:
            if float(torch.rand((), generator=generator, dtype=torch.float64)) < p:
                return j
        elif p >= 0.5:
            return j
    return None


def monotonic_decode_step(
    memory,
    p_supplier: Callable[[int], float],
    t_prev: int = 0,
    stochastic: bool = False,
    generator: Optional[torch.Generator] = None,
) -> DecodeStep:
    """Hard monotonic attention at test time: attend to the stop entry itself."""
    memory = as_real(memory)
    stop = scan_for_stop(memory.shape[0], p_supplier, t_prev, stochastic, generator)
    if stop is None:
        return DecodeStep(None, memory.new_zeros(memory.shape[-1]))
    return DecodeStep(stop, memory[stop], stop, memory.new_ones(1))
