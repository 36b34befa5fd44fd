"""Monotonic chunkwise attention (MoChA) and its adaptive-chunk variant (MAtChA).

Training-time functions map an expected monotonic distribution to the
chunkwise distribution ``beta``; decode-time functions run the online
scan and soft attention over the selected chunk.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import torch

from mocha_attention.attention import DecodeStep, scan_for_stop
from mocha_attention.scans import all_partial_products, all_partial_sums, as_real, linear_recurrence, movingsum

MATCHA_DENSE_MAX_T = 64
_SUM_FLOOR = 1e-300


@dataclass(frozen=True)
class ChunkConfig:
    w: int = 2

    def __post_init__(self):
        if self.w < 1:
            raise ValueError(f"chunk width must be >= 1, got {self.w}")


def _stable_exp(u: torch.Tensor) -> torch.Tensor:
    # any per-row shift cancels between numerator and denominator
    return torch.exp(u - u.max(dim=-1, keepdim=True).values.detach())


def mocha_beta_row(alpha_row, u, cfg: ChunkConfig) -> torch.Tensor:
    """Chunkwise distribution for a fixed window of width ``cfg.w``.

    ``beta = exp(u) * movingsum(alpha / movingsum(exp(u), w, 1), 1, w)``.
    With ``w == 1`` the input row is returned unchanged.
    """
    alpha = as_real(alpha_row)
    if cfg.w == 1:
        return alpha.clone()
    eu = _stable_exp(as_real(u))
    denom = movingsum(eu, cfg.w, 1).clamp_min(_SUM_FLOOR)
    return eu * movingsum(alpha / denom, 1, cfg.w)


def _matcha_dense(prev, p, eu):
    n = p.shape[-1]
    decay = torch.cat([torch.ones_like(p[..., :1]), 1.0 - p[..., :-1]], dim=-1)
    sums = all_partial_sums(eu).clamp_min(_SUM_FLOOR)
    # r[..., l, j]: recurrence along j for every chunk end l at once
    r = linear_recurrence(decay.unsqueeze(-2), (prev.unsqueeze(-1) / sums).transpose(-1, -2))
    r = r.transpose(-1, -2)
    # prod(1 - p[j..l-1]), which is 1 on the diagonal
    app = all_partial_products(1.0 - p)
    not_stopped = torch.cat([torch.ones_like(app[..., :1]), app[..., :-1]], dim=-1)
    idx = torch.arange(n)
    upper = idx[:, None] <= idx[None, :]
    terms = torch.where(upper, p.unsqueeze(-2) * not_stopped * r, torch.zeros_like(r))
    return eu * terms.sum(dim=-1)


def _matcha_by_column(prev, p, eu):
    # one chunk end l at a time: O(T) extra memory instead of O(T^2)
    n = p.shape[-1]
    decay = torch.cat([torch.ones_like(p[..., :1]), 1.0 - p[..., :-1]], dim=-1)
    beta = torch.zeros_like(eu)
    for l in range(n):
        head = slice(0, l + 1)
        chunk_sums = eu[..., head].flip(-1).cumsum(dim=-1).flip(-1).clamp_min(_SUM_FLOOR)
        r = linear_recurrence(decay[..., head], prev[..., head] / chunk_sums)
        keep = (1.0 - p[..., :l]).flip(-1).cumprod(dim=-1).flip(-1)
        not_stopped = torch.cat([keep, torch.ones_like(p[..., :1])], dim=-1)
        contrib = p[..., l:l + 1] * not_stopped * r
        beta = beta + torch.cat([contrib, torch.zeros_like(p[..., l + 1:])], dim=-1)
    return eu * beta


def matcha_beta_row(prev_alpha, p_row, u, dense: Optional[bool] = None) -> torch.Tensor:
    """Adaptive-chunk distribution: chunks span from the previous stop to the current one.

    The dense path materializes the ``T x T`` table of ``r`` values and is
    used up to ``T = 64`` unless ``dense`` says otherwise; longer rows are
    accumulated one chunk end at a time.
    """
    prev = as_real(prev_alpha)
    p = as_real(p_row)
    eu = _stable_exp(as_real(u))
    if dense is None:
        dense = p.shape[-1] <= MATCHA_DENSE_MAX_T
    if dense:
        return _matcha_dense(prev, p, eu)
    return _matcha_by_column(prev, p, eu)


def _chunk_context(memory, u_supplier, start: int, stop: int) -> DecodeStep:
    u = torch.tensor([float(u_supplier(k)) for k in range(start, stop + 1)], dtype=torch.float64)
    weights = torch.softmax(u, dim=0)
    context = weights @ memory[start:stop + 1]
    return DecodeStep(stop, context, start, weights)


def mocha_decode_step(
    memory,
    p_supplier: Callable[[int], float],
    u_supplier: Callable[[int], float],
    t_prev: int,
    cfg: ChunkConfig,
) -> DecodeStep:
    """Online MoChA step: stop like hard monotonic attention, then softmax over
    the ``w`` entries ending at the stop (clipped at the start of memory)."""
    memory = as_real(memory)
    stop = scan_for_stop(memory.shape[0], p_supplier, t_prev)
    if stop is None:
        return DecodeStep(None, memory.new_zeros(memory.shape[-1]))
    if cfg.w == 1:
        return DecodeStep(stop, memory[stop], stop, memory.new_ones(1))
    return _chunk_context(memory, u_supplier, max(0, stop - cfg.w + 1), stop)


def matcha_decode_step(
    memory,
    p_supplier: Callable[[int], float],
    u_supplier: Callable[[int], float],
    t_prev: int,
) -> DecodeStep:
    """Online MAtChA step: softmax over ``memory[t_prev : stop + 1]``."""
    memory = as_real(memory)
    stop = scan_for_stop(memory.shape[0], p_supplier, t_prev)
    if stop is None:
        return DecodeStep(None, memory.new_zeros(memory.shape[-1]))
    return _chunk_context(memory, u_supplier, t_prev, stop)
