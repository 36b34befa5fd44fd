"""Prefix and windowed scan primitives.

All functions operate along the last axis, so a leading batch shape is
allowed. Inputs are converted to float64 torch tensors; outputs are torch
tensors and stay differentiable.
"""

import torch

TINY = 1e-30


def as_real(x) -> torch.Tensor:
    """Convert to a float64 tensor without copying when already one."""
    if isinstance(x, torch.Tensor):
        return x if x.dtype == torch.float64 else x.to(torch.float64)
    return torch.as_tensor(x, dtype=torch.float64)


def cumsum_inclusive(x) -> torch.Tensor:
    """``[x1, x1 + x2, ...]``."""
    x = as_real(x)
    if x.shape[-1] == 0:
        return x.clone()
    return torch.cumsum(x, dim=-1)


def cumsum_exclusive(x) -> torch.Tensor:
    """``[0, x1, x1 + x2, ...]``; the last element never contributes."""
    x = as_real(x)
    if x.shape[-1] == 0:
        return x.clone()
    zero = torch.zeros_like(x[..., :1])
    return torch.cat([zero, torch.cumsum(x[..., :-1], dim=-1)], dim=-1)


def cumprod_exclusive(x) -> torch.Tensor:
    """``[1, x1, x1*x2, ...]``; the last element never contributes."""
    x = as_real(x)
    if x.shape[-1] == 0:
        return x.clone()
    one = torch.ones_like(x[..., :1])
    return torch.cat([one, torch.cumprod(x[..., :-1], dim=-1)], dim=-1)


def _shift_right(x: torch.Tensor, k: int, fill: float) -> torch.Tensor:
    pad = torch.full_like(x[..., :k], fill)
    return torch.cat([pad, x[..., :-k]], dim=-1)


def linear_recurrence(a, b) -> torch.Tensor:
    """Solve ``q[n] = a[n] * q[n-1] + b[n]`` with ``q[-1] = 0``.

    Uses a log-depth (Hillis-Steele) scan over affine maps. Unlike the
    cumprod/cumsum closed form it never divides, so it stays exact when the
    running product of ``a`` underflows.
    """
    a, b = torch.broadcast_tensors(as_real(a), as_real(b))
    n = a.shape[-1]
    k = 1
    while k < n:
        a_prev = _shift_right(a, k, 1.0)
        b_prev = _shift_right(b, k, 0.0)
        b = a * b_prev + b
        a = a * a_prev
        k *= 2
    return b


def movingsum(x, back: int, forward: int) -> torch.Tensor:
    """Windowed sum ``out[n] = sum(x[n-back+1 : n+forward])`` with zero padding.

    Computed by summing shifted copies, which is the same as convolving with
    a length ``back + forward - 1`` box and truncating. Offsets that fall
    completely outside the sequence are skipped.
    """
    if back < 1 or forward < 1:
        raise ValueError(f"window sizes must be >= 1, got back={back}, forward={forward}")
    x = as_real(x)
    n = x.shape[-1]
    out = torch.zeros_like(x)
    for offset in range(-(back - 1), forward):
        if abs(offset) >= n:
            continue
        if offset == 0:
            out = out + x
        elif offset > 0:
            # out[n] += x[n + offset]
            shifted = torch.cat([x[..., offset:], torch.zeros_like(x[..., :offset])], dim=-1)
            out = out + shifted
        else:
            out = out + _shift_right(x, -offset, 0.0)
    return out


def _upper_mask(n: int, device=None) -> torch.Tensor:
    idx = torch.arange(n, device=device)
    return idx[:, None] <= idx[None, :]


def all_partial_sums(x) -> torch.Tensor:
    """Matrix ``S[..., j, l] = sum(x[j..l])`` for ``j <= l`` and 1 below the diagonal."""
    x = as_real(x)
    n = x.shape[-1]
    mask = _upper_mask(n, x.device)
    # running sum of each masked row; differencing one cumsum would cancel
    # badly when a short chunk of small terms follows large ones
    rows = torch.where(mask, x[..., None, :].expand(*x.shape[:-1], n, n), torch.zeros(()))
    return torch.where(mask, torch.cumsum(rows, dim=-1), torch.ones_like(rows))


def _segmented_partial_products(x: torch.Tensor) -> torch.Tensor:
    # row j holds [1, ..., 1, x_j, x_{j+1}, ...]; a running product along l
    # gives prod(x[j..l]) with no division.
    n = x.shape[-1]
    mask = _upper_mask(n, x.device)
    rows = x[..., None, :].expand(*x.shape[:-1], n, n)
    rows = torch.where(mask, rows, torch.ones_like(rows))
    return torch.where(mask, torch.cumprod(rows, dim=-1), torch.ones_like(rows))


def all_partial_products(x) -> torch.Tensor:
    """Matrix ``P[..., j, l] = prod(x[j..l])`` for ``j <= l`` and 1 below the diagonal.

    The fast path divides cumulative products. If any ``|x| < 1e-30`` (a
    saturated ``1 - p`` term) or the running product underflows, it falls
    back to a segmented direct product.
    """
    x = as_real(x)
    n = x.shape[-1]
    if n == 0:
        return x.new_zeros(*x.shape, 0)
    inclusive = torch.cumprod(x, dim=-1)
    if bool((x.abs() < TINY).any()) or bool((inclusive.abs() < TINY).any()):
        return _segmented_partial_products(x)
    exclusive = cumprod_exclusive(x)
    products = inclusive[..., None, :] / exclusive[..., :, None]
    return torch.where(_upper_mask(n, x.device), products, torch.ones_like(products))
