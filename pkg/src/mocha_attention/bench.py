"""Attention-only decoding speed benchmark.

Each cell times a full decode loop of ``U`` output steps over a random
memory of length ``T`` with random decoder states; no encoder or decoder
RNN runs. The loops are compiled with numba and use buffers allocated
before the timed region, so monotonic and chunkwise paths allocate
nothing while timed.

Monotonic stopping decisions come from a seeded schedule: the stop
positions for the ``U`` steps are sorted uniform draws over the memory,
so the cursor advances ``T/U`` entries per step on average. Energies are
still evaluated at every scanned entry and enter the decision.
"""

import time
from dataclasses import dataclass
from typing import Iterable, Optional

import numba
import numpy as np

DEFAULT_LENGTHS = tuple(range(10, 101, 10))
DEFAULT_MECHANISMS = (("soft", 0), ("monotonic", 1), ("mocha", 2), ("mocha", 4), ("mocha", 8))
_SCHEDULE_LOGIT = 1e6


@dataclass(frozen=True)
class BenchRecord:
    mechanism: str
    T: int
    U: int
    w: int
    mean_seconds: float
    trials: int
    dim: int
    seed: int
    stddev_seconds: float = 0.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.mean_seconds > 0:
            raise ValueError("mean_seconds must be positive")

    @property
    def label(self) -> str:
        if self.mechanism == "mocha":
            return f"mocha (w={self.w})"
        return self.mechanism


# -- Compiled decode loops -------------------------------------------------


@numba.njit(cache=True)
def _query(W_s, s, b, out):
    for a in range(W_s.shape[0]):
        z = b[a]
        for k in range(W_s.shape[1]):
            z += W_s[a, k] * s[k]
        out[a] = z


@numba.njit(cache=True)
def _energy(W_h, h, q, v):
    acc = 0.0
    for a in range(W_h.shape[0]):
        z = q[a]
        for k in range(W_h.shape[1]):
            z += W_h[a, k] * h[k]
        acc += v[a] * np.tanh(z)
    return acc


@numba.njit(cache=True)
def _weighted_context(H, start, stop, e, out):
    # softmax over e[0 : stop - start + 1] applied to H[start : stop + 1]
    n = stop - start + 1
    mx = e[0]
    for k in range(1, n):
        if e[k] > mx:
            mx = e[k]
    z = 0.0
    for k in range(n):
        e[k] = np.exp(e[k] - mx)
        z += e[k]
    for c in range(H.shape[1]):
        out[c] = 0.0
    for k in range(n):
        wk = e[k] / z
        for c in range(H.shape[1]):
            out[c] += wk * H[start + k, c]


@numba.njit(cache=True)
def soft_decode(H, S, W_h, W_s, b, v, q, e, contexts):
    for i in range(S.shape[0]):
        _query(W_s, S[i], b, q)
        for j in range(H.shape[0]):
            e[j] = _energy(W_h, H[j], q, v)
        _weighted_context(H, 0, H.shape[0] - 1, e, contexts[i])


@numba.njit(cache=True)
def chunk_decode(
    H, S, targets, w, adaptive,
    mW_h, mW_s, mb, mv_unit, g, r,
    cW_h, cW_s, cb, cv_unit, cg, cr,
    q, e, contexts, stops,
):
    """MoChA (``adaptive=False``, width ``w``) or MAtChA (``adaptive=True``) decoding.

    ``w == 1`` without ``adaptive`` is hard monotonic attention and never
    evaluates the chunk energy.
    """
    T = H.shape[0]
    t = 0
    for i in range(S.shape[0]):
        _query(mW_s, S[i], mb, q)
        stop = -1
        for j in range(t, T):
            energy = g * _energy(mW_h, H[j], q, mv_unit) + r
            logit = energy + (_SCHEDULE_LOGIT if j >= targets[i] else -_SCHEDULE_LOGIT)
            if logit >= 0.0:
                stop = j
                break
        stops[i] = stop
        if stop < 0:
            for c in range(H.shape[1]):
                contexts[i, c] = 0.0
            continue
        if adaptive:
            start = t
        else:
            start = max(0, stop - w + 1)
        t = stop
        if stop == start and not adaptive:
            for c in range(H.shape[1]):
                contexts[i, c] = H[stop, c]
            continue
        _query(cW_s, S[i], cb, q)
        for k in range(start, stop + 1):
            e[k - start] = cg * _energy(cW_h, H[k], q, cv_unit) + cr
        _weighted_context(H, start, stop, e, contexts[i])


# -- Inputs ---------------------------------------------------------------


@dataclass
class BenchInputs:
    H: np.ndarray
    S: np.ndarray
    targets: np.ndarray
    mono: tuple  # W_h, W_s, b, v/|v|, g, r
    chunk: tuple
    soft: tuple  # W_h, W_s, b, v


def make_inputs(T: int, U: int, dim: int, seed: int) -> BenchInputs:
    """Random memory, decoder states, energy weights and stop schedule for one cell."""
    rng = np.random.default_rng([seed, T, U, dim])

    def glorot(rows, cols):
        s = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-s, s, size=(rows, cols))

    def energy_params(normalized):
        W_h, W_s = glorot(dim, dim), glorot(dim, dim)
        b = np.zeros(dim)
        v = glorot(1, dim)[0]
        if not normalized:
            return W_h, W_s, b, v
        return W_h, W_s, b, v / np.linalg.norm(v), 1.0 / np.sqrt(dim), -4.0

    H = rng.standard_normal((T, dim))
    S = rng.standard_normal((U, dim))
    targets = np.sort(rng.integers(0, T, size=U))
    return BenchInputs(H, S, targets, energy_params(True), energy_params(True), energy_params(False))


class DecodeRunner:
    """Preallocates every buffer for one (mechanism, inputs) cell; ``run()`` is the timed call."""

    def __init__(self, mechanism: str, w: int, inputs: BenchInputs):
        if mechanism not in ("soft", "monotonic", "mocha", "matcha"):
            raise ValueError(f"unknown mechanism {mechanism!r}")
        self.mechanism = mechanism
        self.w = 1 if mechanism == "monotonic" else w
        self.inputs = inputs
        T, dim = inputs.H.shape
        U = inputs.S.shape[0]
        self.q = np.zeros(dim)
        self.e = np.zeros(T)
        self.contexts = np.zeros((U, dim))
        self.stops = np.zeros(U, dtype=np.int64)

    def run(self):
        x = self.inputs
        if self.mechanism == "soft":
            soft_decode(x.H, x.S, *x.soft, self.q, self.e, self.contexts)
        else:
            chunk_decode(
                x.H, x.S, x.targets, self.w, self.mechanism == "matcha",
                *x.mono, *x.chunk, self.q, self.e, self.contexts, self.stops,
            )


def warm_up():
    """Trigger compilation so it never lands in a timed region."""
    x = make_inputs(3, 3, 2, 0)
    for mech, w in (("soft", 0), ("mocha", 2), ("matcha", 0)):
        DecodeRunner(mech, w, x).run()


def time_cell(mechanism: str, w: int, T: int, U: int, dim: int, trials: int, seed: int) -> BenchRecord:
    runner = DecodeRunner(mechanism, w, make_inputs(T, U, dim, seed))
    runner.run()  # untimed warmup trial
    times = np.empty(trials)
    for k in range(trials):
        start = time.perf_counter()
        runner.run()
        times[k] = time.perf_counter() - start
    w_field = 0 if mechanism in ("soft", "matcha") else runner.w
    return BenchRecord(
        mechanism, T, U, w_field, float(times.mean()), trials, dim, seed, float(times.std())
    )


def run_speed_benchmark(
    dims: int = 256,
    lengths: Iterable[int] = DEFAULT_LENGTHS,
    mechanisms: Iterable[tuple] = DEFAULT_MECHANISMS,
    trials: int = 100,
    seed: int = 0,
    progress: Optional[callable] = None,
) -> list[BenchRecord]:
    """Time every (mechanism, T = U) cell; ``mechanisms`` holds ``(name, w)`` pairs."""
    lengths = list(lengths)
    if not lengths:
        raise ValueError("need at least one length")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    warm_up()
    records = []
    for name, w in mechanisms:
        for T in lengths:
            record = time_cell(name, w, T, T, dims, trials, seed)
            if progress is not None:
                progress(record)
            records.append(record)
    return records
