"""Monte-Carlo renewal-cycle simulation of the status-updating node.

Each call splits ``n_cycles`` into fixed-size chunks. Chunk ``k`` runs an
independent realisation seeded with ``derive_seed(seed, k)``, simulates
``size_k + 1`` deliveries and discards the first peak as warm-up. Chunk sums
are folded in chunk order, so the result does not depend on how many worker
threads executed the chunks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

import numpy as np

from . import _kernel
from ._rng import derive_seed, make_state
from .errors import CycleOverflow, InvalidParam
from .model import (
    EmpiricalSc,
    ProbFb,
    SystemParams,
    WindowFb,
    validate,
)

__all__ = [
    "CycleRecord",
    "CycleTrace",
    "PeakAoiEstimate",
    "simulate",
    "simulate_parallel",
    "CHUNK_CYCLES",
    "DEFAULT_MAX_EVENTS",
    "default_workers",
]

CHUNK_CYCLES = 1 << 17
DEFAULT_MAX_EVENTS = 10**6
WORKERS_ENV = "PEAKAOI_WORKERS"

TRACE_COLUMNS = ("cycle_index", "Y", "S", "n_generations", "n_transmissions", "t_ext")


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise InvalidParam(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise InvalidParam(f"{WORKERS_ENV} must be >= 1, got {n}")
    return n


class CycleRecord(NamedTuple):
    """Measurements of one renewal cycle, i.e. one first successful delivery."""

    Y: float
    S: float
    n_generations: int
    n_transmissions: int
    t_ext: float


@dataclass(frozen=True)
class PeakAoiEstimate:
    mean: float
    stderr: float
    n_cycles: int
    seed: int
    mean_Y: float
    mean_S: float


@dataclass
class CycleTrace:
    """Column-wise per-cycle diagnostics (warm-up deliveries removed).

    Besides the :class:`CycleRecord` fields it carries ``i0`` (initial
    recharge), ``first_age`` and ``first_a`` (initial age and lifetime of the
    cycle's first generated update), ``last_age`` (initial age of the delivered
    update) and ``n_committed`` (updates that passed the age gate).
    """

    Y: np.ndarray
    S: np.ndarray
    t_ext: np.ndarray
    i0: np.ndarray
    first_age: np.ndarray
    first_a: np.ndarray
    last_age: np.ndarray
    n_generations: np.ndarray
    n_transmissions: np.ndarray
    n_committed: np.ndarray

    def __len__(self):
        return len(self.Y)

    def records(self) -> Iterator[CycleRecord]:
        for row in zip(self.Y, self.S, self.n_generations, self.n_transmissions, self.t_ext):
            yield CycleRecord(float(row[0]), float(row[1]), int(row[2]), int(row[3]), float(row[4]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for i, rec in enumerate(self.records()):
                fh.write(
                    f"{i},{rec.Y!r},{rec.S!r},{rec.n_generations},"
                    f"{rec.n_transmissions},{rec.t_ext!r}\n"
                )


class _ChunkResult(NamedTuple):
    n: int
    sum_peak: float
    sumsq_peak: float
    sum_Y: float
    sum_S: float
    fcols: Optional[np.ndarray]
    icols: Optional[np.ndarray]


def _policy_code(policy):
    if isinstance(policy, WindowFb):
        return _kernel.WINDOW, policy.B, 1.0
    if isinstance(policy, ProbFb):
        return _kernel.PROB, 1, policy.pTx
    return _kernel.THRESHOLD, 1, 1.0


def _sc_arrays(dist):
    if isinstance(dist, EmpiricalSc):
        return 1, np.ascontiguousarray(dist.samples), 0.0
    return 0, np.array([dist.m1, dist.m2]), dist.p1


def _chunk_sizes(n_cycles):
    full, rest = divmod(n_cycles, CHUNK_CYCLES)
    return [CHUNK_CYCLES] * full + ([rest] if rest else [])


def _run_chunk(args):
    (policy, params, dist, size, seed, index, max_events, keep) = args
    kind, B, pTx = _policy_code(policy)
    sc_kind, sc_vals, p1 = _sc_arrays(dist)
    state = make_state(derive_seed(seed, index))
    fcols, icols, done, status = _kernel.run_chunk(
        kind, policy.feedback, float(policy.W), B, pTx,
        params.lam, params.pe, params.D,
        sc_kind, sc_vals, p1, size + 1, state, max_events,
    )
    if status == _kernel.OVERFLOW:
        raise CycleOverflow(
            f"{policy.render()}: a cycle exceeded {max_events} events "
            f"(chunk {index}, after {done} deliveries)"
        )
    Y, S = fcols[0], fcols[1]
    peaks = S[:-1] + Y[1:]
    return _ChunkResult(
        n=size,
        sum_peak=float(np.sum(peaks)),
        sumsq_peak=float(np.sum(peaks * peaks)),
        sum_Y=float(np.sum(Y[1:])),
        sum_S=float(np.sum(S[:-1])),
        fcols=fcols[:, 1:] if keep else None,
        icols=icols[:, 1:] if keep else None,
    )


def simulate_parallel(policy, params: SystemParams, dist, n_cycles: int, seed: int,
                      n_workers: int = 1, *, max_events: int = DEFAULT_MAX_EVENTS,
                      return_trace: bool = False):
    """Estimate average peak AoI of ``policy`` from ``n_cycles`` renewal cycles.

    Returns a :class:`PeakAoiEstimate`, or ``(estimate, CycleTrace)`` when
    ``return_trace`` is set. Output is bit-identical for any ``n_workers``.
    """
    validate(params, dist, policy)
    if isinstance(n_cycles, bool) or int(n_cycles) != n_cycles or n_cycles < 1:
        raise InvalidParam(f"n_cycles must be a positive integer, got {n_cycles!r}")
    if isinstance(n_workers, bool) or int(n_workers) != n_workers or n_workers < 1:
        raise InvalidParam(f"n_workers must be a positive integer, got {n_workers!r}")
    if max_events < 1:
        raise InvalidParam(f"max_events must be >= 1, got {max_events}")
    n_cycles, n_workers, seed = int(n_cycles), int(n_workers), int(seed)

    jobs = [
        (policy, params, dist, size, seed, k, max_events, return_trace)
        for k, size in enumerate(_chunk_sizes(n_cycles))
    ]
    if n_workers == 1 or len(jobs) == 1:
        results = [_run_chunk(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=min(n_workers, len(jobs))) as pool:
            results = list(pool.map(_run_chunk, jobs))

    n = 0
    sum_peak = sumsq = sum_Y = sum_S = 0.0
    for res in results:
        n += res.n
        sum_peak += res.sum_peak
        sumsq += res.sumsq_peak
        sum_Y += res.sum_Y
        sum_S += res.sum_S
    mean = sum_peak / n
    if n > 1:
        var = max(sumsq - sum_peak * sum_peak / n, 0.0) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = math.inf
    estimate = PeakAoiEstimate(
        mean=mean, stderr=stderr, n_cycles=n, seed=seed,
        mean_Y=sum_Y / n, mean_S=sum_S / n,
    )
    if not return_trace:
        return estimate
    f = np.concatenate([r.fcols for r in results], axis=1)
    i = np.concatenate([r.icols for r in results], axis=1)
    trace = CycleTrace(
        Y=f[0], S=f[1], t_ext=f[2], i0=f[3], first_age=f[4], first_a=f[5],
        last_age=f[6], n_generations=i[0], n_transmissions=i[1], n_committed=i[2],
    )
    return estimate, trace


def simulate(policy, params: SystemParams, dist, n_cycles: int, seed: int, *,
             max_events: int = DEFAULT_MAX_EVENTS, return_trace: bool = False):
    """Single-worker :func:`simulate_parallel`."""
    return simulate_parallel(
        policy, params, dist, n_cycles, seed, 1,
        max_events=max_events, return_trace=return_trace,
    )
