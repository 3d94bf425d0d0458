"""Tally accumulation, deterministic reduction, and batch statistics.

Scoring writes per-particle contribution logs (exact zeros suppressed);
the reduction replays every entry into the batch sums in canonical order
(ascending particle index, then emission order).  That order is a pure
function of the physics, never of the execution schedule, which is what
makes results bit-identical across executors, in-flight caps, sorting
choices, and worker counts.

A ``fast`` reduction combines per-worker partial sums in worker order
instead; it is offered for throughput measurements only and is excluded
from the bit-equivalence contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import StatisticsError

SCORES = ("flux", "total_rate", "absorption_rate", "fission_rate",
          "nu_fission_rate")
N_SCORES = len(SCORES)


@dataclass(frozen=True)
class TallyLayout:
    """Dense (region, score) bin space for one pincell model.

    Regions 0..n_axial-1 are the fuel segments; region n_axial is the
    moderator.  One extra pseudo-bin at the end carries the collision
    k-effective contributions so the eigenvalue shares the deterministic
    reduction path.
    """

    n_axial: int

    @property
    def n_regions(self) -> int:
        return self.n_axial + 1

    @property
    def n_tally_bins(self) -> int:
        return self.n_regions * N_SCORES

    @property
    def keff_bin(self) -> int:
        return self.n_tally_bins

    @property
    def n_bins(self) -> int:
        return self.n_tally_bins + 1

    def bin_index(self, region: int, score: int) -> int:
        return region * N_SCORES + score

    def region_label(self, region: int) -> tuple[str, int | None]:
        if region < self.n_axial:
            return "fuel", region
        return "moderator", None


def reduce_batch(logs: list[tuple], n_bins: int,
                 order: str = "deterministic") -> np.ndarray:
    """Combine per-worker contribution logs into one batch-sum array.

    ``logs`` holds per-worker (gid, ord, bin, val) array quadruples in which
    each particle's entries appear in emission order (the transport kernels
    guarantee this; the ord column records the per-particle ordinal).
    Deterministic order replays every entry by ascending particle index and
    emission order; a stable sort on gid alone recovers exactly that
    canonical order.  Fast order replays each worker's log as-is, in worker
    order.
    """
    sums = np.zeros(n_bins, np.float64)
    if order == "deterministic":
        if len(logs) == 1:
            gid, _, binidx, vals = logs[0]
        else:
            gid = np.concatenate([lg[0] for lg in logs])
            binidx = np.concatenate([lg[2] for lg in logs])
            vals = np.concatenate([lg[3] for lg in logs])
        if gid.shape[0]:
            perm = np.argsort(gid, kind="stable")
            kernels.replay_into_bins(sums, binidx[perm],
                                     np.ascontiguousarray(vals[perm]))
    else:
        for _, _, binidx, vals in logs:
            kernels.replay_into_bins(sums, binidx, vals)
    return sums


def batch_statistics(batch_values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error over batches (n-1 formula), vectorized.

    ``batch_values`` has shape (n_batches, ...); needs at least 2 batches.
    """
    b = batch_values.shape[0]
    if b < 2:
        raise StatisticsError("need at least 2 active batches for statistics")
    mean = batch_values.sum(axis=0) / b
    sumsq = (batch_values * batch_values).sum(axis=0)
    var = (sumsq / b - mean * mean) / (b - 1)
    return mean, np.sqrt(np.maximum(var, 0.0))


def finalize(accum_sum: np.ndarray, accum_sumsq: np.ndarray, n_active: int):
    """Per-bin (mean, stderr) from running sums of normalized batch values."""
    if n_active < 2:
        raise StatisticsError("need at least 2 active batches for statistics")
    mean = accum_sum / n_active
    var = (accum_sumsq / n_active - mean * mean) / (n_active - 1)
    return mean, np.sqrt(np.maximum(var, 0.0))


@dataclass
class KeffSeries:
    """Per-batch collision-estimator k with statistics over active batches."""

    values: np.ndarray          # one k per batch, inactive first
    n_inactive: int

    @property
    def active_values(self) -> np.ndarray:
        return self.values[self.n_inactive:]

    @property
    def n_active(self) -> int:
        return self.values.shape[0] - self.n_inactive

    def statistics(self) -> tuple[float, float]:
        mean, err = batch_statistics(self.active_values)
        return float(mean), float(err)
