"""Transport-level types and particle operations, plus the two executors.

``run_history`` transports each particle birth to death; ``run_event``
schedules lookup/advance/collision kernels over queues with an in-flight
cap.  Both are thin entries into the replicated engine (replication.py) and
produce bit-identical results under deterministic reduction.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels, prng
from .errors import ConfigurationError
from .tally import KeffSeries, TallyLayout

MODES = ("history", "event")
TALLY_MODES = ("fused", "naive")
ACCELS = ("binary", "double_index", "unionized")
REDUCTIONS = ("deterministic", "fast")


@dataclass
class RunConfig:
    """Every knob of a run; validated before the engine starts."""

    particles_per_batch: int = 1000
    inactive_batches: int = 2
    active_batches: int = 5
    mode: str = "event"
    sort_enabled: bool = True
    sort_every_n: int = 1
    max_in_flight: int = 10000
    tally_mode: str = "fused"
    accel: str = "binary"
    workers: int = 1
    seed: int = 42
    reduction: str = "deterministic"
    alpha_scatter: float = 0.5
    fission_temperature: float = 1.3e6
    # test hook: xor one particle's stream to trip the reproducibility check
    perturb_particle: int = -1

    @property
    def n_batches(self) -> int:
        return self.inactive_batches + self.active_batches

    def validate(self) -> None:
        if self.particles_per_batch < 1:
            raise ConfigurationError("particles must be >= 1")
        if self.max_in_flight < 1:
            raise ConfigurationError("max_in_flight must be >= 1")
        if self.inactive_batches < 0 or self.active_batches < 0 \
                or self.n_batches < 1:
            raise ConfigurationError("need at least one batch")
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}")
        if self.tally_mode not in TALLY_MODES:
            raise ConfigurationError(f"unknown tally_mode {self.tally_mode!r}")
        if self.accel not in ACCELS:
            raise ConfigurationError(f"unknown accel {self.accel!r}")
        if self.reduction not in REDUCTIONS:
            raise ConfigurationError(f"unknown reduction {self.reduction!r}")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")
        if self.workers > self.particles_per_batch:
            raise ConfigurationError(
                "workers cannot exceed particles per batch")
        if self.sort_every_n < 1:
            raise ConfigurationError("sort_every_n must be >= 1")
        if not (0.0 < self.alpha_scatter < 1.0):
            raise ConfigurationError("alpha_scatter must lie in (0, 1)")
        if self.fission_temperature <= 0.0:
            raise ConfigurationError("fission_temperature must be positive")
        slots = self.n_batches * self.particles_per_batch
        if slots * prng.STRIDE >= prng.AUX_STREAM_OFFSET:
            raise ConfigurationError(
                "run too large for the particle stream layout")

    def echo(self) -> dict:
        return {
            "particles": self.particles_per_batch,
            "inactive": self.inactive_batches,
            "active": self.active_batches,
            "mode": self.mode,
            "sort": self.sort_enabled,
            "sort_every_n": self.sort_every_n,
            "max_in_flight": self.max_in_flight,
            "tally_mode": self.tally_mode,
            "accel": self.accel,
            "workers": self.workers,
            "seed": self.seed,
            "reduction": self.reduction,
            "alpha_scatter": self.alpha_scatter,
            "fission_temperature": self.fission_temperature,
        }


@dataclass
class FissionBank:
    """Next-generation source sites in canonical (parent, ordinal) order."""

    parent: np.ndarray
    ordinal: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray
    energy: np.ndarray

    def __len__(self) -> int:
        return self.parent.shape[0]

    def tobytes(self) -> bytes:
        return b"".join(a.tobytes() for a in
                        (self.parent, self.ordinal, self.x, self.y, self.z,
                         self.dx, self.dy, self.dz, self.energy))


@dataclass
class RunResult:
    """Everything a run produces apart from files on disk."""

    keff: KeffSeries
    k_mean: float | None
    k_stderr: float | None
    tally_mean: np.ndarray | None
    tally_stderr: np.ndarray | None
    batch_sums: np.ndarray           # raw bin sums per batch (keff bin last)
    layout: TallyLayout
    bank: FissionBank                # final batch's merged bank
    timings: dict[str, float]
    inactive_wall: float
    active_wall: float
    inactive_rate: float | None
    active_rate: float | None
    counters: dict[str, int]
    config: dict
    library_fingerprint: str
    geometry_fingerprint: str

    def physics_fingerprint(self) -> str:
        """Hash of every output that must be schedule-independent."""
        h = hashlib.sha256()
        h.update(self.keff.values.tobytes())
        h.update(self.batch_sums.tobytes())
        h.update(self.bank.tobytes())
        return h.hexdigest()


# ======================================================================================
# Particle-level operations (public wrappers over the compiled kernels)
# ======================================================================================


def sample_isotropic(state: int) -> tuple[tuple[float, float, float], int]:
    """Isotropic unit direction from two draws; returns (direction, state)."""
    u1, state = prng.next_uniform(state)
    u2, state = prng.next_uniform(state)
    return kernels.isotropic_from_u(u1, u2), state


def sample_collision_distance(sigma_t: float, state: int) -> tuple[float, int]:
    """Free-flight distance -ln(1-u)/sigma_t; sigma_t must be positive."""
    if sigma_t <= 0.0:
        from .errors import PhysicsError
        raise PhysicsError(f"sigma_t must be positive (got {sigma_t})")
    u, state = prng.next_uniform(state)
    return float(-np.log(1.0 - u) / sigma_t), state


def sort_lookup_queue(queue: np.ndarray, material_ids: np.ndarray,
                      energies: np.ndarray) -> np.ndarray:
    """Stable sort of a lookup queue by (material id, energy ascending)."""
    out = np.array(queue, np.int32, copy=True)
    if out.shape[0] > 1:
        kernels.sort_queue(out, out.shape[0],
                           np.asarray(material_ids, np.int32),
                           np.asarray(energies, np.float64))
    return out


def systematic_resample_indices(n_bank: int, target: int, u: float) -> np.ndarray:
    """Bank indices selected by systematic sampling with a single uniform.

    floor((i + u) * n_bank / target) for i in 0..target-1 when the bank is
    large enough; otherwise cycle through the bank in order.
    """
    if n_bank >= target:
        idx = np.floor((np.arange(target, dtype=np.float64) + u)
                       * n_bank / target).astype(np.int64)
        np.clip(idx, 0, n_bank - 1, out=idx)
    else:
        idx = np.arange(target, dtype=np.int64) % n_bank
    return idx


def resample_fission_bank(bank: FissionBank, target: int,
                          state: int) -> tuple[FissionBank, int]:
    """Population control: resample a canonical bank to ``target`` sites."""
    if len(bank) == 0:
        from .errors import PopulationCollapseError
        raise PopulationCollapseError("fission bank is empty")
    u, state = prng.next_uniform(state)
    idx = systematic_resample_indices(len(bank), target, u)
    return FissionBank(bank.parent[idx], bank.ordinal[idx], bank.x[idx],
                       bank.y[idx], bank.z[idx], bank.dx[idx], bank.dy[idx],
                       bank.dz[idx], bank.energy[idx]), state


# ======================================================================================
# Executors
# ======================================================================================


def run_history(config: RunConfig, library, pincell, index=None) -> RunResult:
    """History-based execution: one particle at a time, birth to death."""
    if config.mode != "history":
        raise ConfigurationError("run_history requires mode='history'")
    from .replication import run_replicated
    return run_replicated(config, library, pincell, index=index)


def run_event(config: RunConfig, library, pincell, index=None) -> RunResult:
    """Event-based execution: queue-scheduled kernels with an in-flight cap."""
    if config.mode != "event":
        raise ConfigurationError("run_event requires mode='event'")
    from .replication import run_replicated
    return run_replicated(config, library, pincell, index=index)


def with_mode(config: RunConfig, **changes) -> RunConfig:
    return replace(config, **changes)
