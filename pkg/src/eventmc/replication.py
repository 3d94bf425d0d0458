"""Domain-replicated execution across in-process workers, plus weak scaling.

Every worker holds the full problem (library + geometry) and transports the
particles whose global index is congruent to its rank mod W, using those
particles' own RNG streams.  Between batches a single coordinator gathers
contribution logs and fission sites, canonicalizes them in global order,
reduces, resamples the bank, and hands out the next batch.  Because every
cross-particle aggregation happens in canonical order, the result is
bit-identical for any worker count.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernels, prng, xslib
from .errors import (ConfigurationError, EventMCError, GeometryError,
                     PhysicsError, PopulationCollapseError,
                     RunawayHistoryError, StreamOverlapError)
from .tally import KeffSeries, TallyLayout, batch_statistics, reduce_batch
from .transport import (FissionBank, RunConfig, RunResult,
                        systematic_resample_indices)

_ERRORS = {
    kernels.ERR_NO_SURFACE: (GeometryError, "no boundary intersection"),
    kernels.ERR_OUTSIDE_BOX: (GeometryError, "particle outside the cell box"),
    kernels.ERR_STREAM_OVERLAP: (StreamOverlapError,
                                 "history consumed a full RNG stride"),
    kernels.ERR_RUNAWAY_HISTORY: (RunawayHistoryError,
                                  "history exceeded the contribution-log cap"),
    kernels.ERR_QUEUE_STATE: (EventMCError, "event queue invariant violated"),
    kernels.ERR_NONPOSITIVE_SIGMA: (PhysicsError,
                                    "sigma_t <= 0 (void materials unsupported)"),
}

_COUNTER_SUMS = (
    ("captures", kernels.CNT_CAPTURES),
    ("fissions", kernels.CNT_FISSIONS),
    ("sourced", kernels.CNT_SOURCED),
    ("energy_clamps", kernels.CNT_CLAMPS),
    ("interp_transport", kernels.CNT_INTERP_TRANSPORT),
    ("interp_score", kernels.CNT_INTERP_SCORE),
    ("events_lookup", kernels.CNT_EV_LOOKUP),
    ("events_advance", kernels.CNT_EV_ADVANCE),
    ("events_collision", kernels.CNT_EV_COLLISION),
    ("invocations_lookup", kernels.CNT_INV_LOOKUP),
    ("invocations_advance", kernels.CNT_INV_ADVANCE),
    ("invocations_collision", kernels.CNT_INV_COLLISION),
    ("sorts", kernels.CNT_SORTS),
)
_COUNTER_MAXES = (
    ("max_draws_per_history", kernels.CNT_MAX_DRAWS),
    ("max_log_entries_per_history", kernels.CNT_MAX_HIST_LOG),
    ("max_in_flight_observed", kernels.CNT_MAX_INFLIGHT),
)


class _Worker:
    """Preallocated transport state owned by one worker."""

    def __init__(self, assigned: np.ndarray, config: RunConfig, max_comp: int,
                 n_bins: int):
        n_assigned = assigned.shape[0]
        if config.mode == "event":
            nslots = max(1, min(config.max_in_flight, n_assigned))
        else:
            nslots = 1
        self.assigned = assigned
        part_cols = max_comp if config.tally_mode == "fused" else 1
        self.slots = (
            np.zeros(nslots), np.zeros(nslots), np.zeros(nslots),   # position
            np.zeros(nslots), np.zeros(nslots), np.zeros(nslots),   # direction
            np.zeros(nslots),                                       # energy
            np.ones(nslots),                                        # weight
            np.zeros(nslots, np.uint64),                            # rng
            np.zeros(nslots, np.int64),                             # draws
            np.zeros(nslots, np.int64),                             # gid
            np.zeros(nslots, np.int32),                             # ordctr
            np.zeros(nslots, np.int32),                             # histlog
            np.zeros(nslots, np.int8),                              # kind
            np.zeros(nslots, np.int32),                             # axial
            np.zeros(nslots, np.int32),                             # material
            np.zeros(nslots), np.zeros(nslots), np.zeros(nslots),   # cm t,s,c
            np.zeros(nslots), np.zeros(nslots),                     # cm f,nsf
            np.zeros((nslots, max(part_cols, 1))),                  # part_t
        )
        self._alloc_logs(n_assigned * 96 + 4096)
        self._alloc_sites(n_assigned * 6 + 1024)
        self.wbins = np.zeros(n_bins)
        self.counters = np.zeros(kernels.N_COUNTERS, np.int64)
        self.timings = np.zeros(kernels.N_TIMINGS)
        self.ts = np.zeros(2, np.int64)

    def _alloc_logs(self, cap: int):
        self.logbuf = (np.zeros(cap, np.int64), np.zeros(cap, np.int32),
                       np.zeros(cap, np.int32), np.zeros(cap))

    def _alloc_sites(self, cap: int):
        self.sitebuf = tuple(
            np.zeros(cap, dt) for dt in
            (np.int64, np.int32, float, float, float, float, float, float, float))

    def grow_for(self, ovf: int):
        if ovf == kernels.OVF_LOG:
            self._alloc_logs(2 * self.logbuf[0].shape[0])
        else:
            self._alloc_sites(2 * self.sitebuf[0].shape[0])


def _run_worker_batch(w: _Worker, config: RunConfig, lib, union, geom, src,
                      batch: int, k_run: float, score: bool, use_logs: bool,
                      batch0: bool):
    """Run one worker's share of a batch, growing buffers on overflow.

    A rerun after overflow reproduces the exact same physics because every
    history is a pure function of (seed, batch, particle index).
    """
    while True:
        w.counters[:] = 0
        w.timings[:] = 0.0
        if not use_logs:
            w.wbins[:] = 0.0
        args = (w.assigned, w.slots, lib, union, geom, src, w.logbuf,
                w.sitebuf, w.wbins, w.counters, w.timings, w.ts,
                np.uint64(config.seed), batch, config.particles_per_batch,
                config.alpha_scatter, config.fission_temperature, k_run,
                xslib.ACCEL_CODES[config.accel],
                config.tally_mode == "fused", score, use_logs)
        if config.mode == "event":
            kernels.run_event_batch(*args, config.sort_enabled,
                                    config.sort_every_n, batch0,
                                    config.perturb_particle)
        else:
            kernels.run_history_batch(*args, batch0, config.perturb_particle)
        ovf = int(w.counters[kernels.CNT_OVF])
        if ovf == 0:
            return
        w.grow_for(ovf)


def _union_for(config: RunConfig, library, index):
    if config.accel == "binary":
        return xslib.union_tuple(None, "binary")
    if index is None:
        index = xslib.build_unionized_index(library)
    if config.accel == "unionized" and index.merged_channels is None:
        xslib.merge_channels(library, index)
    return xslib.union_tuple(index, config.accel)


def run_replicated(config: RunConfig, library, pincell, index=None) -> RunResult:
    """Run the configured problem across ``config.workers`` workers.

    The result is bit-identical to a single-worker run under deterministic
    reduction; ``fast`` reduction combines per-worker sums in worker order
    and is only meant for throughput measurement.
    """
    config.validate()
    ppb = config.particles_per_batch
    n_axial = pincell.n_axial
    for mid in list(pincell.fuel_material_ids) + [pincell.moderator_material_id]:
        if mid < 0 or mid >= library.n_materials:
            raise ConfigurationError(f"geometry references material {mid} "
                                     f"but the library has {library.n_materials}")
    lib = library.arrays()
    union = _union_for(config, library, index)
    geom = pincell.as_tuple()
    layout = TallyLayout(n_axial)
    use_logs = config.reduction == "deterministic"
    weight = float(ppb)  # analog weights: 1 per source particle

    nw = config.workers
    workers = [
        _Worker(np.arange(w, ppb, nw, dtype=np.int64), config,
                library.max_composition, layout.n_bins)
        for w in range(nw)
    ]

    n_batches = config.n_batches
    batch_sums = np.zeros((n_batches, layout.n_bins))
    keff_values = np.zeros(n_batches)
    accum = np.zeros(layout.n_tally_bins)
    accum_sq = np.zeros(layout.n_tally_bins)
    run_counters: dict[str, int] = {}
    timings = {"lookup": 0.0, "advance": 0.0, "collision": 0.0, "sort": 0.0,
               "reduce": 0.0, "merge": 0.0}
    inactive_wall = 0.0
    active_wall = 0.0
    k_run = 1.0
    src = tuple(np.zeros(1) for _ in range(7))
    bank = None
    pool = ThreadPoolExecutor(max_workers=nw) if nw > 1 else None
    try:
        for b in range(n_batches):
            active = b >= config.inactive_batches
            batch0 = b == 0
            t_batch = time.perf_counter()
            if pool is not None:
                futures = [
                    pool.submit(_run_worker_batch, w, config, lib, union, geom,
                                src, b, k_run, active, use_logs, batch0)
                    for w in workers
                ]
                for f in futures:
                    f.result()
            else:
                _run_worker_batch(workers[0], config, lib, union, geom, src,
                                  b, k_run, active, use_logs, batch0)

            for w in workers:
                err = int(w.counters[kernels.CNT_ERR])
                if err:
                    cls, msg = _ERRORS[err]
                    raise cls(f"{msg} (batch {b}, particle "
                              f"{int(w.counters[kernels.CNT_ERR_AUX])})")

            # canonical merge of fission sites
            t0 = time.perf_counter()
            parts = [w.sitebuf for w in workers]
            ns = [int(w.counters[kernels.CNT_SITE_N]) for w in workers]
            cat = [np.concatenate([p[k][:n] for p, n in zip(parts, ns)])
                   for k in range(9)]
            perm = np.lexsort((cat[1], cat[0]))
            bank = FissionBank(*(a[perm] for a in cat))
            timings["merge"] += time.perf_counter() - t0

            # deterministic (or fast) reduction of contributions
            t0 = time.perf_counter()
            if use_logs:
                logs = [tuple(a[:int(w.counters[kernels.CNT_LOG_N])]
                              for a in w.logbuf) for w in workers]
                sums = reduce_batch(logs, layout.n_bins, "deterministic")
            else:
                sums = np.zeros(layout.n_bins)
                for w in workers:
                    sums += w.wbins
            timings["reduce"] += time.perf_counter() - t0

            batch_sums[b] = sums
            keff_values[b] = sums[layout.keff_bin] / weight
            if active:
                x = sums[:layout.n_tally_bins] / weight
                accum += x
                accum_sq += x * x

            sourced = sum(int(w.counters[kernels.CNT_SOURCED]) for w in workers)
            deaths = sum(int(w.counters[kernels.CNT_CAPTURES])
                         + int(w.counters[kernels.CNT_FISSIONS])
                         for w in workers)
            if sourced != ppb or deaths != ppb:
                raise EventMCError(
                    f"neutron bookkeeping broken in batch {b}: "
                    f"{sourced} sourced, {deaths} absorbed, {ppb} expected")

            for name, idx in _COUNTER_SUMS:
                run_counters[name] = run_counters.get(name, 0) + sum(
                    int(w.counters[idx]) for w in workers)
            for name, idx in _COUNTER_MAXES:
                run_counters[name] = max(
                    run_counters.get(name, 0),
                    max(int(w.counters[idx]) for w in workers))
            timings["lookup"] += sum(w.timings[kernels.TM_LOOKUP] for w in workers)
            timings["advance"] += sum(w.timings[kernels.TM_ADVANCE] for w in workers)
            timings["collision"] += sum(w.timings[kernels.TM_COLLISION] for w in workers)
            timings["sort"] += sum(w.timings[kernels.TM_SORT] for w in workers)

            # population control for the next batch
            if b < n_batches - 1:
                if len(bank) == 0:
                    raise PopulationCollapseError(
                        f"no fission sites banked in batch {b}")
                u, _ = prng.next_uniform(prng.batch_stream(config.seed, b))
                idx = systematic_resample_indices(len(bank), ppb, u)
                src = (bank.x[idx], bank.y[idx], bank.z[idx], bank.dx[idx],
                       bank.dy[idx], bank.dz[idx], bank.energy[idx])
                k_run = keff_values[b]

            wall = time.perf_counter() - t_batch
            if active:
                active_wall += wall
            else:
                inactive_wall += wall
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    keff = KeffSeries(keff_values, config.inactive_batches)
    k_mean = k_stderr = None
    tally_mean = tally_stderr = None
    if config.active_batches >= 2:
        k_mean, k_stderr = keff.statistics()
        x = batch_sums[config.inactive_batches:, :layout.n_tally_bins] / weight
        tally_mean, tally_stderr = batch_statistics(x)

    inactive_rate = None
    if config.inactive_batches > 0 and inactive_wall > 0.0:
        inactive_rate = config.inactive_batches * ppb / inactive_wall
    active_rate = None
    if config.active_batches > 0 and active_wall > 0.0:
        active_rate = config.active_batches * ppb / active_wall

    return RunResult(
        keff=keff, k_mean=k_mean, k_stderr=k_stderr,
        tally_mean=tally_mean, tally_stderr=tally_stderr,
        batch_sums=batch_sums, layout=layout, bank=bank,
        timings=timings, inactive_wall=inactive_wall, active_wall=active_wall,
        inactive_rate=inactive_rate, active_rate=active_rate,
        counters=run_counters, config=config.echo(),
        library_fingerprint=xslib.library_fingerprint(library),
        geometry_fingerprint=pincell.fingerprint(),
    )


@dataclass
class ScalingRow:
    """One weak-scaling measurement."""

    workers: int
    particles_per_worker: int
    inactive_rate: float
    active_rate: float
    efficiency: float


def weak_scaling_study(base_config: RunConfig, library, pincell,
                       worker_list: list[int], particles_per_worker: int,
                       index=None) -> list[ScalingRow]:
    """Fixed work per worker: particles_per_batch = W * particles_per_worker.

    Efficiency is active_rate(W) / (W * active_rate(1)) against this study's
    own W=1 row.
    """
    if not worker_list or worker_list[0] != 1 or \
            sorted(worker_list) != list(worker_list):
        raise ConfigurationError(
            "worker list must be ascending and start at 1")
    if base_config.active_batches < 1 or base_config.inactive_batches < 1:
        raise ConfigurationError(
            "scaling study needs at least one batch in each phase")
    rows: list[ScalingRow] = []
    base_rate = None
    for w in worker_list:
        cfg = replace(base_config, workers=w,
                      particles_per_batch=w * particles_per_worker)
        res = run_replicated(cfg, library, pincell, index=index)
        if base_rate is None:
            base_rate = res.active_rate
        eff = res.active_rate / (w * base_rate)
        rows.append(ScalingRow(w, particles_per_worker, res.inactive_rate,
                               res.active_rate, eff))
    return rows


def warm_up() -> None:
    """Compile (or load from cache) every kernel with a miniature run."""
    from .presets import analytic_infinite_medium
    library, pincell = analytic_infinite_medium()
    for mode in ("history", "event"):
        cfg = RunConfig(particles_per_batch=8, inactive_batches=1,
                        active_batches=2, mode=mode, max_in_flight=4,
                        accel="unionized")
        run_replicated(cfg, library, pincell)
