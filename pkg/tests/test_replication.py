"""Replication invariance and the weak-scaling harness."""

from dataclasses import replace

import pytest

from eventmc.errors import ConfigurationError
from eventmc.replication import run_replicated, weak_scaling_study
from eventmc.transport import RunConfig

BASE = RunConfig(particles_per_batch=300, inactive_batches=2,
                 active_batches=3, mode="event", max_in_flight=50, seed=4)


def test_replication_invariance(small_pincell):
    lib, cell = small_pincell
    ref = run_replicated(BASE, lib, cell).physics_fingerprint()
    for w in (2, 4, 8):
        got = run_replicated(replace(BASE, workers=w), lib, cell)
        assert got.physics_fingerprint() == ref, f"W={w} diverged"


def test_one_particle_per_worker(small_pincell):
    lib, cell = small_pincell
    cfg = replace(BASE, particles_per_batch=16, workers=16,
                  inactive_batches=1, active_batches=2)
    ref = run_replicated(replace(cfg, workers=1), lib, cell)
    got = run_replicated(cfg, lib, cell)
    assert got.physics_fingerprint() == ref.physics_fingerprint()


def test_too_many_workers_rejected(small_pincell):
    lib, cell = small_pincell
    with pytest.raises(ConfigurationError):
        run_replicated(replace(BASE, workers=301), lib, cell)


def test_history_mode_replication(small_pincell):
    lib, cell = small_pincell
    cfg = replace(BASE, mode="history")
    ref = run_replicated(cfg, lib, cell).physics_fingerprint()
    got = run_replicated(replace(cfg, workers=3), lib, cell)
    assert got.physics_fingerprint() == ref


def test_weak_scaling_rows(small_pincell):
    lib, cell = small_pincell
    base = replace(BASE, inactive_batches=1, active_batches=2)
    rows = weak_scaling_study(base, lib, cell, [1], 400)
    assert len(rows) == 1
    assert rows[0].efficiency == 1.0
    rows = weak_scaling_study(base, lib, cell, [1, 2], 400)
    assert len(rows) == 2
    for r in rows:
        # the efficiency column must be recomputable from the emitted rates
        expected = r.active_rate / (r.workers * rows[0].active_rate)
        assert abs(r.efficiency - expected) < 1e-9
        assert r.efficiency > 0.0


def test_weak_scaling_validates_worker_list(small_pincell):
    lib, cell = small_pincell
    with pytest.raises(ConfigurationError):
        weak_scaling_study(BASE, lib, cell, [2, 4], 100)
    with pytest.raises(ConfigurationError):
        weak_scaling_study(BASE, lib, cell, [1, 4, 2], 100)
    with pytest.raises(ConfigurationError):
        weak_scaling_study(BASE, lib, cell, [], 100)
