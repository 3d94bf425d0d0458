"""Cross-executor bit-equality and engine-level physics checks."""

from dataclasses import replace

import numpy as np
import pytest

from eventmc import presets, xslib
from eventmc.errors import ConfigurationError, StreamOverlapError
from eventmc.replication import run_replicated
from eventmc.transport import RunConfig, run_event, run_history
from eventmc.xslib import Library, Material, NuclideXS


@pytest.fixture(scope="module")
def problem(small_pincell):
    return small_pincell


BASE = RunConfig(particles_per_batch=400, inactive_batches=2,
                 active_batches=3, mode="history", seed=5)


def test_executor_equivalence_matrix(problem):
    """The keystone: every executor configuration produces bit-identical
    k series, tallies, and fission banks under deterministic reduction."""
    lib, cell = problem
    index = xslib.build_unionized_index(lib, merged=True)
    ref = run_replicated(BASE, lib, cell).physics_fingerprint()
    variants = []
    for cap in (1, 16, 400):
        for sort in (True, False):
            variants.append(replace(BASE, mode="event", max_in_flight=cap,
                                    sort_enabled=sort))
    variants.append(replace(BASE, tally_mode="naive"))
    variants.append(replace(BASE, mode="event", max_in_flight=64,
                            tally_mode="naive"))
    variants.append(replace(BASE, accel="double_index"))
    variants.append(replace(BASE, accel="unionized"))
    variants.append(replace(BASE, mode="event", max_in_flight=64,
                            accel="unionized", sort_every_n=3))
    for cfg in variants:
        got = run_replicated(cfg, lib, cell, index=index).physics_fingerprint()
        assert got == ref, f"diverged: {cfg}"


def test_run_entry_points_check_mode(problem):
    lib, cell = problem
    with pytest.raises(ConfigurationError):
        run_history(replace(BASE, mode="event"), lib, cell)
    with pytest.raises(ConfigurationError):
        run_event(BASE, lib, cell)
    a = run_history(BASE, lib, cell)
    b = run_event(replace(BASE, mode="event"), lib, cell)
    assert a.physics_fingerprint() == b.physics_fingerprint()


def test_same_seed_reproduces_different_seed_diverges(problem):
    lib, cell = problem
    a = run_replicated(BASE, lib, cell)
    b = run_replicated(BASE, lib, cell)
    c = run_replicated(replace(BASE, seed=6), lib, cell)
    assert a.physics_fingerprint() == b.physics_fingerprint()
    assert a.physics_fingerprint() != c.physics_fingerprint()


def test_perturbation_hook_diverges(problem):
    lib, cell = problem
    a = run_replicated(BASE, lib, cell)
    b = run_replicated(replace(BASE, perturb_particle=17), lib, cell)
    assert a.physics_fingerprint() != b.physics_fingerprint()


def test_neutron_bookkeeping(problem):
    lib, cell = problem
    res = run_replicated(BASE, lib, cell)
    n_expected = BASE.particles_per_batch * BASE.n_batches
    assert res.counters["sourced"] == n_expected
    assert res.counters["captures"] + res.counters["fissions"] == n_expected


def test_in_flight_cap_respected(problem):
    lib, cell = problem
    for cap in (1, 13, 100):
        cfg = replace(BASE, mode="event", max_in_flight=cap)
        res = run_replicated(cfg, lib, cell)
        assert res.counters["max_in_flight_observed"] <= cap


def test_draw_budget_is_tracked(problem):
    lib, cell = problem
    res = run_replicated(BASE, lib, cell)
    assert 0 < res.counters["max_draws_per_history"] < 152917


def test_inactive_batches_do_not_touch_tallies(problem):
    """Tally sums depend only on active batches; the k series depends only
    on the absolute batch index (streams are keyed by batch)."""
    lib, cell = problem
    a = run_replicated(replace(BASE, inactive_batches=3, active_batches=3),
                       lib, cell)
    b = run_replicated(replace(BASE, inactive_batches=0, active_batches=6),
                       lib, cell)
    assert np.array_equal(a.keff.values, b.keff.values)
    # per-batch raw sums agree on the common active batches (3..5): the
    # inactive run simply never accumulated batches 0..2
    lay = a.layout
    assert np.array_equal(a.batch_sums[3:, :lay.n_tally_bins],
                          b.batch_sums[3:, :lay.n_tally_bins])
    assert np.all(a.batch_sums[:3, :lay.n_tally_bins] == 0.0)
    assert np.any(b.batch_sums[:3, :lay.n_tally_bins] != 0.0)


def test_fast_reduction_close_but_not_contractual(problem):
    lib, cell = problem
    det = run_replicated(BASE, lib, cell)
    fast = run_replicated(replace(BASE, reduction="fast"), lib, cell)
    assert np.allclose(det.keff.values, fast.keff.values, rtol=1e-9)


def test_interp_counters_fused_vs_naive(problem):
    lib, cell = problem
    fused = run_replicated(BASE, lib, cell)
    naive = run_replicated(replace(BASE, tally_mode="naive"), lib, cell)
    assert fused.counters["interp_score"] == 0
    assert naive.counters["interp_score"] > 0
    assert fused.physics_fingerprint() == naive.physics_fingerprint()


def _uniform_medium(sigma_s, sigma_c, sigma_f, nu=2.43):
    grid = np.array([1.0e-5, 2.0e7])
    nuc = NuclideXS(grid, np.full(2, sigma_s + sigma_c + sigma_f),
                    np.full(2, sigma_s), np.full(2, sigma_c),
                    np.full(2, sigma_f), nu)
    lib = Library([nuc], [Material(0, [(0, 1.0)])])
    cell = presets.analytic_infinite_medium()[1]
    return lib, cell


def test_capture_dominated_history_is_short():
    # nearly pure capture: one lookup, one advance, one collision, death
    lib, cell = _uniform_medium(1e-9, 1.0e4, 1e-9, nu=0.0)
    cfg = RunConfig(particles_per_batch=1, inactive_batches=1,
                    active_batches=0, mode="history", seed=3)
    try:
        res = run_replicated(cfg, lib, cell)
    except Exception:  # population collapse cannot happen: 1 batch only
        raise
    assert res.counters["events_lookup"] == 1
    assert res.counters["events_advance"] == 1
    assert res.counters["events_collision"] == 1
    assert res.counters["captures"] == 1


def test_collision_channel_frequencies_multinomial():
    # constant cross sections: P(scatter, capture, fission) = (2/3, 1/6, 1/6)
    lib, cell = _uniform_medium(2.0, 0.5, 0.5)
    cfg = RunConfig(particles_per_batch=20000, inactive_batches=1,
                    active_batches=0, mode="event", max_in_flight=20000,
                    seed=8)
    res = run_replicated(cfg, lib, cell)
    n_coll = res.counters["events_collision"]
    for count, p in ((res.counters["captures"], 1 / 6),
                     (res.counters["fissions"], 1 / 6),
                     (n_coll - res.counters["captures"]
                      - res.counters["fissions"], 2 / 3)):
        sigma = np.sqrt(n_coll * p * (1 - p))
        assert abs(count - n_coll * p) < 3.5 * sigma


def test_analytic_k_small():
    lib, cell = presets.analytic_infinite_medium()
    cfg = RunConfig(particles_per_batch=4000, inactive_batches=2,
                    active_batches=8, mode="event", seed=9)
    res = run_replicated(cfg, lib, cell)
    assert abs(res.k_mean - presets.ANALYTIC_K_INF) < 3.5 * res.k_stderr


def test_pure_scatterer_trips_stream_guard():
    # absorption ~ 0 means histories never end; the draw counter must abort
    lib, cell = _uniform_medium(5.0, 1e-13, 1e-13, nu=0.0)
    cfg = RunConfig(particles_per_batch=1, inactive_batches=1,
                    active_batches=0, mode="history", seed=1)
    with pytest.raises(StreamOverlapError):
        run_replicated(cfg, lib, cell)


def test_runaway_history_trips_log_guard():
    # while tallying, an endless history floods its contribution log and
    # must hit the runaway guard before the draw budget
    from eventmc.errors import RunawayHistoryError
    lib, cell = _uniform_medium(5.0, 1e-13, 1e-13, nu=0.0)
    cfg = RunConfig(particles_per_batch=1, inactive_batches=0,
                    active_batches=1, mode="history", seed=1)
    with pytest.raises(RunawayHistoryError):
        run_replicated(cfg, lib, cell)


def test_energy_clamps_are_counted():
    # a huge fission temperature pushes source energies past the grid top,
    # which must clamp (and be counted), never escape the energy domain
    lib, cell = presets.analytic_infinite_medium()
    cfg = RunConfig(particles_per_batch=500, inactive_batches=1,
                    active_batches=0, mode="history", seed=2,
                    fission_temperature=1.0e8)
    res = run_replicated(cfg, lib, cell)
    assert res.counters["energy_clamps"] > 0


def test_config_validation():
    with pytest.raises(ConfigurationError):
        RunConfig(particles_per_batch=0).validate()
    with pytest.raises(ConfigurationError):
        RunConfig(mode="warp").validate()
    with pytest.raises(ConfigurationError):
        RunConfig(workers=5, particles_per_batch=4).validate()
    with pytest.raises(ConfigurationError):
        RunConfig(alpha_scatter=1.5).validate()
    with pytest.raises(ConfigurationError):
        RunConfig(max_in_flight=0).validate()
