"""Particle-level sampling, queue sorting, and bank resampling."""

import math

import numpy as np
import pytest

from eventmc import kernels, prng
from eventmc.errors import PhysicsError, PopulationCollapseError
from eventmc.transport import (FissionBank, resample_fission_bank,
                               sample_collision_distance, sample_isotropic,
                               sort_lookup_queue, systematic_resample_indices)


def test_isotropic_reference_directions():
    assert kernels.isotropic_from_u(0.5, 0.0) == (1.0, 0.0, 0.0)
    d = kernels.isotropic_from_u(1.0 - 1e-12, 0.3)
    assert d[2] == pytest.approx(1.0, abs=1e-11)


def test_isotropic_unit_norm_and_state_advance():
    s = 99
    d, s2 = sample_isotropic(s)
    assert abs(math.sqrt(sum(c * c for c in d)) - 1.0) < 1e-12
    assert s2 == prng.skip_ahead(s, 2)


def test_isotropic_mean_is_zero():
    u = np.empty(2 * 10**6)
    kernels.fill_uniforms(np.uint64(5), u)
    mu = 2.0 * u[0::2] - 1.0
    phi = 2.0 * np.pi * u[1::2]
    s = np.sqrt(1.0 - mu * mu)
    for comp in (s * np.cos(phi), s * np.sin(phi), mu):
        assert abs(comp.mean()) < 0.005


def test_collision_distance_formula_and_state():
    s = 4242
    u, s_after = prng.next_uniform(s)
    d, s2 = sample_collision_distance(2.0, s)
    assert s2 == s_after
    assert d == -np.log(1.0 - u) / 2.0
    # analytic inversion: u = 1 - exp(-1) gives one mean free path
    assert -np.log(1.0 - (1.0 - math.exp(-1.0))) / 2.0 == \
        pytest.approx(0.5, rel=1e-12)


def test_collision_distance_mean():
    u = np.empty(10**6)
    kernels.fill_uniforms(np.uint64(31), u)
    d = -np.log(1.0 - u)  # sigma_t = 1
    assert abs(d.mean() - 1.0) < 0.005


def test_collision_distance_rejects_void():
    with pytest.raises(PhysicsError):
        sample_collision_distance(0.0, 1)
    with pytest.raises(PhysicsError):
        sample_collision_distance(-2.0, 1)


def test_sort_stability_and_order(rng):
    mats = np.array([2, 2, 0, 1, 1, 0], np.int32)
    ens = np.array([5.0, 1.0, 3.0, 2.0, 2.0, 3.0])
    q = np.arange(6, dtype=np.int32)
    out = sort_lookup_queue(q, mats, ens)
    # already sorted input is unchanged
    assert np.array_equal(sort_lookup_queue(out, mats, ens), out)
    # reverse-sorted pair swaps
    assert np.array_equal(
        sort_lookup_queue(np.array([0, 1], np.int32),
                          np.array([0, 0], np.int32),
                          np.array([2.0, 1.0])),
        np.array([1, 0]))
    # reference sort: stable by (material, energy, original position)
    n = 10**4
    mats = rng.randint(0, 7, n).astype(np.int32)
    ens = rng.choice([0.5, 1.0, 2.0, 4.0], n)  # ties exercise stability
    q = rng.permutation(n).astype(np.int32)
    expected = sorted(range(n), key=lambda i: (mats[q[i]], ens[q[i]], i))
    assert np.array_equal(sort_lookup_queue(q, mats, ens),
                          q[np.array(expected)])


def test_resample_identity_when_sizes_match():
    for u in (0.0, 0.37, 0.999999):
        idx = systematic_resample_indices(8, 8, u)
        assert np.array_equal(idx, np.arange(8))


def test_resample_stride_two():
    idx = systematic_resample_indices(16, 8, 0.0)
    assert np.array_equal(idx, np.arange(0, 16, 2))


def test_resample_formula_oracle():
    # brute-force evaluation of floor((i+u)*len/target)
    for u in (0.0, 0.123, 0.5, 0.99):
        idx = systematic_resample_indices(7, 3, u)
        expected = [math.floor((i + u) * 7 / 3) for i in range(3)]
        assert list(idx) == expected


def test_resample_cycles_small_bank():
    idx = systematic_resample_indices(3, 8, 0.7)
    assert list(idx) == [0, 1, 2, 0, 1, 2, 0, 1]


def _bank(n):
    return FissionBank(np.arange(n, dtype=np.int64),
                       np.zeros(n, np.int32), np.zeros(n), np.zeros(n),
                       np.zeros(n), np.zeros(n), np.zeros(n), np.ones(n),
                       np.full(n, 1e6))


def test_resample_bank_roundtrip():
    bank = _bank(10)
    out, state = resample_fission_bank(bank, 4, 123)
    assert len(out) == 4
    assert state == prng.skip_ahead(123, 1)


def test_resample_empty_bank_is_fatal():
    with pytest.raises(PopulationCollapseError):
        resample_fission_bank(_bank(0), 4, 1)


def test_log_append_suppresses_exact_zeros():
    logbuf = (np.zeros(8, np.int64), np.zeros(8, np.int32),
              np.zeros(8, np.int32), np.zeros(8))
    counters = np.zeros(kernels.N_COUNTERS, np.int64)
    ordctr = np.zeros(1, np.int32)
    histlog = np.zeros(1, np.int32)
    assert kernels._log_append(logbuf, counters, 5, ordctr, histlog, 0, 3, 0.0) == 0
    assert counters[kernels.CNT_LOG_N] == 0       # suppressed
    assert ordctr[0] == 0
    kernels._log_append(logbuf, counters, 5, ordctr, histlog, 0, 3, 1.5)
    kernels._log_append(logbuf, counters, 5, ordctr, histlog, 0, 4, 2.5)
    assert counters[kernels.CNT_LOG_N] == 2
    assert list(logbuf[1][:2]) == [0, 1]          # emission ordinals
    assert list(logbuf[2][:2]) == [3, 4]
