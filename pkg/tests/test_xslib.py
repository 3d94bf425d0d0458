"""Library synthesis, lookups, acceleration backends, and file round-trips."""

import numpy as np
import pytest

from eventmc import xslib
from eventmc.errors import (ConfigurationError, InvalidEnergyError,
                            UnknownMaterialError)
from eventmc.xslib import (Library, Material, NuclideXS,
                           build_unionized_index, generate_synthetic_library,
                           library_bytes, load_library, macro_lookup,
                           micro_lookup, save_library)


@pytest.fixture(scope="module")
def lib():
    return generate_synthetic_library(10, 50, 4, 6, seed=77)


def test_generation_is_deterministic():
    a = generate_synthetic_library(5, 30, 2, 3, seed=11)
    b = generate_synthetic_library(5, 30, 2, 3, seed=11)
    assert library_bytes(a) == library_bytes(b)
    c = generate_synthetic_library(5, 30, 2, 3, seed=12)
    assert library_bytes(a) != library_bytes(c)


def test_generated_invariants(lib):
    for n in lib.nuclides:
        g = n.energy_grid
        assert np.all(np.diff(g) > 0)
        assert g[0] >= xslib.EMIN and g[-1] <= xslib.EMAX
        assert np.array_equal(
            n.sigma_total,
            n.sigma_scatter + n.sigma_capture + n.sigma_fission)
        assert np.all(n.sigma_scatter > 0)
        assert np.all(n.sigma_capture > 0)
        assert np.all(n.sigma_fission > 0)
        assert n.nu in (0.0, 2.43)
    for m in lib.materials:
        ids = [nid for nid, _ in m.composition]
        assert len(set(ids)) == len(ids) == 6
        assert all(0 < den <= 0.1 for _, den in m.composition)
        assert all(1e-4 <= den for _, den in m.composition)


def test_fuel_scale_matches_benchmark_shape():
    lib = generate_synthetic_library(251, 10, 1, 251, seed=3)
    assert len(lib.materials[0].composition) == 251


def test_invalid_counts():
    with pytest.raises(ConfigurationError):
        generate_synthetic_library(0, 10, 1, 1, seed=1)
    with pytest.raises(ConfigurationError):
        generate_synthetic_library(5, 10, 1, 6, seed=1)


def test_micro_at_grid_point_is_exact(lib):
    n = lib.nuclides[0]
    for i in (0, 7, n.energy_grid.shape[0] - 1):
        t, s, c, f = micro_lookup(n, float(n.energy_grid[i]))
        assert t == n.sigma_total[i]
        assert s == n.sigma_scatter[i]
        assert c == n.sigma_capture[i]
        assert f == n.sigma_fission[i]


def test_micro_midpoint_two_point_oracle():
    # hand linear interpolation on a 2-point grid
    n = NuclideXS(np.array([1.0, 3.0]), np.array([4.0, 8.0]),
                  np.array([1.0, 2.0]), np.array([2.0, 5.0]),
                  np.array([1.0, 1.0]), 0.0)
    t, s, c, f = micro_lookup(n, 2.0)
    for got, expect in zip((t, s, c, f), (6.0, 1.5, 3.5, 1.0)):
        assert got == pytest.approx(expect, rel=1e-15)


def test_micro_clamps_off_grid(lib):
    n = lib.nuclides[2]
    t_lo, *_ = micro_lookup(n, 1e-9)
    assert t_lo == n.sigma_total[0]
    t_hi, *_ = micro_lookup(n, 1e9)
    assert t_hi == n.sigma_total[-1]


def test_micro_rejects_bad_energy(lib):
    with pytest.raises(InvalidEnergyError):
        micro_lookup(lib.nuclides[0], float("nan"))
    with pytest.raises(InvalidEnergyError):
        micro_lookup(lib.nuclides[0], -1.0)


def test_macro_single_nuclide_equals_micro(lib):
    single = Library([lib.nuclides[0]], [Material(0, [(0, 1.0)])])
    mx, parts = macro_lookup(single, 0, 1234.5)
    t, s, c, f = micro_lookup(lib.nuclides[0], 1234.5)
    assert (mx.sigma_t, mx.sigma_s, mx.sigma_c, mx.sigma_f) == \
        (1.0 * t, 1.0 * s, 1.0 * c, 1.0 * f)
    assert parts.shape == (1, 4)


def test_macro_empty_material_is_zero(lib):
    empty = Library(lib.nuclides, [Material(0, [])])
    mx, parts = macro_lookup(empty, 0, 100.0)
    assert (mx.sigma_t, mx.sigma_s, mx.sigma_c, mx.sigma_f,
            mx.nu_sigma_f) == (0.0, 0.0, 0.0, 0.0, 0.0)
    assert parts.shape == (0, 4)


def test_macro_three_nuclide_summation_oracle(lib):
    # independent brute-force sum in composition order
    comp = [(1, 0.02), (4, 0.005), (7, 0.0125)]
    tri = Library(lib.nuclides, [Material(0, comp)])
    for energy in (2.3e-4, 17.0, 8.0e5, 1.9e7):
        mx, parts = macro_lookup(tri, 0, energy)
        st = ss = sc = sf = snf = 0.0
        for nid, den in comp:
            t, s, c, f = micro_lookup(lib.nuclides[nid], energy)
            st += den * t
            ss += den * s
            sc += den * c
            sf += den * f
            snf += den * lib.nuclides[nid].nu * f
        assert mx.sigma_t == st
        assert mx.sigma_s == ss
        assert mx.sigma_c == sc
        assert mx.sigma_f == sf
        assert mx.nu_sigma_f == snf


def test_macro_sigma_t_is_sum_of_channels(lib):
    # channels interpolate independently, so the identity holds to roundoff
    for energy in (1e-4, 3.3, 4.4e6):
        mx, _ = macro_lookup(lib, 2, energy)
        assert mx.sigma_t == pytest.approx(
            mx.sigma_s + mx.sigma_c + mx.sigma_f, rel=1e-12)


def test_macro_unknown_material(lib):
    with pytest.raises(UnknownMaterialError):
        macro_lookup(lib, 99, 1.0)


def test_macro_requires_index_for_accelerated(lib):
    with pytest.raises(ConfigurationError):
        macro_lookup(lib, 0, 1.0, accel="double_index")


def test_union_single_nuclide_degenerate(lib):
    single = Library([lib.nuclides[3]], [Material(0, [(0, 1.0)])])
    idx = build_unionized_index(single)
    g = lib.nuclides[3].energy_grid
    assert np.array_equal(idx.union_grid, g)
    n = g.shape[0]
    assert np.array_equal(idx.index_map[:-1, 0], np.arange(n - 1))
    assert idx.index_map[-1, 0] == n - 2  # boundary clamp


def test_union_disjoint_grids_concatenate():
    a = NuclideXS(np.array([1.0, 2.0, 3.0]), np.ones(3) * 3, np.ones(3),
                  np.ones(3), np.ones(3), 0.0)
    b = NuclideXS(np.array([4.0, 5.0]), np.ones(2) * 3, np.ones(2),
                  np.ones(2), np.ones(2), 0.0)
    lib2 = Library([a, b], [Material(0, [(0, 1.0), (1, 1.0)])])
    idx = build_unionized_index(lib2)
    assert idx.union_grid.shape[0] == 5


def test_union_bounding_property_exhaustive(lib):
    # every (union point, nuclide) entry brackets the union energy
    idx = build_unionized_index(lib)
    for n, nuc in enumerate(lib.nuclides):
        g = nuc.energy_grid
        for j, e in enumerate(idx.union_grid):
            i = idx.index_map[j, n]
            assert 0 <= i <= g.shape[0] - 2
            if g[0] <= e < g[-1]:
                assert g[i] <= e < g[i + 1]


def test_backends_bit_equal(lib, rng):
    idx = build_unionized_index(lib, merged=True)
    energies = np.exp(rng.uniform(np.log(1e-5), np.log(2e7), 3000))
    mats = rng.randint(0, lib.n_materials, 3000)
    for m, e in zip(mats, energies):
        b, pb = macro_lookup(lib, int(m), float(e), "binary")
        d, pd = macro_lookup(lib, int(m), float(e), "double_index", idx)
        u, pu = macro_lookup(lib, int(m), float(e), "unionized", idx)
        assert (b.sigma_t, b.sigma_s, b.sigma_c, b.sigma_f, b.nu_sigma_f) == \
            (d.sigma_t, d.sigma_s, d.sigma_c, d.sigma_f, d.nu_sigma_f) == \
            (u.sigma_t, u.sigma_s, u.sigma_c, u.sigma_f, u.nu_sigma_f)
        assert np.array_equal(pb, pd) and np.array_equal(pb, pu)


def test_backends_bit_equal_heterogeneous_endpoints(rng):
    # grids with different first/last points exercise the clamp branches
    a = NuclideXS(np.array([1.0, 10.0, 100.0]), np.full(3, 6.0),
                  np.full(3, 2.0), np.full(3, 3.0), np.full(3, 1.0), 0.0)
    b = NuclideXS(np.array([5.0, 50.0]), np.array([3.0, 9.0]),
                  np.array([1.0, 3.0]), np.array([1.0, 3.0]),
                  np.array([1.0, 3.0]), 2.43)
    lib2 = Library([a, b], [Material(0, [(0, 0.5), (1, 0.25)])])
    idx = build_unionized_index(lib2, merged=True)
    for e in rng.uniform(0.5, 120.0, 500):
        r0, _ = macro_lookup(lib2, 0, float(e), "binary")
        r1, _ = macro_lookup(lib2, 0, float(e), "double_index", idx)
        r2, _ = macro_lookup(lib2, 0, float(e), "unionized", idx)
        assert r0.sigma_t == r1.sigma_t == r2.sigma_t
        assert r0.nu_sigma_f == r1.nu_sigma_f == r2.nu_sigma_f


def test_file_round_trip(tmp_path, lib):
    path = str(tmp_path / "lib.bin")
    save_library(lib, path)
    back = load_library(path)
    assert back.n_nuclides == lib.n_nuclides
    for a, b in zip(lib.nuclides, back.nuclides):
        assert np.array_equal(a.energy_grid, b.energy_grid)
        assert np.array_equal(a.sigma_total, b.sigma_total)
        assert np.array_equal(a.sigma_scatter, b.sigma_scatter)
        assert np.array_equal(a.sigma_capture, b.sigma_capture)
        assert np.array_equal(a.sigma_fission, b.sigma_fission)
        assert a.nu == b.nu
    for a, b in zip(lib.materials, back.materials):
        assert a.composition == b.composition
    # second serialization is byte-identical
    assert library_bytes(back) == library_bytes(lib)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOTALIB!" + b"\x00" * 64)
    with pytest.raises(ConfigurationError):
        load_library(str(path))
