"""Synthetic multi-nuclide pointwise cross-section library and lookups.

Nuclide data is synthetic: jittered log-spaced energy grids over
[1e-5 eV, 2e7 eV] with piecewise-smooth channel curves drawn from a seeded
LCG stream, so any library is a pure function of its generation parameters.
The total channel is stored as the exact sum of the partials at every grid
point.

Three lookup acceleration backends are provided and are bit-equivalent by
construction (identical interpolation arithmetic, different interval
search):

  binary       per-nuclide binary search (baseline)
  double_index one binary search on the merged union grid, then direct
               per-nuclide bounding indices from an index map
  unionized    same union search and map, with the bounding channel values
               additionally pre-merged into union-grid-shaped storage

The pre-merged storage trades memory for locality, O(union x nuclides),
which is why it stays optional.
"""

from __future__ import annotations

import hashlib
import io
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigurationError, InvalidEnergyError, UnknownMaterialError
from .prng import STRIDE, skip_ahead

EMIN = 1.0e-5
EMAX = 2.0e7

_MAGIC = b"MCXSLIB1"
_VERSION = 1

_N_CTRL = 8          # control points per channel curve
_FISSILE_FRACTION = 0.2
_NU_FISSILE = 2.43
_FISSION_FLOOR = 1.0e-6   # barns; ceiling of the scaled-down fission channel

ACCEL_CODES = {
    "binary": kernels.ACCEL_BINARY,
    "double_index": kernels.ACCEL_DOUBLE,
    "unionized": kernels.ACCEL_UNIONIZED,
}


@dataclass
class NuclideXS:
    """Pointwise cross sections of one nuclide (barns vs eV)."""

    energy_grid: np.ndarray
    sigma_total: np.ndarray
    sigma_scatter: np.ndarray
    sigma_capture: np.ndarray
    sigma_fission: np.ndarray
    nu: float


@dataclass
class Material:
    """A composition: list of (nuclide_id, atom density in atoms/(barn cm))."""

    id: int
    composition: list[tuple[int, float]]


@dataclass
class MacroXS:
    """Macroscopic cross sections (1/cm)."""

    sigma_t: float
    sigma_s: float
    sigma_c: float
    sigma_f: float
    nu_sigma_f: float


@dataclass
class UnionizedIndex:
    """Merged energy grid plus per-nuclide bounding-interval indices.

    ``index_map[j, n]`` is the interval index i of nuclide n such that
    grid_n[i] <= union_grid[j] < grid_n[i+1], clamped to a valid interval at
    the ends.  ``merged_channels[j, n]`` optionally holds the bounding
    channel values (t0, t1, s0, s1, c0, c1, f0, f1) for the unionized
    backend.
    """

    union_grid: np.ndarray
    index_map: np.ndarray
    merged_channels: np.ndarray | None = None


@dataclass
class Library:
    """A set of nuclides plus material compositions."""

    nuclides: list[NuclideXS]
    materials: list[Material]
    generation_seed: int | None = None
    _flat: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_nuclides(self) -> int:
        return len(self.nuclides)

    @property
    def n_materials(self) -> int:
        return len(self.materials)

    def arrays(self) -> tuple:
        """Flat structure-of-arrays view shared with the compiled kernels."""
        if self._flat is None:
            grid_off = np.zeros(len(self.nuclides) + 1, np.int64)
            for i, n in enumerate(self.nuclides):
                grid_off[i + 1] = grid_off[i] + n.energy_grid.shape[0]
            total = int(grid_off[-1])
            grids = np.empty(total, np.float64)
            ch_t = np.empty(total, np.float64)
            ch_s = np.empty(total, np.float64)
            ch_c = np.empty(total, np.float64)
            ch_f = np.empty(total, np.float64)
            nu = np.empty(len(self.nuclides), np.float64)
            for i, n in enumerate(self.nuclides):
                a, b = grid_off[i], grid_off[i + 1]
                grids[a:b] = n.energy_grid
                ch_t[a:b] = n.sigma_total
                ch_s[a:b] = n.sigma_scatter
                ch_c[a:b] = n.sigma_capture
                ch_f[a:b] = n.sigma_fission
                nu[i] = n.nu
            mat_off = np.zeros(len(self.materials) + 1, np.int64)
            for i, m in enumerate(self.materials):
                mat_off[i + 1] = mat_off[i] + len(m.composition)
            mat_nuc = np.empty(int(mat_off[-1]), np.int32)
            mat_den = np.empty(int(mat_off[-1]), np.float64)
            for i, m in enumerate(self.materials):
                for k, (nid, den) in enumerate(m.composition):
                    mat_nuc[mat_off[i] + k] = nid
                    mat_den[mat_off[i] + k] = den
            emin = min(float(n.energy_grid[0]) for n in self.nuclides)
            emax = max(float(n.energy_grid[-1]) for n in self.nuclides)
            self._flat = (grid_off, grids, ch_t, ch_s, ch_c, ch_f, nu,
                          mat_off, mat_nuc, mat_den, emin, emax)
        return self._flat

    @property
    def max_composition(self) -> int:
        return max((len(m.composition) for m in self.materials), default=0)


def _empty_union() -> tuple:
    """Placeholder union tuple for the binary backend (never dereferenced)."""
    return (np.zeros(2, np.float64), np.zeros((2, 1), np.int32),
            np.zeros((1, 1, 8), np.float64))


def union_tuple(index: UnionizedIndex | None, accel: str) -> tuple:
    if accel == "binary" or index is None:
        return _empty_union()
    merged = index.merged_channels
    if accel != "unionized" or merged is None:
        merged = np.zeros((1, 1, 8), np.float64)
    return (index.union_grid, index.index_map, merged)


# ======================================================================================
# Synthesis
# ======================================================================================


def _uniforms(state: int, n: int) -> np.ndarray:
    out = np.empty(n, np.float64)
    kernels.fill_uniforms(np.uint64(state), out)
    return out


def _synth_nuclide(stream_state: int, gridpoints: int,
                   scatter_range: tuple[float, float],
                   capture_range: tuple[float, float],
                   fission_range: tuple[float, float],
                   force_nonfissile: bool = False) -> NuclideXS:
    g = gridpoints
    n_jitter = max(g - 2, 0)
    u = _uniforms(stream_state, n_jitter + 3 * _N_CTRL + 1)
    lle, lhe = math.log(EMIN), math.log(EMAX)
    if g == 1:
        grid = np.array([EMIN])
    else:
        ll = np.linspace(lle, lhe, g)
        if n_jitter:
            dl = (lhe - lle) / (g - 1)
            ll[1:-1] += (u[:n_jitter] - 0.5) * 0.8 * dl
        grid = np.exp(ll)
        grid[0] = EMIN
        grid[-1] = EMAX
    loggrid = np.log(grid)
    ctrl_pos = np.linspace(lle, lhe, _N_CTRL)

    def channel(uvals, lo, hi):
        vals = lo + uvals * (hi - lo)
        return np.interp(loggrid, ctrl_pos, vals)

    o = n_jitter
    scat = channel(u[o:o + _N_CTRL], *scatter_range)
    capt = channel(u[o + _N_CTRL:o + 2 * _N_CTRL], *capture_range)
    fis = channel(u[o + 2 * _N_CTRL:o + 3 * _N_CTRL], *fission_range)
    fissile = (not force_nonfissile) and u[o + 3 * _N_CTRL] < _FISSILE_FRACTION
    if fissile:
        nu = _NU_FISSILE
    else:
        fis = fis * (_FISSION_FLOOR / fis.max())
        nu = 0.0
    total = scat + capt + fis
    return NuclideXS(grid, total, scat, capt, fis, nu)


def _draw_composition(stream_state: int, n_nuclides: int, k: int,
                      density_range: tuple[float, float],
                      id_offset: int = 0) -> list[tuple[int, float]]:
    """k distinct nuclide ids (ascending) with log-uniform densities."""
    u = _uniforms(stream_state, 2 * k)
    ids = np.arange(n_nuclides)
    for i in range(k):
        j = i + int(u[i] * (n_nuclides - i))
        if j > n_nuclides - 1:
            j = n_nuclides - 1
        ids[i], ids[j] = ids[j], ids[i]
    chosen = np.sort(ids[:k])
    llo, lhi = math.log(density_range[0]), math.log(density_range[1])
    return [(int(nid) + id_offset, math.exp(llo + u[k + i] * (lhi - llo)))
            for i, nid in enumerate(chosen)]


def generate_synthetic_library(n_nuclides: int, gridpoints_per_nuclide: int,
                               n_materials: int, nuclides_per_material: int,
                               seed: int) -> Library:
    """Deterministic synthetic library; same inputs give bit-identical data.

    Roughly 20% of nuclides (seeded coin) are fissionable with nu = 2.43;
    the rest get their fission channel scaled down to a negligible floor and
    nu = 0.  Partial cross sections live in [0.1, 20] barns; densities in
    [1e-4, 1e-1] atoms/(barn cm).
    """
    if n_nuclides < 1 or gridpoints_per_nuclide < 1 or n_materials < 1 \
            or nuclides_per_material < 1:
        raise ConfigurationError("library generation counts must all be >= 1")
    if nuclides_per_material > n_nuclides:
        raise ConfigurationError(
            "nuclides_per_material cannot exceed n_nuclides")
    rng_range = (0.1, 20.0)
    nuclides = [
        _synth_nuclide(skip_ahead(seed, n * STRIDE), gridpoints_per_nuclide,
                       rng_range, rng_range, rng_range)
        for n in range(n_nuclides)
    ]
    materials = [
        Material(m, _draw_composition(
            skip_ahead(seed, (n_nuclides + m) * STRIDE), n_nuclides,
            nuclides_per_material, (1e-4, 1e-1)))
        for m in range(n_materials)
    ]
    return Library(nuclides, materials, generation_seed=seed)


# ======================================================================================
# Lookups
# ======================================================================================


def micro_lookup(nuclide: NuclideXS, energy: float) -> tuple[float, float, float, float]:
    """(total, scatter, capture, fission) at one energy, linearly interpolated.

    Energies off the ends of the grid clamp to the end values.
    """
    if not math.isfinite(energy) or energy <= 0.0:
        raise InvalidEnergyError(f"invalid lookup energy {energy!r}")
    g = nuclide.energy_grid
    return kernels.micro4(g, nuclide.sigma_total, nuclide.sigma_scatter,
                          nuclide.sigma_capture, nuclide.sigma_fission,
                          0, g.shape[0], energy)


def macro_lookup(library: Library, material_id: int, energy: float,
                 accel: str = "binary",
                 index: UnionizedIndex | None = None) -> tuple[MacroXS, np.ndarray]:
    """Macroscopic cross sections of a material at one energy.

    Returns (MacroXS, partials) where partials[k] holds N_k*sigma_x of the
    k-th composition entry (columns t, s, c, f).  Sums accumulate in
    ascending composition order; all three backends are bit-equivalent.
    """
    if not math.isfinite(energy) or energy <= 0.0:
        raise InvalidEnergyError(f"invalid lookup energy {energy!r}")
    if material_id < 0 or material_id >= library.n_materials:
        raise UnknownMaterialError(f"material {material_id} not in library")
    if accel not in ACCEL_CODES:
        raise ConfigurationError(f"unknown lookup backend {accel!r}")
    if accel != "binary":
        if index is None:
            raise ConfigurationError(f"accel={accel!r} requires a UnionizedIndex")
        if accel == "unionized" and index.merged_channels is None:
            merge_channels(library, index)
    lib = library.arrays()
    union = union_tuple(index, accel)
    ncomp = len(library.materials[material_id].composition)
    partials = np.zeros((ncomp, 4), np.float64)
    st, ss, sc, sf, snf = kernels.macro_lookup_full(
        lib, union, ACCEL_CODES[accel], material_id, energy, partials)
    return MacroXS(st, ss, sc, sf, snf), partials


def build_unionized_index(library: Library, merged: bool = False) -> UnionizedIndex:
    """Union grid plus per-nuclide bounding indices (optionally pre-merged).

    ``merged=True`` additionally materializes the bounding channel values on
    the union grid, the storage the unionized backend reads.
    """
    if library.n_nuclides == 0:
        raise ConfigurationError("cannot unionize an empty library")
    grids = [n.energy_grid for n in library.nuclides]
    union = np.unique(np.concatenate(grids))
    nmap = np.empty((union.shape[0], len(grids)), np.int32)
    for n, g in enumerate(grids):
        idx = np.searchsorted(g, union, side="right") - 1
        np.clip(idx, 0, max(g.shape[0] - 2, 0), out=idx)
        nmap[:, n] = idx
    index = UnionizedIndex(union, nmap)
    if merged:
        merge_channels(library, index)
    return index


def merge_channels(library: Library, index: UnionizedIndex) -> None:
    """Fill index.merged_channels with per-union-interval bounding values."""
    u_len = index.union_grid.shape[0]
    n_nuc = library.n_nuclides
    merged = np.empty((u_len, n_nuc, 8), np.float64)
    for n, nuc in enumerate(library.nuclides):
        i0 = index.index_map[:, n].astype(np.int64)
        i1 = np.minimum(i0 + 1, nuc.energy_grid.shape[0] - 1)
        merged[:, n, 0] = nuc.sigma_total[i0]
        merged[:, n, 1] = nuc.sigma_total[i1]
        merged[:, n, 2] = nuc.sigma_scatter[i0]
        merged[:, n, 3] = nuc.sigma_scatter[i1]
        merged[:, n, 4] = nuc.sigma_capture[i0]
        merged[:, n, 5] = nuc.sigma_capture[i1]
        merged[:, n, 6] = nuc.sigma_fission[i0]
        merged[:, n, 7] = nuc.sigma_fission[i1]
    index.merged_channels = merged


# ======================================================================================
# File format (little-endian, see README for the layout)
# ======================================================================================


def _serialize(library: Library, fh) -> None:
    fh.write(_MAGIC)
    fh.write(struct.pack("<II", _VERSION, library.n_nuclides))
    for n in library.nuclides:
        fh.write(struct.pack("<Id", n.energy_grid.shape[0], n.nu))
        fh.write(n.energy_grid.astype("<f8").tobytes())
        fh.write(n.sigma_total.astype("<f8").tobytes())
        fh.write(n.sigma_scatter.astype("<f8").tobytes())
        fh.write(n.sigma_capture.astype("<f8").tobytes())
        fh.write(n.sigma_fission.astype("<f8").tobytes())
    fh.write(struct.pack("<I", library.n_materials))
    for m in library.materials:
        fh.write(struct.pack("<I", len(m.composition)))
        for nid, den in m.composition:
            fh.write(struct.pack("<Id", nid, den))


def save_library(library: Library, path: str) -> None:
    with open(path, "wb") as fh:
        _serialize(library, fh)


def library_bytes(library: Library) -> bytes:
    buf = io.BytesIO()
    _serialize(library, buf)
    return buf.getvalue()


def library_fingerprint(library: Library) -> str:
    return hashlib.sha256(library_bytes(library)).hexdigest()


def load_library(path: str) -> Library:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != _MAGIC:
        raise ConfigurationError(f"{path}: not a library file (bad magic)")
    off = 8
    version, n_nuc = struct.unpack_from("<II", data, off)
    off += 8
    if version != _VERSION:
        raise ConfigurationError(f"{path}: unsupported library version {version}")
    nuclides = []
    for _ in range(n_nuc):
        glen, nu = struct.unpack_from("<Id", data, off)
        off += 12
        arrays = []
        for _ in range(5):
            a = np.frombuffer(data, "<f8", glen, off).copy()
            off += 8 * glen
            arrays.append(a)
        nuclides.append(NuclideXS(arrays[0], arrays[1], arrays[2],
                                  arrays[3], arrays[4], nu))
    (n_mat,) = struct.unpack_from("<I", data, off)
    off += 4
    materials = []
    for m in range(n_mat):
        (n_ent,) = struct.unpack_from("<I", data, off)
        off += 4
        comp = []
        for _ in range(n_ent):
            nid, den = struct.unpack_from("<Id", data, off)
            off += 12
            comp.append((nid, den))
        materials.append(Material(m, comp))
    return Library(nuclides, materials, generation_seed=None)
