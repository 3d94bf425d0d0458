"""Built-in problems.

``depleted_pincell`` is the benchmark preset: a fuel library of 251 nuclides
(every fuel material carries all of them, burnup-style), a 3-nuclide
light-water-like moderator, and one distinct fuel material and tally region
per axial segment.  ``analytic_infinite_medium`` is a single-nuclide
constant-cross-section problem whose k-infinity is known in closed form.
"""

from __future__ import annotations

import numpy as np

from .geometry import Pincell
from .prng import STRIDE, skip_ahead
from .xslib import Library, Material, NuclideXS, _draw_composition, _synth_nuclide

DEFAULT_FUEL_NUCLIDES = 251
DEFAULT_MODERATOR_NUCLIDES = 3
DEFAULT_GRIDPOINTS = 100
DEFAULT_N_AXIAL = 100

# Channel magnitude ranges (barns), all within the generator's [0.1, 20]
# envelope, shaped so the preset sits near criticality with short histories.
_FUEL_SCATTER = (2.0, 8.0)
_FUEL_CAPTURE = (0.3, 2.5)
_FUEL_FISSION = (1.5, 8.0)
_MOD_SCATTER = (3.0, 8.0)
_MOD_CAPTURE = (0.1, 0.5)
_FUEL_DENSITY = (6.0e-4, 6.0e-3)       # atoms/(barn cm) per nuclide entry
_MOD_DENSITY = (3.0e-2, 9.0e-2)


def depleted_pincell(n_fuel_nuclides: int = DEFAULT_FUEL_NUCLIDES,
                     n_moderator_nuclides: int = DEFAULT_MODERATOR_NUCLIDES,
                     gridpoints: int = DEFAULT_GRIDPOINTS,
                     n_axial: int = DEFAULT_N_AXIAL,
                     seed: int = 1) -> tuple[Library, Pincell]:
    """Depleted-pincell benchmark model.

    Materials 0..n_axial-1 are fuel (each with all fuel nuclides but its own
    density draws, so every axial segment is a distinct material and tally
    region); material n_axial is the moderator.
    """
    nuclides: list[NuclideXS] = []
    for n in range(n_fuel_nuclides):
        nuclides.append(_synth_nuclide(
            skip_ahead(seed, n * STRIDE), gridpoints,
            _FUEL_SCATTER, _FUEL_CAPTURE, _FUEL_FISSION))
    for n in range(n_moderator_nuclides):
        nuclides.append(_synth_nuclide(
            skip_ahead(seed, (n_fuel_nuclides + n) * STRIDE), gridpoints,
            _MOD_SCATTER, _MOD_CAPTURE, _MOD_CAPTURE,
            force_nonfissile=True))

    n_nuc = n_fuel_nuclides + n_moderator_nuclides
    materials: list[Material] = []
    for m in range(n_axial):
        comp = _draw_composition(
            skip_ahead(seed, (n_nuc + m) * STRIDE), n_fuel_nuclides,
            n_fuel_nuclides, _FUEL_DENSITY)
        materials.append(Material(m, comp))
    mod_comp = _draw_composition(
        skip_ahead(seed, (n_nuc + n_axial) * STRIDE), n_moderator_nuclides,
        n_moderator_nuclides, _MOD_DENSITY, id_offset=n_fuel_nuclides)
    materials.append(Material(n_axial, mod_comp))

    library = Library(nuclides, materials, generation_seed=seed)
    pincell = Pincell(n_axial=n_axial,
                      fuel_material_ids=list(range(n_axial)),
                      moderator_material_id=n_axial)
    return library, pincell


def analytic_infinite_medium() -> tuple[Library, Pincell]:
    """Single nuclide, constant cross sections, reflective everywhere.

    sigma_s = 2, sigma_c = 0.5, sigma_f = 0.5 barns at unit density with
    nu = 2.43, and the moderator filled with the same material, so the cell
    is a uniform infinite medium with

        k_inf = nu * sigma_f / (sigma_c + sigma_f) = 1.215
    """
    grid = np.array([1.0e-5, 2.0e7])
    nuc = NuclideXS(
        energy_grid=grid,
        sigma_total=np.array([3.0, 3.0]),
        sigma_scatter=np.array([2.0, 2.0]),
        sigma_capture=np.array([0.5, 0.5]),
        sigma_fission=np.array([0.5, 0.5]),
        nu=2.43,
    )
    library = Library([nuc], [Material(0, [(0, 1.0)])])
    pincell = Pincell(n_axial=1, fuel_material_ids=[0],
                      moderator_material_id=0)
    return library, pincell


ANALYTIC_K_INF = 2.43 * 0.5 / (0.5 + 0.5)
