"""Build a synthetic cross-section library and exercise the three lookup
backends.

The library is a pure function of its generation parameters: same inputs,
bit-identical data. Lookups are linear-linear interpolations on per-nuclide
grids; the accelerated backends (union-grid double indexing and full
unionization with pre-merged channel storage) change only how the bounding
interval is found, so all three return bit-identical values.
"""

import numpy as np

from eventmc import (build_unionized_index, generate_synthetic_library,
                     library_fingerprint, macro_lookup, micro_lookup)

# ---------------------------------------------------------------------------
# a small library: 20 nuclides, 200 grid points each, 5 materials
# ---------------------------------------------------------------------------
lib = generate_synthetic_library(
    n_nuclides=20, gridpoints_per_nuclide=200, n_materials=5,
    nuclides_per_material=8, seed=2024)
print(f"library fingerprint: {library_fingerprint(lib)[:32]}...")
print(f"nuclides: {lib.n_nuclides}, materials: {lib.n_materials}")

again = generate_synthetic_library(20, 200, 5, 8, seed=2024)
print("regeneration is bit-identical:",
      library_fingerprint(again) == library_fingerprint(lib))

# ---------------------------------------------------------------------------
# microscopic lookups clamp off-grid and hit tabulated values exactly
# ---------------------------------------------------------------------------
nuc = lib.nuclides[0]
e_grid = nuc.energy_grid
total_at_point, *_ = micro_lookup(nuc, float(e_grid[50]))
print("\nmicro lookup at a grid point is exact:",
      total_at_point == nuc.sigma_total[50])
below, *_ = micro_lookup(nuc, 1e-9)
print("below-grid energies clamp to the first point:",
      below == nuc.sigma_total[0])

# ---------------------------------------------------------------------------
# the three backends agree bit-for-bit
# ---------------------------------------------------------------------------
index = build_unionized_index(lib, merged=True)
print(f"\nunion grid: {index.union_grid.shape[0]} points "
      f"(sum of per-nuclide grids minus shared endpoints)")

rng = np.random.RandomState(7)
energies = np.exp(rng.uniform(np.log(1e-5), np.log(2e7), 2000))
mismatches = 0
for e in energies:
    b, _ = macro_lookup(lib, 2, float(e), "binary")
    d, _ = macro_lookup(lib, 2, float(e), "double_index", index)
    u, _ = macro_lookup(lib, 2, float(e), "unionized", index)
    if not (b.sigma_t == d.sigma_t == u.sigma_t
            and b.nu_sigma_f == d.nu_sigma_f == u.nu_sigma_f):
        mismatches += 1
print(f"backend disagreements over {len(energies)} random lookups: "
      f"{mismatches}")

mx, partials = macro_lookup(lib, 2, 1.0e6)
print(f"\nmaterial 2 at 1 MeV: Sigma_t = {mx.sigma_t:.4f}/cm, "
      f"nu*Sigma_f = {mx.nu_sigma_f:.4f}/cm")
print(f"per-nuclide partial list shape: {partials.shape} "
      "(one row per composition entry: t, s, c, f)")
