"""Pincell geometry with exact surface tracking.

A fuel cylinder sits in a reflective square cell; the fuel is split into
``n_axial`` axial slabs so many distinct fuel materials and tally regions
exist.  The moderator is a single cell.  All outer box planes are
reflective; the cylinder and the axial planes are internal surfaces.

The compiled kernels carry the actual tracking routines; this module holds
the model description plus thin wrappers so the same arithmetic is
exercised by tests and callers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigurationError, GeometryError

#: Default PWR-like dimensions (cm).
DEFAULT_FUEL_RADIUS = 0.4096
DEFAULT_PITCH = 1.26
DEFAULT_HEIGHT = 10.0

_SURFACE_NAMES = {
    kernels.SURF_CYL: "cylinder",
    kernels.SURF_XMIN: "x_min",
    kernels.SURF_XMAX: "x_max",
    kernels.SURF_YMIN: "y_min",
    kernels.SURF_YMAX: "y_max",
    kernels.SURF_ZMIN: "z_min",
    kernels.SURF_ZMAX: "z_max",
}
OUTER_SURFACES = ("x_min", "x_max", "y_min", "y_max", "z_min", "z_max")


def surface_name(code: int) -> str:
    if code >= kernels.SURF_AXIAL_BASE:
        return f"axial_plane({code - kernels.SURF_AXIAL_BASE})"
    return _SURFACE_NAMES[code]


@dataclass(frozen=True)
class CellId:
    kind: str                  # "fuel" or "moderator"
    axial_index: int | None = None


@dataclass(frozen=True)
class BoundaryHit:
    distance: float
    surface: str


@dataclass
class Pincell:
    """Fuel cylinder in a reflective square cell, axially segmented."""

    fuel_radius: float = DEFAULT_FUEL_RADIUS
    pitch: float = DEFAULT_PITCH
    height: float = DEFAULT_HEIGHT
    n_axial: int = 10
    fuel_material_ids: list[int] = field(default_factory=list)
    moderator_material_id: int = 0

    def __post_init__(self):
        if not (0.0 < 2.0 * self.fuel_radius < self.pitch):
            raise ConfigurationError(
                "need 0 < 2*fuel_radius < pitch "
                f"(got radius {self.fuel_radius}, pitch {self.pitch})")
        if self.height <= 0.0:
            raise ConfigurationError("height must be positive")
        if self.n_axial < 1:
            raise ConfigurationError("n_axial must be >= 1")
        if not self.fuel_material_ids:
            self.fuel_material_ids = [0] * self.n_axial
        if len(self.fuel_material_ids) != self.n_axial:
            raise ConfigurationError(
                "fuel_material_ids must have one entry per axial segment")

    def as_tuple(self) -> tuple:
        """Packed scalars/arrays shared with the compiled kernels."""
        n = self.n_axial
        zplanes = np.array([(j * self.height) / n for j in range(n + 1)])
        return (self.fuel_radius, self.fuel_radius * self.fuel_radius,
                self.pitch / 2.0, self.height, np.int64(n), zplanes,
                np.asarray(self.fuel_material_ids, np.int32),
                np.int64(self.moderator_material_id))

    def fingerprint(self) -> str:
        import hashlib
        import struct
        h = hashlib.sha256()
        h.update(struct.pack("<3dq", self.fuel_radius, self.pitch,
                             self.height, self.n_axial))
        h.update(np.asarray(self.fuel_material_ids, np.int64).tobytes())
        h.update(struct.pack("<q", self.moderator_material_id))
        return h.hexdigest()


def locate(cell_model: Pincell, position) -> CellId:
    """Cell containing a position (strict-interior fuel test).

    Raises GeometryError for positions outside the bounding box.
    """
    x, y, z = float(position[0]), float(position[1]), float(position[2])
    kd, ax, _ = kernels.locate_point(x, y, z, cell_model.as_tuple())
    if kd < 0:
        raise GeometryError(f"position {(x, y, z)} outside the cell box")
    if kd == kernels.KIND_FUEL:
        return CellId("fuel", int(ax))
    return CellId("moderator")


def distance_to_boundary(cell_model: Pincell, position, direction,
                         current: CellId) -> BoundaryHit:
    """Minimum positive distance from a cell to its bounding surfaces."""
    norm = float(np.sqrt(sum(float(c) * float(c) for c in direction)))
    if abs(norm - 1.0) > 1e-12:
        raise GeometryError(f"direction must be unit length (|d| = {norm})")
    kd = kernels.KIND_FUEL if current.kind == "fuel" else kernels.KIND_MOD
    ax = current.axial_index if current.kind == "fuel" else -1
    dist, surf = kernels.boundary_distance(
        float(position[0]), float(position[1]), float(position[2]),
        float(direction[0]), float(direction[1]), float(direction[2]),
        kd, int(ax), cell_model.as_tuple())
    if surf < 0:
        raise GeometryError("no positive boundary intersection found")
    return BoundaryHit(float(dist), surface_name(int(surf)))


def apply_boundary(direction, surface: str):
    """Specular reflection d' = d - 2(d.n)n off an outer box plane."""
    if surface not in OUTER_SURFACES:
        raise ValueError(f"{surface} is an internal surface, not reflective")
    d = [float(direction[0]), float(direction[1]), float(direction[2])]
    axis = {"x_min": 0, "x_max": 0, "y_min": 1, "y_max": 1,
            "z_min": 2, "z_max": 2}[surface]
    d[axis] = -d[axis]
    return tuple(d)
