"""Compiled transport kernels.

Everything on the hot path lives here as nopython numba functions operating
on flat structure-of-arrays state.  The two batch drivers at the bottom
(history-based and event-based) compose the same per-event operations, so
the physics arithmetic is defined exactly once; bit-identical results across
executors, lookup backends, in-flight caps, sorting choices, and worker
counts follow from that plus canonical-order reduction (see tally.py).

Conventions that the rest of the package relies on:

  * All random draws go through ``_draw`` (63-bit LCG, one shared stream
    layout with prng.py).  Draws are counted per history; a history that
    reaches the stream stride is an error, never a silent overlap.
  * Interpolation is linear-linear with the bounding interval found so that
    grid[i] <= E < grid[i+1]; energies at/below the first point or at/above
    the last clamp to the tabulated end values.  The three lookup backends
    differ only in how the interval is found, never in the arithmetic.
  * Macroscopic sums accumulate in ascending composition order (canonical
    summation order).
  * Kernels never raise; they record an error code in the counters array
    and return early.  The Python coordinator turns codes into exceptions.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types

# ======================================================================================
# Constants
# ======================================================================================

LCG_MULT = np.uint64(2806196910506780709)
LCG_INC = np.uint64(1)
LCG_MASK = np.uint64((1 << 63) - 1)
U64_ONE = np.uint64(1)
STRIDE = np.uint64(152917)

INV_2_63 = 2.0**-63
BELOW_ONE = 1.0 - 2.0**-53
TWO_PI = 2.0 * np.pi

DIST_EPS = 1e-10       # reject departing-surface roots below this distance
NUDGE = 1e-9           # post-crossing advance along the flight direction
MAX_HIST_LOG = 100000  # runaway-history guard (log entries per history)

# Surface enumeration (also the tie-break order, lowest wins)
SURF_CYL = 0
SURF_XMIN = 1
SURF_XMAX = 2
SURF_YMIN = 3
SURF_YMAX = 4
SURF_ZMIN = 5
SURF_ZMAX = 6
SURF_AXIAL_BASE = 7    # axial plane j (at z = j*height/n_axial) is 7 + j

KIND_FUEL = 0
KIND_MOD = 1

# Lookup acceleration backends
ACCEL_BINARY = 0
ACCEL_DOUBLE = 1
ACCEL_UNIONIZED = 2

# Score enumeration within a region's bin block
SCORE_FLUX = 0
SCORE_TOTAL = 1
SCORE_ABSORPTION = 2
SCORE_FISSION = 3
SCORE_NU_FISSION = 4
N_SCORES = 5

# Routing / outcome codes
ROUTE_ERROR = -1
ROUTE_COLLISION = 0
ROUTE_LOOKUP = 1
OUT_SCATTER = 0
OUT_DIED = 1

# Counters array layout (int64)
CNT_LOG_N = 0           # log entries used
CNT_SITE_N = 1          # fission sites banked
CNT_OVF = 2             # 0 ok / 1 log buffer full / 2 site buffer full
CNT_ERR = 3             # error code (see ERR_*)
CNT_ERR_AUX = 4         # offending particle gid
CNT_CAPTURES = 5
CNT_FISSIONS = 6
CNT_SOURCED = 7
CNT_MAX_DRAWS = 8       # max draws consumed by a single finished history
CNT_CLAMPS = 9          # energy clamps to the grid range
CNT_INTERP_TRANSPORT = 10   # channel interpolations in lookup/collision paths
CNT_INTERP_SCORE = 11       # channel interpolations in the scoring path
CNT_EV_LOOKUP = 12
CNT_EV_ADVANCE = 13
CNT_EV_COLLISION = 14
CNT_INV_LOOKUP = 15     # kernel invocations (event mode sweeps)
CNT_INV_ADVANCE = 16
CNT_INV_COLLISION = 17
CNT_SORTS = 18
CNT_MAX_INFLIGHT = 19
CNT_MAX_HIST_LOG = 20   # max log entries appended by a single history
N_COUNTERS = 24

OVF_LOG = 1
OVF_SITES = 2

ERR_NO_SURFACE = 1
ERR_OUTSIDE_BOX = 2
ERR_STREAM_OVERLAP = 3
ERR_RUNAWAY_HISTORY = 4
ERR_QUEUE_STATE = 5
ERR_NONPOSITIVE_SIGMA = 6

# Timings array layout (float64 seconds)
TM_LOOKUP = 0
TM_ADVANCE = 1
TM_COLLISION = 2
TM_SORT = 3
N_TIMINGS = 4

_CLOCK_MONOTONIC = 1
_clock_gettime = types.ExternalFunction(
    "clock_gettime", types.int32(types.int32, types.uintp))


@njit(cache=True)
def _now(ts):
    """Monotonic wall clock in seconds; ts is a 2-element int64 scratch."""
    _clock_gettime(_CLOCK_MONOTONIC, ts.ctypes.data)
    return ts[0] + ts[1] * 1e-9


# ======================================================================================
# PRNG core (compiled twin of prng.py; pinned against it in the test suite)
# ======================================================================================


@njit(cache=True)
def lcg_next(s):
    return (LCG_MULT * s + LCG_INC) & LCG_MASK


@njit(cache=True)
def lcg_skip(state, n):
    acc_mult = U64_ONE
    acc_add = np.uint64(0)
    cur_mult = LCG_MULT
    cur_add = LCG_INC
    n = n & LCG_MASK
    while n > 0:
        if n & U64_ONE:
            acc_mult = (acc_mult * cur_mult) & LCG_MASK
            acc_add = (acc_add * cur_mult + cur_add) & LCG_MASK
        cur_add = (cur_add * (cur_mult + U64_ONE)) & LCG_MASK
        cur_mult = (cur_mult * cur_mult) & LCG_MASK
        n = n >> U64_ONE
    return (acc_mult * state + acc_add) & LCG_MASK


@njit(cache=True)
def _draw(rng, draws, i):
    s = lcg_next(rng[i])
    rng[i] = s
    draws[i] += 1
    u = s * INV_2_63
    if u >= 1.0:
        u = BELOW_ONE
    return u


@njit(cache=True)
def fill_uniforms(state, out):
    """Fill ``out`` with consecutive draws; returns the advanced state."""
    s = state
    for i in range(out.shape[0]):
        s = (LCG_MULT * s + LCG_INC) & LCG_MASK
        u = s * INV_2_63
        if u >= 1.0:
            u = BELOW_ONE
        out[i] = u
    return s


# ======================================================================================
# Micro/macro cross-section lookups
#
# lib tuple: (grid_off, grids, ch_t, ch_s, ch_c, ch_f, nu, mat_off, mat_nuc,
#             mat_den, emin, emax)
# union tuple: (ugrid, umap, umerged)
# ======================================================================================


@njit(cache=True)
def micro4(grids, ch_t, ch_s, ch_c, ch_f, g0, g1, E):
    """Interpolate the four channels of one nuclide via binary search."""
    lo = grids[g0]
    hi = grids[g1 - 1]
    if E <= lo:
        return ch_t[g0], ch_s[g0], ch_c[g0], ch_f[g0]
    if E >= hi:
        p = g1 - 1
        return ch_t[p], ch_s[p], ch_c[p], ch_f[p]
    i = g0 + np.searchsorted(grids[g0:g1], E, side="right") - 1
    e0 = grids[i]
    e1 = grids[i + 1]
    f = (E - e0) / (e1 - e0)
    t = ch_t[i] + f * (ch_t[i + 1] - ch_t[i])
    s = ch_s[i] + f * (ch_s[i + 1] - ch_s[i])
    c = ch_c[i] + f * (ch_c[i + 1] - ch_c[i])
    fi = ch_f[i] + f * (ch_f[i + 1] - ch_f[i])
    return t, s, c, fi


@njit(cache=True)
def _micro4_mapped(grids, ch_t, ch_s, ch_c, ch_f, umap, j, nid, g0, g1, E):
    """Same channels, bounding interval read from the union-grid index map."""
    lo = grids[g0]
    hi = grids[g1 - 1]
    if E <= lo:
        return ch_t[g0], ch_s[g0], ch_c[g0], ch_f[g0]
    if E >= hi:
        p = g1 - 1
        return ch_t[p], ch_s[p], ch_c[p], ch_f[p]
    i = g0 + umap[j, nid]
    e0 = grids[i]
    e1 = grids[i + 1]
    f = (E - e0) / (e1 - e0)
    t = ch_t[i] + f * (ch_t[i + 1] - ch_t[i])
    s = ch_s[i] + f * (ch_s[i + 1] - ch_s[i])
    c = ch_c[i] + f * (ch_c[i + 1] - ch_c[i])
    fi = ch_f[i] + f * (ch_f[i + 1] - ch_f[i])
    return t, s, c, fi


@njit(cache=True)
def _micro4_merged(grids, ch_t, ch_s, ch_c, ch_f, umap, umerged, j, nid, g0, g1, E):
    """Same channels, bounding values read from pre-merged union storage."""
    lo = grids[g0]
    hi = grids[g1 - 1]
    if E <= lo:
        return ch_t[g0], ch_s[g0], ch_c[g0], ch_f[g0]
    if E >= hi:
        p = g1 - 1
        return ch_t[p], ch_s[p], ch_c[p], ch_f[p]
    i = g0 + umap[j, nid]
    e0 = grids[i]
    e1 = grids[i + 1]
    f = (E - e0) / (e1 - e0)
    t = umerged[j, nid, 0] + f * (umerged[j, nid, 1] - umerged[j, nid, 0])
    s = umerged[j, nid, 2] + f * (umerged[j, nid, 3] - umerged[j, nid, 2])
    c = umerged[j, nid, 4] + f * (umerged[j, nid, 5] - umerged[j, nid, 4])
    fi = umerged[j, nid, 6] + f * (umerged[j, nid, 7] - umerged[j, nid, 6])
    return t, s, c, fi


@njit(cache=True)
def _micro3_scf(grids, ch_s, ch_c, ch_f, g0, g1, E):
    """Scatter/capture/fission channels of one nuclide (channel sampling)."""
    lo = grids[g0]
    hi = grids[g1 - 1]
    if E <= lo:
        return ch_s[g0], ch_c[g0], ch_f[g0]
    if E >= hi:
        p = g1 - 1
        return ch_s[p], ch_c[p], ch_f[p]
    i = g0 + np.searchsorted(grids[g0:g1], E, side="right") - 1
    e0 = grids[i]
    e1 = grids[i + 1]
    f = (E - e0) / (e1 - e0)
    s = ch_s[i] + f * (ch_s[i + 1] - ch_s[i])
    c = ch_c[i] + f * (ch_c[i + 1] - ch_c[i])
    fi = ch_f[i] + f * (ch_f[i + 1] - ch_f[i])
    return s, c, fi


@njit(cache=True)
def _union_interval(ugrid, E):
    j = np.searchsorted(ugrid, E, side="right") - 1
    if j < 0:
        j = 0
    elif j > ugrid.shape[0] - 2:
        j = ugrid.shape[0] - 2
    return j


@njit(cache=True)
def macro_lookup_full(lib, union, accel, m, E, part_out):
    """Macroscopic lookup returning all five sums and the full partial list.

    part_out has shape (composition_len, 4) and receives N_i*sigma_x per
    nuclide in composition order (t, s, c, f columns).  Used by the public
    API; the batch drivers use _op_lookup which retains only the total
    partials it needs.
    """
    grid_off, grids, ch_t, ch_s, ch_c, ch_f, nu_arr, mat_off, mat_nuc, mat_den, emin, emax = lib
    ugrid, umap, umerged = union
    e0 = mat_off[m]
    e1 = mat_off[m + 1]
    j = 0
    if accel != ACCEL_BINARY:
        j = _union_interval(ugrid, E)
    st = 0.0
    ss = 0.0
    sc = 0.0
    sf = 0.0
    snf = 0.0
    for k in range(e0, e1):
        nid = mat_nuc[k]
        den = mat_den[k]
        g0 = grid_off[nid]
        g1 = grid_off[nid + 1]
        if accel == ACCEL_UNIONIZED:
            t, s, c, f = _micro4_merged(grids, ch_t, ch_s, ch_c, ch_f, umap,
                                        umerged, j, nid, g0, g1, E)
        elif accel == ACCEL_DOUBLE:
            t, s, c, f = _micro4_mapped(grids, ch_t, ch_s, ch_c, ch_f, umap,
                                        j, nid, g0, g1, E)
        else:
            t, s, c, f = micro4(grids, ch_t, ch_s, ch_c, ch_f, g0, g1, E)
        pt = den * t
        st += pt
        ss += den * s
        sc += den * c
        sf += den * f
        snf += den * nu_arr[nid] * f
        part_out[k - e0, 0] = pt
        part_out[k - e0, 1] = den * s
        part_out[k - e0, 2] = den * c
        part_out[k - e0, 3] = den * f
    return st, ss, sc, sf, snf


@njit(cache=True)
def _macro_reassemble_tcf(E, m, lib):
    """Total/capture/fission macro sums by re-looping the composition.

    The naive tally path; arithmetic and order are identical to the cached
    assembly, so the values are bit-equal to it (backend equivalence makes
    the plain binary search interchangeable here).
    """
    grid_off, grids, ch_t, ch_s, ch_c, ch_f, nu_arr, mat_off, mat_nuc, mat_den, emin, emax = lib
    e0 = mat_off[m]
    e1 = mat_off[m + 1]
    st = 0.0
    sc = 0.0
    sf = 0.0
    snf = 0.0
    for k in range(e0, e1):
        nid = mat_nuc[k]
        den = mat_den[k]
        g0 = grid_off[nid]
        g1 = grid_off[nid + 1]
        lo = grids[g0]
        hi = grids[g1 - 1]
        if E <= lo:
            t = ch_t[g0]
            c = ch_c[g0]
            f = ch_f[g0]
        elif E >= hi:
            p = g1 - 1
            t = ch_t[p]
            c = ch_c[p]
            f = ch_f[p]
        else:
            i = g0
            bb = g1 - 1
            while bb - i > 1:
                mid = (i + bb) >> 1
                if grids[mid] <= E:
                    i = mid
                else:
                    bb = mid
            fr = (E - grids[i]) / (grids[i + 1] - grids[i])
            t = ch_t[i] + fr * (ch_t[i + 1] - ch_t[i])
            c = ch_c[i] + fr * (ch_c[i + 1] - ch_c[i])
            f = ch_f[i] + fr * (ch_f[i + 1] - ch_f[i])
        st += den * t
        sc += den * c
        sf += den * f
        snf += den * nu_arr[nid] * f
    return st, sc, sf, snf


# ======================================================================================
# Geometry
#
# geom tuple: (radius, r2, half_pitch, height, n_axial, zplanes, fuel_mats,
#              mod_mat)
# ======================================================================================


@njit(cache=True)
def _axial_index(z, n_axial, height):
    a = np.int64((z * n_axial) / height)
    if a < 0:
        a = 0
    elif a > n_axial - 1:
        a = n_axial - 1
    return a


@njit(cache=True)
def locate_point(x, y, z, geom):
    """Cell containing a point: (kind, axial_index, material_id).

    Returns kind -1 for points outside the bounding box.
    """
    radius, r2, hp, height, n_axial, zplanes, fuel_mats, mod_mat = geom
    if x < -hp or x > hp or y < -hp or y > hp or z < 0.0 or z > height:
        return -1, -1, -1
    if x * x + y * y < r2:
        a = _axial_index(z, n_axial, height)
        return KIND_FUEL, a, np.int64(fuel_mats[a])
    return KIND_MOD, -1, mod_mat


@njit(cache=True)
def boundary_distance(x, y, z, ux, uy, uz, kd, ax, geom):
    """Minimum positive distance to a bounding surface of the current cell.

    Candidate surfaces are scanned in the fixed enumeration order (cylinder,
    x_min, x_max, y_min, y_max, z_min, z_max, axial planes) with strict
    comparisons, so ties resolve to the earliest surface.  Returns
    (distance, surface) or surface -1 when nothing intersects.
    """
    radius, r2, hp, height, n_axial, zplanes, fuel_mats, mod_mat = geom
    best = np.inf
    surf = np.int64(-1)
    if kd == KIND_FUEL:
        a = ux * ux + uy * uy
        if a > 0.0:
            b = 2.0 * (x * ux + y * uy)
            c = x * x + y * y - r2
            disc = b * b - 4.0 * a * c
            if disc > 0.0:
                t = (-b + np.sqrt(disc)) / (2.0 * a)
                if t > DIST_EPS and t < best:
                    best = t
                    surf = SURF_CYL
        if uz > 0.0:
            t = (zplanes[ax + 1] - z) / uz
            if t > DIST_EPS and t < best:
                best = t
                surf = SURF_ZMAX if ax == n_axial - 1 else SURF_AXIAL_BASE + ax + 1
        elif uz < 0.0:
            t = (zplanes[ax] - z) / uz
            if t > DIST_EPS and t < best:
                best = t
                surf = SURF_ZMIN if ax == 0 else SURF_AXIAL_BASE + ax
    else:
        a = ux * ux + uy * uy
        if a > 0.0:
            b = 2.0 * (x * ux + y * uy)
            c = x * x + y * y - r2
            disc = b * b - 4.0 * a * c
            if disc > 0.0:
                t = (-b - np.sqrt(disc)) / (2.0 * a)
                if t > DIST_EPS and t < best:
                    best = t
                    surf = SURF_CYL
        if ux > 0.0:
            t = (hp - x) / ux
            if t > DIST_EPS and t < best:
                best = t
                surf = SURF_XMAX
        elif ux < 0.0:
            t = (-hp - x) / ux
            if t > DIST_EPS and t < best:
                best = t
                surf = SURF_XMIN
        if uy > 0.0:
            t = (hp - y) / uy
            if t > DIST_EPS and t < best:
                best = t
                surf = SURF_YMAX
        elif uy < 0.0:
            t = (-hp - y) / uy
            if t > DIST_EPS and t < best:
                best = t
                surf = SURF_YMIN
        if uz > 0.0:
            t = (height - z) / uz
            if t > DIST_EPS and t < best:
                best = t
                surf = SURF_ZMAX
        elif uz < 0.0:
            t = (0.0 - z) / uz
            if t > DIST_EPS and t < best:
                best = t
                surf = SURF_ZMIN
    return best, surf


@njit(cache=True)
def isotropic_from_u(u1, u2):
    """Unit direction from two uniforms: mu = 2u1-1, phi = 2*pi*u2."""
    mu = 2.0 * u1 - 1.0
    phi = TWO_PI * u2
    s = np.sqrt(1.0 - mu * mu)
    return s * np.cos(phi), s * np.sin(phi), mu


# ======================================================================================
# Contribution log and fission-site appends
# ======================================================================================


@njit(cache=True)
def _log_append(logbuf, counters, g, ordctr, histlog, i, binidx, val):
    """Append one (bin, value) entry; exact zeros are suppressed."""
    if val == 0.0:
        return 0
    log_gid, log_ord, log_bin, log_val = logbuf
    n = counters[CNT_LOG_N]
    if n >= log_gid.shape[0]:
        counters[CNT_OVF] = OVF_LOG
        return -1
    log_gid[n] = g
    log_ord[n] = ordctr[i]
    log_bin[n] = binidx
    log_val[n] = val
    counters[CNT_LOG_N] = n + 1
    ordctr[i] += 1
    histlog[i] += 1
    if histlog[i] > MAX_HIST_LOG:
        counters[CNT_ERR] = ERR_RUNAWAY_HISTORY
        counters[CNT_ERR_AUX] = g
        return -1
    return 0


@njit(cache=True)
def _site_append(sitebuf, counters, parent, ordinal, x, y, z, ux, uy, uz, E):
    st_parent, st_ord, st_x, st_y, st_z, st_dx, st_dy, st_dz, st_E = sitebuf
    n = counters[CNT_SITE_N]
    if n >= st_parent.shape[0]:
        counters[CNT_OVF] = OVF_SITES
        return -1
    st_parent[n] = parent
    st_ord[n] = ordinal
    st_x[n] = x
    st_y[n] = y
    st_z[n] = z
    st_dx[n] = ux
    st_dy[n] = uy
    st_dz[n] = uz
    st_E[n] = E
    counters[CNT_SITE_N] = n + 1
    return 0


@njit(cache=True)
def _clamp_energy(E, emin, emax, counters):
    if E < emin:
        counters[CNT_CLAMPS] += 1
        return emin
    if E > emax:
        counters[CNT_CLAMPS] += 1
        return emax
    return E


# ======================================================================================
# Per-event operations
#
# slots tuple: (px, py, pz, dx, dy, dz, en, wt, rng, draws, gid, ordctr,
#               histlog, kind, axial, mat, cm_t, cm_s, cm_c, cm_f, cm_nsf,
#               part_t)
# ======================================================================================


@njit(cache=True)
def _op_lookup(i, slots, lib, union, accel, fused, counters):
    """Assemble the macroscopic cross sections of the particle's cell.

    One loop body per backend (the expressions are identical; only the
    interval search differs), kept inline because a call per nuclide costs
    more than the interpolation itself.
    """
    (px, py, pz, dx, dy, dz, en, wt, rng, draws, gid, ordctr, histlog,
     kind, axial, mat, cm_t, cm_s, cm_c, cm_f, cm_nsf, part_t) = slots
    grid_off, grids, ch_t, ch_s, ch_c, ch_f, nu_arr, mat_off, mat_nuc, mat_den, emin, emax = lib
    ugrid, umap, umerged = union
    E = en[i]
    m = mat[i]
    e0 = mat_off[m]
    e1 = mat_off[m + 1]
    st = 0.0
    ss = 0.0
    sc = 0.0
    sf = 0.0
    snf = 0.0
    if accel == ACCEL_BINARY:
        for k in range(e0, e1):
            nid = mat_nuc[k]
            den = mat_den[k]
            g0 = grid_off[nid]
            g1 = grid_off[nid + 1]
            lo = grids[g0]
            hi = grids[g1 - 1]
            if E <= lo:
                t = ch_t[g0]
                s = ch_s[g0]
                c = ch_c[g0]
                f = ch_f[g0]
            elif E >= hi:
                p = g1 - 1
                t = ch_t[p]
                s = ch_s[p]
                c = ch_c[p]
                f = ch_f[p]
            else:
                ii = g0
                bb = g1 - 1
                while bb - ii > 1:
                    mid = (ii + bb) >> 1
                    if grids[mid] <= E:
                        ii = mid
                    else:
                        bb = mid
                fr = (E - grids[ii]) / (grids[ii + 1] - grids[ii])
                t = ch_t[ii] + fr * (ch_t[ii + 1] - ch_t[ii])
                s = ch_s[ii] + fr * (ch_s[ii + 1] - ch_s[ii])
                c = ch_c[ii] + fr * (ch_c[ii + 1] - ch_c[ii])
                f = ch_f[ii] + fr * (ch_f[ii + 1] - ch_f[ii])
            pt = den * t
            st += pt
            ss += den * s
            sc += den * c
            sf += den * f
            snf += den * nu_arr[nid] * f
            if fused:
                part_t[i, k - e0] = pt
    elif accel == ACCEL_DOUBLE:
        j = _union_interval(ugrid, E)
        for k in range(e0, e1):
            nid = mat_nuc[k]
            den = mat_den[k]
            g0 = grid_off[nid]
            g1 = grid_off[nid + 1]
            lo = grids[g0]
            hi = grids[g1 - 1]
            if E <= lo:
                t = ch_t[g0]
                s = ch_s[g0]
                c = ch_c[g0]
                f = ch_f[g0]
            elif E >= hi:
                p = g1 - 1
                t = ch_t[p]
                s = ch_s[p]
                c = ch_c[p]
                f = ch_f[p]
            else:
                ii = g0 + umap[j, nid]
                fr = (E - grids[ii]) / (grids[ii + 1] - grids[ii])
                t = ch_t[ii] + fr * (ch_t[ii + 1] - ch_t[ii])
                s = ch_s[ii] + fr * (ch_s[ii + 1] - ch_s[ii])
                c = ch_c[ii] + fr * (ch_c[ii + 1] - ch_c[ii])
                f = ch_f[ii] + fr * (ch_f[ii + 1] - ch_f[ii])
            pt = den * t
            st += pt
            ss += den * s
            sc += den * c
            sf += den * f
            snf += den * nu_arr[nid] * f
            if fused:
                part_t[i, k - e0] = pt
    else:
        j = _union_interval(ugrid, E)
        for k in range(e0, e1):
            nid = mat_nuc[k]
            den = mat_den[k]
            g0 = grid_off[nid]
            g1 = grid_off[nid + 1]
            lo = grids[g0]
            hi = grids[g1 - 1]
            if E <= lo:
                t = ch_t[g0]
                s = ch_s[g0]
                c = ch_c[g0]
                f = ch_f[g0]
            elif E >= hi:
                p = g1 - 1
                t = ch_t[p]
                s = ch_s[p]
                c = ch_c[p]
                f = ch_f[p]
            else:
                ii = g0 + umap[j, nid]
                fr = (E - grids[ii]) / (grids[ii + 1] - grids[ii])
                t = umerged[j, nid, 0] + fr * (umerged[j, nid, 1] - umerged[j, nid, 0])
                s = umerged[j, nid, 2] + fr * (umerged[j, nid, 3] - umerged[j, nid, 2])
                c = umerged[j, nid, 4] + fr * (umerged[j, nid, 5] - umerged[j, nid, 4])
                f = umerged[j, nid, 6] + fr * (umerged[j, nid, 7] - umerged[j, nid, 6])
            pt = den * t
            st += pt
            ss += den * s
            sc += den * c
            sf += den * f
            snf += den * nu_arr[nid] * f
            if fused:
                part_t[i, k - e0] = pt
    cm_t[i] = st
    cm_s[i] = ss
    cm_c[i] = sc
    cm_f[i] = sf
    cm_nsf[i] = snf
    counters[CNT_INTERP_TRANSPORT] += 4 * (e1 - e0)


@njit(cache=True)
def _op_advance(i, slots, lib, geom, logbuf, wbins, counters,
                score, fused, use_logs):
    """Free flight: sample a collision distance against the boundary.

    Scores track-length tallies for the flown segment, moves the particle,
    and either routes to collision or crosses the surface (reflecting on
    outer planes) and routes back to lookup.
    """
    (px, py, pz, dx, dy, dz, en, wt, rng, draws, gid, ordctr, histlog,
     kind, axial, mat, cm_t, cm_s, cm_c, cm_f, cm_nsf, part_t) = slots
    grid_off, grids, ch_t, ch_s, ch_c, ch_f, nu_arr, mat_off, mat_nuc, mat_den, emin, emax = lib
    radius, r2, hp, height, n_axial, zplanes, fuel_mats, mod_mat = geom

    sig_t = cm_t[i]
    if sig_t <= 0.0:
        counters[CNT_ERR] = ERR_NONPOSITIVE_SIGMA
        counters[CNT_ERR_AUX] = gid[i]
        return ROUTE_ERROR
    u = _draw(rng, draws, i)
    d_coll = -np.log(1.0 - u) / sig_t
    dist, surf = boundary_distance(px[i], py[i], pz[i], dx[i], dy[i], dz[i],
                                   kind[i], axial[i], geom)
    if surf < 0:
        counters[CNT_ERR] = ERR_NO_SURFACE
        counters[CNT_ERR_AUX] = gid[i]
        return ROUTE_ERROR
    if d_coll < dist:
        ell = d_coll
        crossing = False
    else:
        ell = dist
        crossing = True

    if score:
        region = np.int64(axial[i]) if kind[i] == KIND_FUEL else n_axial
        base = region * N_SCORES
        fl = wt[i] * ell
        if fused:
            v_tot = fl * sig_t
            v_abs = fl * (cm_c[i] + cm_f[i])
            v_fis = fl * cm_f[i]
            v_nsf = fl * cm_nsf[i]
        else:
            # reassemble the macro channels by re-looping the composition in
            # the identical canonical order (this is the cost fused removes)
            m = mat[i]
            st2, sc2, sf2, snf2 = _macro_reassemble_tcf(en[i], m, lib)
            counters[CNT_INTERP_SCORE] += 3 * (mat_off[m + 1] - mat_off[m])
            v_tot = fl * st2
            v_abs = fl * (sc2 + sf2)
            v_fis = fl * sf2
            v_nsf = fl * snf2
        if use_logs:
            g = gid[i]
            _log_append(logbuf, counters, g, ordctr, histlog, i, base + SCORE_FLUX, fl)
            _log_append(logbuf, counters, g, ordctr, histlog, i, base + SCORE_TOTAL, v_tot)
            _log_append(logbuf, counters, g, ordctr, histlog, i, base + SCORE_ABSORPTION, v_abs)
            _log_append(logbuf, counters, g, ordctr, histlog, i, base + SCORE_FISSION, v_fis)
            _log_append(logbuf, counters, g, ordctr, histlog, i, base + SCORE_NU_FISSION, v_nsf)
            if counters[CNT_OVF] != 0 or counters[CNT_ERR] != 0:
                return ROUTE_ERROR
        else:
            wbins[base + SCORE_FLUX] += fl
            wbins[base + SCORE_TOTAL] += v_tot
            wbins[base + SCORE_ABSORPTION] += v_abs
            wbins[base + SCORE_FISSION] += v_fis
            wbins[base + SCORE_NU_FISSION] += v_nsf

    px[i] += dx[i] * ell
    py[i] += dy[i] * ell
    pz[i] += dz[i] * ell
    if not crossing:
        return ROUTE_COLLISION

    if SURF_XMIN <= surf <= SURF_ZMAX:
        # outer plane: specular reflection is an exact component flip
        if surf == SURF_XMIN or surf == SURF_XMAX:
            dx[i] = -dx[i]
        elif surf == SURF_YMIN or surf == SURF_YMAX:
            dy[i] = -dy[i]
        else:
            dz[i] = -dz[i]
    # nudge past the surface along the (possibly reflected) direction
    px[i] += dx[i] * NUDGE
    py[i] += dy[i] * NUDGE
    pz[i] += dz[i] * NUDGE
    if surf == SURF_CYL:
        if kind[i] == KIND_FUEL:
            kind[i] = KIND_MOD
            axial[i] = -1
        else:
            kind[i] = KIND_FUEL
            axial[i] = np.int32(_axial_index(pz[i], n_axial, height))
    elif surf >= SURF_AXIAL_BASE:
        jpl = surf - SURF_AXIAL_BASE
        axial[i] = np.int32(jpl if dz[i] > 0.0 else jpl - 1)
    mat[i] = fuel_mats[axial[i]] if kind[i] == KIND_FUEL else np.int32(mod_mat)
    return ROUTE_LOOKUP


@njit(cache=True)
def _op_collision(i, slots, lib, logbuf, sitebuf, wbins, counters,
                  alpha, fission_t, k_run, kbin, fused, use_logs):
    """Collision: record the k contribution, pick a nuclide and channel.

    Scatter re-orients isotropically and degrades energy; capture kills;
    fission kills and banks floor(nu/k_run + u) sites at the collision
    point.
    """
    (px, py, pz, dx, dy, dz, en, wt, rng, draws, gid, ordctr, histlog,
     kind, axial, mat, cm_t, cm_s, cm_c, cm_f, cm_nsf, part_t) = slots
    grid_off, grids, ch_t, ch_s, ch_c, ch_f, nu_arr, mat_off, mat_nuc, mat_den, emin, emax = lib

    st = cm_t[i]
    g = gid[i]
    kval = wt[i] * (cm_nsf[i] / st)
    if use_logs:
        if _log_append(logbuf, counters, g, ordctr, histlog, i, kbin, kval) < 0:
            return ROUTE_ERROR
    else:
        wbins[kbin] += kval

    E = en[i]
    m = mat[i]
    e0 = mat_off[m]
    e1 = mat_off[m + 1]
    u1 = _draw(rng, draws, i)
    tgt = u1 * st
    cum = 0.0
    ksel = e1 - 1
    pt_sel = 0.0
    if fused:
        for k in range(e0, e1):
            pt = part_t[i, k - e0]
            pt_sel = pt
            if cum + pt > tgt:
                ksel = k
                break
            cum += pt
    else:
        # no retained partial list: re-interpolate the total channel per
        # nuclide while walking (values bit-equal to the fused ones)
        for k in range(e0, e1):
            nid = mat_nuc[k]
            g0 = grid_off[nid]
            g1 = grid_off[nid + 1]
            lo = grids[g0]
            hi = grids[g1 - 1]
            if E <= lo:
                t = ch_t[g0]
            elif E >= hi:
                t = ch_t[g1 - 1]
            else:
                ii = g0
                bb = g1 - 1
                while bb - ii > 1:
                    mid = (ii + bb) >> 1
                    if grids[mid] <= E:
                        ii = mid
                    else:
                        bb = mid
                fr = (E - grids[ii]) / (grids[ii + 1] - grids[ii])
                t = ch_t[ii] + fr * (ch_t[ii + 1] - ch_t[ii])
            pt = mat_den[k] * t
            counters[CNT_INTERP_TRANSPORT] += 1
            pt_sel = pt
            if cum + pt > tgt:
                ksel = k
                break
            cum += pt

    nid_sel = mat_nuc[ksel]
    den_sel = mat_den[ksel]
    g0 = grid_off[nid_sel]
    g1 = grid_off[nid_sel + 1]
    s_s, s_c, s_f = _micro3_scf(grids, ch_s, ch_c, ch_f, g0, g1, E)
    counters[CNT_INTERP_TRANSPORT] += 3
    ps = den_sel * s_s
    pc = den_sel * s_c
    u2 = _draw(rng, draws, i)
    tgt2 = u2 * pt_sel

    if tgt2 < ps:
        u3 = _draw(rng, draws, i)
        u4 = _draw(rng, draws, i)
        nx, ny, nz = isotropic_from_u(u3, u4)
        dx[i] = nx
        dy[i] = ny
        dz[i] = nz
        u5 = _draw(rng, draws, i)
        ep = E * (alpha + (1.0 - alpha) * u5)
        en[i] = _clamp_energy(ep, emin, emax, counters)
        return OUT_SCATTER
    if tgt2 < ps + pc:
        counters[CNT_CAPTURES] += 1
        return OUT_DIED
    counters[CNT_FISSIONS] += 1
    nu_sel = nu_arr[nid_sel]
    u5 = _draw(rng, draws, i)
    nsites = np.int64(np.floor(nu_sel / k_run + u5))
    for ms in range(nsites):
        ua = _draw(rng, draws, i)
        ub = _draw(rng, draws, i)
        sx, sy, sz = isotropic_from_u(ua, ub)
        uc = _draw(rng, draws, i)
        es = _clamp_energy(-fission_t * np.log(1.0 - uc), emin, emax, counters)
        if _site_append(sitebuf, counters, g, ms, px[i], py[i], pz[i],
                        sx, sy, sz, es) < 0:
            return ROUTE_ERROR
    return OUT_DIED


@njit(cache=True)
def _op_source(i, g, slots, lib, geom, src, batch0,
               seed, batch, pmax, fission_t, counters, perturb_gid):
    """Initialize slot i with particle g of this batch.

    Batch 0 samples position uniformly in the fuel cylinder (rejection in
    the bounding square), an isotropic direction, and a fission-spectrum
    energy; later batches copy phase space from the resampled bank.  The
    RNG stream depends only on (seed, batch, g).
    """
    (px, py, pz, dx, dy, dz, en, wt, rng, draws, gid, ordctr, histlog,
     kind, axial, mat, cm_t, cm_s, cm_c, cm_f, cm_nsf, part_t) = slots
    grid_off, grids, ch_t, ch_s, ch_c, ch_f, nu_arr, mat_off, mat_nuc, mat_den, emin, emax = lib
    radius, r2, hp, height, n_axial, zplanes, fuel_mats, mod_mat = geom

    offset = (np.uint64(batch) * np.uint64(pmax) + np.uint64(g)) * STRIDE
    s0 = lcg_skip(np.uint64(seed), offset)
    if g == perturb_gid:
        s0 = s0 ^ U64_ONE
    rng[i] = s0
    draws[i] = 0
    ordctr[i] = 0
    histlog[i] = 0
    gid[i] = g
    wt[i] = 1.0

    if batch0:
        x = 0.0
        y = 0.0
        while True:
            u1 = _draw(rng, draws, i)
            u2 = _draw(rng, draws, i)
            x = (2.0 * u1 - 1.0) * radius
            y = (2.0 * u2 - 1.0) * radius
            if x * x + y * y < r2:
                break
            if draws[i] >= STRIDE:
                counters[CNT_ERR] = ERR_STREAM_OVERLAP
                counters[CNT_ERR_AUX] = g
                return -1
        z = _draw(rng, draws, i) * height
        ua = _draw(rng, draws, i)
        ub = _draw(rng, draws, i)
        nx, ny, nz = isotropic_from_u(ua, ub)
        ue = _draw(rng, draws, i)
        e = _clamp_energy(-fission_t * np.log(1.0 - ue), emin, emax, counters)
        px[i] = x
        py[i] = y
        pz[i] = z
        dx[i] = nx
        dy[i] = ny
        dz[i] = nz
        en[i] = e
    else:
        sx, sy, sz, sdx, sdy, sdz, se = src
        px[i] = sx[g]
        py[i] = sy[g]
        pz[i] = sz[g]
        dx[i] = sdx[g]
        dy[i] = sdy[g]
        dz[i] = sdz[g]
        en[i] = se[g]
    kd, ax, mid = locate_point(px[i], py[i], pz[i], geom)
    if kd < 0:
        counters[CNT_ERR] = ERR_OUTSIDE_BOX
        counters[CNT_ERR_AUX] = g
        return -1
    kind[i] = np.int8(kd)
    axial[i] = np.int32(ax)
    mat[i] = np.int32(mid)
    return 0


@njit(cache=True)
def _finish_history(i, slots, counters):
    (px, py, pz, dx, dy, dz, en, wt, rng, draws, gid, ordctr, histlog,
     kind, axial, mat, cm_t, cm_s, cm_c, cm_f, cm_nsf, part_t) = slots
    if draws[i] > counters[CNT_MAX_DRAWS]:
        counters[CNT_MAX_DRAWS] = draws[i]
    if histlog[i] > counters[CNT_MAX_HIST_LOG]:
        counters[CNT_MAX_HIST_LOG] = histlog[i]


# ======================================================================================
# Lookup-queue sort (stable, by current material id then energy)
# ======================================================================================


@njit(cache=True)
def sort_queue(q, n, mat, en):
    """Stable in-place sort of q[:n] by (material of cell, energy ascending).

    Two stable argsort passes compose into a stable lexicographic sort.
    """
    ekey = np.empty(n, np.float64)
    mkey = np.empty(n, np.int64)
    for t in range(n):
        s = q[t]
        ekey[t] = en[s]
        mkey[t] = mat[s]
    o1 = np.argsort(ekey, kind="mergesort")
    mk2 = np.empty(n, np.int64)
    for t in range(n):
        mk2[t] = mkey[o1[t]]
    o2 = np.argsort(mk2, kind="mergesort")
    tmp = np.empty(n, q.dtype)
    for t in range(n):
        tmp[t] = q[o1[o2[t]]]
    for t in range(n):
        q[t] = tmp[t]


# ======================================================================================
# Batch drivers
# ======================================================================================


@njit(cache=True, nogil=True)
def run_history_batch(assigned, slots, lib, union, geom, src, logbuf, sitebuf,
                      wbins, counters, timings, ts,
                      seed, batch, pmax, alpha, fission_t, k_run,
                      accel, fused, score, use_logs, batch0, perturb_gid):
    """Transport every assigned particle birth to death, one at a time."""
    (px, py, pz, dx, dy, dz, en, wt, rng, draws, gid, ordctr, histlog,
     kind, axial, mat, cm_t, cm_s, cm_c, cm_f, cm_nsf, part_t) = slots
    for ai in range(assigned.shape[0]):
        if _op_source(0, assigned[ai], slots, lib, geom, src, batch0,
                      seed, batch, pmax, fission_t, counters, perturb_gid) < 0:
            return
        counters[CNT_SOURCED] += 1
        alive = True
        while alive:
            t0 = _now(ts)
            _op_lookup(0, slots, lib, union, accel, fused, counters)
            t1 = _now(ts)
            timings[TM_LOOKUP] += t1 - t0
            counters[CNT_EV_LOOKUP] += 1
            counters[CNT_INV_LOOKUP] += 1
            r = _op_advance(0, slots, lib, geom, logbuf, wbins, counters,
                            score, fused, use_logs)
            t2 = _now(ts)
            timings[TM_ADVANCE] += t2 - t1
            counters[CNT_EV_ADVANCE] += 1
            counters[CNT_INV_ADVANCE] += 1
            if r == ROUTE_ERROR:
                return
            if r == ROUTE_COLLISION:
                rc = _op_collision(0, slots, lib, logbuf, sitebuf, wbins,
                                   counters, alpha, fission_t, k_run,
                                   wbins.shape[0] - 1, fused, use_logs)
                t3 = _now(ts)
                timings[TM_COLLISION] += t3 - t2
                counters[CNT_EV_COLLISION] += 1
                counters[CNT_INV_COLLISION] += 1
                if rc == ROUTE_ERROR:
                    return
                if rc == OUT_DIED:
                    alive = False
            if draws[0] >= STRIDE:
                counters[CNT_ERR] = ERR_STREAM_OVERLAP
                counters[CNT_ERR_AUX] = gid[0]
                return
        _finish_history(0, slots, counters)
    counters[CNT_MAX_INFLIGHT] = 1


@njit(cache=True, nogil=True)
def run_event_batch(assigned, slots, lib, union, geom, src, logbuf, sitebuf,
                    wbins, counters, timings, ts,
                    seed, batch, pmax, alpha, fission_t, k_run,
                    accel, fused, score, use_logs,
                    sort_enabled, sort_every, batch0, perturb_gid):
    """Event-mode transport with queues, an in-flight cap, and refilling.

    The slot arrays bound the in-flight population.  Each scheduler step
    runs the kernel of the largest queue (ties: lookup > advance >
    collision) over the whole queue; deaths immediately refill from the
    remaining source indices in ascending order.
    """
    (px, py, pz, dx, dy, dz, en, wt, rng, draws, gid, ordctr, histlog,
     kind, axial, mat, cm_t, cm_s, cm_c, cm_f, cm_nsf, part_t) = slots
    nslots = px.shape[0]
    n_assigned = assigned.shape[0]
    q_look = np.empty(nslots, np.int32)
    q_adv = np.empty(nslots, np.int32)
    q_col = np.empty(nslots, np.int32)
    nl = 0
    na = 0
    nc = 0
    cursor = 0
    inflight = 0
    while cursor < n_assigned and inflight < nslots:
        if _op_source(inflight, assigned[cursor], slots, lib, geom, src,
                      batch0, seed, batch, pmax, fission_t, counters,
                      perturb_gid) < 0:
            return
        q_look[nl] = inflight
        nl += 1
        cursor += 1
        inflight += 1
        counters[CNT_SOURCED] += 1
    if inflight > counters[CNT_MAX_INFLIGHT]:
        counters[CNT_MAX_INFLIGHT] = inflight
    look_inv = 0
    kbin = wbins.shape[0] - 1

    while nl + na + nc > 0:
        if nl >= na and nl >= nc:
            if sort_enabled and nl > 1 and look_inv % sort_every == 0:
                t0 = _now(ts)
                sort_queue(q_look, nl, mat, en)
                timings[TM_SORT] += _now(ts) - t0
                counters[CNT_SORTS] += 1
            look_inv += 1
            t0 = _now(ts)
            for qi in range(nl):
                s = q_look[qi]
                _op_lookup(s, slots, lib, union, accel, fused, counters)
                q_adv[na] = s
                na += 1
            timings[TM_LOOKUP] += _now(ts) - t0
            counters[CNT_EV_LOOKUP] += nl
            counters[CNT_INV_LOOKUP] += 1
            nl = 0
        elif na >= nc:
            t0 = _now(ts)
            n_sweep = na
            for qi in range(n_sweep):
                s = q_adv[qi]
                r = _op_advance(s, slots, lib, geom, logbuf, wbins, counters,
                                score, fused, use_logs)
                if r == ROUTE_ERROR:
                    return
                if draws[s] >= STRIDE:
                    counters[CNT_ERR] = ERR_STREAM_OVERLAP
                    counters[CNT_ERR_AUX] = gid[s]
                    return
                if r == ROUTE_COLLISION:
                    q_col[nc] = s
                    nc += 1
                else:
                    q_look[nl] = s
                    nl += 1
            timings[TM_ADVANCE] += _now(ts) - t0
            counters[CNT_EV_ADVANCE] += n_sweep
            counters[CNT_INV_ADVANCE] += 1
            na = 0
        else:
            t0 = _now(ts)
            n_sweep = nc
            for qi in range(n_sweep):
                s = q_col[qi]
                rc = _op_collision(s, slots, lib, logbuf, sitebuf, wbins,
                                   counters, alpha, fission_t, k_run, kbin,
                                   fused, use_logs)
                if rc == ROUTE_ERROR:
                    return
                if draws[s] >= STRIDE:
                    counters[CNT_ERR] = ERR_STREAM_OVERLAP
                    counters[CNT_ERR_AUX] = gid[s]
                    return
                if rc == OUT_SCATTER:
                    q_look[nl] = s
                    nl += 1
                else:
                    _finish_history(s, slots, counters)
                    inflight -= 1
                    if cursor < n_assigned:
                        if _op_source(s, assigned[cursor], slots, lib, geom,
                                      src, batch0, seed, batch, pmax,
                                      fission_t, counters, perturb_gid) < 0:
                            return
                        cursor += 1
                        inflight += 1
                        counters[CNT_SOURCED] += 1
                        q_look[nl] = s
                        nl += 1
            timings[TM_COLLISION] += _now(ts) - t0
            counters[CNT_EV_COLLISION] += n_sweep
            counters[CNT_INV_COLLISION] += 1
            nc = 0
        if nl + na + nc != inflight:
            counters[CNT_ERR] = ERR_QUEUE_STATE
            return
        if inflight > counters[CNT_MAX_INFLIGHT]:
            counters[CNT_MAX_INFLIGHT] = inflight


# ======================================================================================
# Canonical-order log replay (deterministic reduction)
# ======================================================================================


@njit(cache=True)
def replay_into_bins(bins, binidx, vals):
    """Accumulate entries into bins strictly in the given order."""
    for e in range(binidx.shape[0]):
        bins[binidx[e]] += vals[e]
