"""Polyhedral cones, direction sets and Wulff-shape pseudo-cones.

Conventions used throughout:

* a cone is stored in dual form, ``C = {x : <x, w_j> <= 0 for all j}``,
  together with unit generators whose conic hull is ``C``;
* a Wulff shape for directions ``u_i`` and offsets ``h_i > 0`` is
  ``[h] = C ∩ ⋂_i {x : <x, u_i> <= -h_i}``, an unbounded convex set that
  recedes along ``C`` and excludes the origin;
* the absolute support value of ``[h]`` in direction ``u_i`` is
  ``-sup{<x, u_i> : x in [h]}``; it can exceed ``h_i`` when the i-th
  halfspace is slack ("inactive facet").

All types are immutable after construction and every operation is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    BadReferenceDirection,
    DimensionMismatch,
    DirectionOutsideCone,
    InconsistentDualData,
    LPInfeasible,
    MismatchedOmega,
    NotFullDimensional,
    NotPointed,
    ValidationError,
)
from .simplex import feasible_eq, lp_maximize

EPS_GEOM = 1e-9   # absolute membership slack
EPS_SUP = 1e-7    # relative support-equality tolerance
DELTA_DIR = 1e-6  # strict interiority margin for omega directions
UNIT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ConvexCone:
    """Pointed full-dimensional closed convex cone with dual data."""

    dim: int
    generators: np.ndarray  # (k, dim) unit rays spanning the cone
    normals: np.ndarray     # (p, dim) unit outward facet normals
    ref_dir: np.ndarray     # (dim,) unit vector interior to C and to -C°


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Finite set of unit directions strictly interior to the dual cone."""

    dirs: np.ndarray  # (m, dim)

    def __len__(self):
        return self.dirs.shape[0]


@dataclass(frozen=True, eq=False)
class WulffShape:
    """Wulff shape [h]: the cone truncated by the omega halfspaces."""

    cone: ConvexCone
    omega: DirectionSet
    defining_h: np.ndarray   # (m,) positive offsets handed in
    effective_h: np.ndarray  # (m,) absolute support values of [h]
    facet_active: np.ndarray  # (m,) bool, effective == defining

    @property
    def dim(self):
        return self.cone.dim


def _as_unit_rows(arr, what):
    a = np.atleast_2d(np.asarray(arr, dtype=float))
    norms = np.linalg.norm(a, axis=1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOL):
        raise ValidationError(
            f"{what} must be unit vectors (normalize before passing)", field=what
        )
    return a


def normals_from_generators_2d(generators):
    """Outward facet normals of a planar cone from its generators.

    The rays are sorted by angle; the cone occupies the complement of the
    largest angular gap, which must be wider than pi for pointedness.
    """
    g = _as_unit_rows(generators, "generators")
    if g.shape[1] != 2:
        raise DimensionMismatch("2-d converter called with non-planar input")
    lo, hi = cone_angle_interval_from_rays(g)
    # rotate the extreme rays outward by +/- 90 degrees
    n_lo = np.array([math.cos(lo - 0.5 * math.pi), math.sin(lo - 0.5 * math.pi)])
    n_hi = np.array([math.cos(hi + 0.5 * math.pi), math.sin(hi + 0.5 * math.pi)])
    return np.vstack([n_lo, n_hi])


def cone_angle_interval_from_rays(generators):
    """(theta_lo, theta_hi) spanned by planar rays, width < pi."""
    ang = np.sort(np.arctan2(generators[:, 1], generators[:, 0]))
    gaps = np.diff(np.concatenate([ang, [ang[0] + 2.0 * math.pi]]))
    k = int(np.argmax(gaps))
    width = 2.0 * math.pi - gaps[k]
    if width >= math.pi - 1e-12:
        raise NotPointed("planar cone spans a halfplane or more")
    lo = ang[(k + 1) % len(ang)]
    return lo, lo + width


def cone_angle_interval(cone):
    """Angular interval of a planar cone."""
    if cone.dim != 2:
        raise DimensionMismatch("angular interval is defined for dim 2 only")
    return cone_angle_interval_from_rays(cone.generators)


def build_cone(generators, normals=None, ref_dir=None):
    """Validate dual cone data and fix a reference direction.

    ``normals`` may be omitted in dimension 2, where they are derived by
    sorting the rays by angle.  The reference direction defaults to the
    normalized mean of the generators and is checked to lie interior to
    the cone and to minus the dual cone.
    """
    g = _as_unit_rows(generators, "generators")
    n = g.shape[1]
    if n < 2:
        raise DimensionMismatch("ambient dimension must be at least 2")
    if g.shape[0] < n:
        raise NotFullDimensional("need at least dim generators")
    if np.linalg.matrix_rank(g, tol=1e-10) < n:
        raise NotFullDimensional("generators do not span the ambient space")

    # pointed iff the origin is not a convex combination of the unit rays
    k = g.shape[0]
    A_eq = np.vstack([g.T, np.ones((1, k))])
    b_eq = np.concatenate([np.zeros(n), [1.0]])
    if feasible_eq(A_eq, b_eq):
        raise NotPointed("generators admit a vanishing convex combination")

    if normals is None:
        if n != 2:
            raise InconsistentDualData(
                "normals are required for dim > 2 (converter covers dim 2 only)"
            )
        w = normals_from_generators_2d(g)
    else:
        w = _as_unit_rows(normals, "normals")
        if w.shape[1] != n:
            raise DimensionMismatch("normals and generators disagree on dimension")
        if w.shape[0] < n:
            raise InconsistentDualData("need at least dim facet normals")
    if np.max(g @ w.T) > EPS_GEOM:
        raise InconsistentDualData("some generator violates a normal inequality")

    if ref_dir is None:
        v = g.mean(axis=0)
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            raise BadReferenceDirection("generator mean vanishes; pass ref_dir")
        v = v / nv
    else:
        v = np.asarray(ref_dir, dtype=float)
        if v.shape != (n,):
            raise DimensionMismatch("ref_dir has wrong length")
        nv = np.linalg.norm(v)
        if abs(nv - 1.0) > UNIT_TOL:
            raise ValidationError("ref_dir must be a unit vector", field="ref_dir")
    if np.max(w @ v) >= -1e-12:
        raise BadReferenceDirection("ref_dir not interior to the cone")
    if np.min(g @ v) <= 1e-12:
        raise BadReferenceDirection("ref_dir not interior to minus the dual cone")

    for a in (g, w, v):
        a.setflags(write=False)
    return ConvexCone(dim=n, generators=g, normals=w, ref_dir=v)


def cone_contains(cone, x):
    """Membership in the cone; accepts a single point or a batch (..., dim)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != cone.dim:
        raise DimensionMismatch("point dimension does not match the cone")
    return np.all(x @ cone.normals.T <= EPS_GEOM, axis=-1)


def dual_contains(cone, u):
    """Membership in the dual cone, tested against the generators."""
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != cone.dim:
        raise DimensionMismatch("direction dimension does not match the cone")
    return np.all(u @ cone.generators.T <= EPS_GEOM, axis=-1)


def direction_set(cone, dirs):
    """Validated direction set: distinct unit vectors with a strict margin
    inside the dual cone (``<u, g> < -DELTA_DIR`` for every generator)."""
    u = _as_unit_rows(dirs, "omega")
    if u.shape[1] != cone.dim:
        raise DimensionMismatch("omega dimension does not match the cone")
    if u.shape[0] < 1:
        raise ValidationError("omega must contain at least one direction", field="omega")
    if np.max(u @ cone.generators.T) >= -DELTA_DIR:
        raise ValidationError(
            "omega directions must be strictly interior to the dual cone",
            field="omega",
        )
    m = u.shape[0]
    for i, j in combinations(range(m), 2):
        if np.linalg.norm(u[i] - u[j]) <= 1e-12:
            raise ValidationError("omega directions must be distinct", field="omega")
    u.setflags(write=False)
    return DirectionSet(dirs=u)


def _support_values(cone, dirs, h):
    """Absolute support values of [h] via one LP per direction."""
    m = dirs.shape[0]
    A = np.vstack([cone.normals, dirs])
    b = np.concatenate([np.zeros(cone.normals.shape[0]), -np.asarray(h, dtype=float)])
    out = np.empty(m)
    for i in range(m):
        try:
            _, val = lp_maximize(dirs[i], A, b)
        except LPInfeasible:
            raise LPInfeasible(
                "empty Wulff shape; positive offsets cannot produce this"
            ) from None
        out[i] = -val
    return out


def _validate_h(h, m):
    h = np.asarray(h, dtype=float)
    if h.shape != (m,):
        raise ValidationError("support vector length must match omega", field="h")
    if not np.all(np.isfinite(h)) or np.any(h <= 0.0):
        raise ValidationError("support values must be positive and finite", field="h")
    return h


def make_wulff(cone, omega, h):
    """Wulff shape for (cone, omega, h) with computed effective supports."""
    if not isinstance(omega, DirectionSet):
        omega = direction_set(cone, omega)
    else:
        if omega.dirs.shape[1] != cone.dim:
            raise DimensionMismatch("omega dimension does not match the cone")
    h = _validate_h(h, len(omega))
    eff = np.maximum(_support_values(cone, omega.dirs, h), h)
    active = eff - h <= EPS_SUP * np.maximum(1.0, h)
    for a in (h, eff, active):
        a.setflags(write=False)
    return WulffShape(
        cone=cone, omega=omega, defining_h=h, effective_h=eff, facet_active=active
    )


def effective_support(K):
    """Absolute support values of K on omega (componentwise >= defining)."""
    return K.effective_h


def contains(K, x):
    """Membership in the Wulff shape; single point or batch (..., dim)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != K.cone.dim:
        raise DimensionMismatch("point dimension does not match the shape")
    in_cone = np.all(x @ K.cone.normals.T <= EPS_GEOM, axis=-1)
    in_slabs = np.all(x @ K.omega.dirs.T <= -K.defining_h + EPS_GEOM, axis=-1)
    return in_cone & in_slabs


def radial(K, v):
    """Entry radius of the ray through v and the index attaining it.

    For interior directions the ray meets the boundary on the facet of the
    attaining direction; ties are broken by the lowest index (a null set,
    harmless for integration).
    """
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != K.cone.dim:
        raise DimensionMismatch("direction dimension does not match the shape")
    if np.any(v @ K.cone.normals.T > EPS_GEOM):
        raise DirectionOutsideCone("radial direction must lie inside the cone")
    denom = -(v @ K.omega.dirs.T)
    if np.any(denom <= 0.0):
        raise DirectionOutsideCone("direction degenerate against omega")
    ratios = K.defining_h / denom
    rho = np.max(ratios, axis=-1)
    idx = np.argmax(ratios, axis=-1)
    if v.ndim == 1:
        return float(rho), int(idx)
    return rho, idx


def _radial_batch(K, v):
    """Radial values/indices for rows already known to lie in the cone."""
    denom = -(v @ K.omega.dirs.T)
    denom = np.maximum(denom, 1e-300)
    ratios = K.defining_h / denom
    return np.max(ratios, axis=-1), np.argmax(ratios, axis=-1)


def _same_frame(K, L):
    return (
        K.cone is L.cone or (
            K.cone.dim == L.cone.dim
            and K.cone.normals.shape == L.cone.normals.shape
            and np.allclose(K.cone.normals, L.cone.normals)
        )
    ) and (
        K.omega is L.omega
        or (
            K.omega.dirs.shape == L.omega.dirs.shape
            and np.allclose(K.omega.dirs, L.omega.dirs)
        )
    )


def combine_support(K, L, t):
    """Componentwise (1-t)*support(K) + t*support(L) on the shared omega."""
    if not _same_frame(K, L):
        raise MismatchedOmega("shapes do not share (cone, omega)")
    if not 0.0 <= t <= 1.0:
        raise ValidationError("interpolation parameter must lie in [0, 1]", field="t")
    return (1.0 - t) * K.effective_h + t * L.effective_h


def scale_shape(K, lam):
    """The dilate lam*K, again a Wulff shape on the same omega."""
    if lam <= 0.0:
        raise ValidationError("scale factor must be positive", field="lam")
    return make_wulff(K.cone, K.omega, lam * K.defining_h)


def wulff_vertices(K):
    """All vertices of K by brute-force enumeration of constraint subsets.

    Intended as an oracle at desk scale (dim <= 4); cost grows like
    C(#constraints, dim).
    """
    n = K.cone.dim
    A = np.vstack([K.cone.normals, K.omega.dirs])
    b = np.concatenate([np.zeros(K.cone.normals.shape[0]), -K.defining_h])
    verts = []
    seen = set()
    for rows in combinations(range(A.shape[0]), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        if np.all(A @ x <= b + 1e-9 * np.maximum(1.0, np.abs(b))):
            key = tuple(np.round(x, 9))
            if key not in seen:
                seen.add(key)
                verts.append(x)
    return np.array(verts) if verts else np.empty((0, n))


def facet_arcs(K):
    """Angular arcs of the active facets of a planar Wulff shape.

    Returns a list of ``(index, theta_lo, theta_hi)``; the arcs partition
    the angular interval of the cone up to their shared endpoints.
    """
    if K.cone.dim != 2:
        raise DimensionMismatch("facet arcs are defined for dim 2 only")
    lo, _ = cone_angle_interval(K.cone)
    verts = wulff_vertices(K)
    if verts.shape[0] == 0:
        raise LPInfeasible("no vertices found; invalid shape")
    arcs = []
    for i in range(len(K.omega)):
        resid = verts @ K.omega.dirs[i] + K.defining_h[i]
        on_facet = verts[np.abs(resid) <= 1e-8 * max(1.0, K.defining_h[i])]
        if on_facet.shape[0] < 2:
            continue
        ang = np.arctan2(on_facet[:, 1], on_facet[:, 0])
        # unwrap into the cone's frame so arcs never straddle the branch
        # cut; the small buffer keeps endpoints sitting exactly on the
        # lower boundary ray from wrapping a full turn
        ang = lo + np.mod(ang - lo + 0.1, 2.0 * math.pi) - 0.1
        a, bnd = float(np.min(ang)), float(np.max(ang))
        if bnd - a > 1e-12:
            arcs.append((i, a, bnd))
    arcs.sort(key=lambda rec: rec[1])
    return arcs
