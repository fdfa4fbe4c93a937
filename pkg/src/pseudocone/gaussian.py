"""Gaussian integrals over cones and Wulff shapes.

Every measure-type quantity has two independent estimation paths: an
acceptance/hyperplane Monte Carlo estimator and a radial-transform
estimator over the spherical cross-section of the cone.  In dimension 2
the spherical integrals are done by deterministic adaptive quadrature;
Monte Carlo is used from dimension 3 on.

Estimators are deterministic given (seed, n_samples, estimator identity):
samples are drawn in batches whose RNG streams are keyed by
(seed, estimator tag, batch index) and reduced with order-independent
compensated sums.
"""

from __future__ import annotations

import math
import warnings
import zlib
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (
    DimensionMismatch,
    EmptyOmegaC,
    InactiveFacetWarning,
    InvalidOptions,
)
from .geometry import cone_angle_interval, facet_arcs

SQRT_2PI = math.sqrt(2.0 * math.pi)
MIN_SAMPLES = 1_000
SIMPSON_TOL = 1e-10


@dataclass(frozen=True)
class MCEstimate:
    """Value with its Monte Carlo standard error."""

    value: float
    std_err: float
    n_samples: int
    seed: int


@dataclass(frozen=True)
class MCConfig:
    seed: int = 0
    n_samples: int = 100_000
    batch_size: int = 65_536
    antithetic: bool = True
    direction_sampler: str = "sphere"  # or "gaussian": same law, different draw order

    def __post_init__(self):
        if self.n_samples < MIN_SAMPLES:
            raise InvalidOptions(f"n_samples must be at least {MIN_SAMPLES}")
        if self.batch_size < 1:
            raise InvalidOptions("batch_size must be positive")
        if self.direction_sampler not in ("sphere", "gaussian"):
            raise InvalidOptions("direction_sampler must be 'sphere' or 'gaussian'")

    def with_samples(self, n_samples):
        return MCConfig(
            seed=self.seed,
            n_samples=n_samples,
            batch_size=self.batch_size,
            antithetic=self.antithetic,
            direction_sampler=self.direction_sampler,
        )

    def with_seed(self, seed):
        return MCConfig(
            seed=seed,
            n_samples=self.n_samples,
            batch_size=self.batch_size,
            antithetic=self.antithetic,
            direction_sampler=self.direction_sampler,
        )


def exact_estimate(value, n_samples=0, seed=0):
    """Wrap a deterministic value in the common estimate carrier."""
    return MCEstimate(value=float(value), std_err=0.0, n_samples=n_samples, seed=seed)


def combine_linear(coeffs, estimates):
    """Linear combination with first-order error propagation."""
    value = math.fsum(c * e.value for c, e in zip(coeffs, estimates))
    var = math.fsum((c * e.std_err) ** 2 for c, e in zip(coeffs, estimates))
    n = max(e.n_samples for e in estimates)
    return MCEstimate(value=value, std_err=math.sqrt(var), n_samples=n,
                      seed=estimates[0].seed)


def _tag(name):
    return zlib.crc32(name.encode("utf-8"))


def _rng(seed, tag, batch):
    return np.random.default_rng(
        np.random.SeedSequence((int(seed) & 0xFFFFFFFFFFFFFFFF, tag, batch))
    )


def _mc_expectation(dim, integrand, cfg, tag):
    """Mean and standard error of ``integrand`` over standard Gaussians.

    ``integrand`` maps a (count, dim) batch to (count,) values.  With
    antithetic pairing each unit averages the integrand at (z, -z); units
    stay i.i.d., so the usual error formula applies to the pair means.
    """
    n = cfg.n_samples
    sums = []
    sqsums = []
    done = 0
    batch = 0
    while done < n:
        m = min(cfg.batch_size, n - done)
        z = _rng(cfg.seed, tag, batch).standard_normal((m, dim))
        vals = np.asarray(integrand(z), dtype=float)
        if cfg.antithetic:
            vals = 0.5 * (vals + np.asarray(integrand(-z), dtype=float))
        sums.append(math.fsum(vals))
        sqsums.append(math.fsum(vals * vals))
        done += m
        batch += 1
    total = math.fsum(sums)
    mean = total / n
    var = max(math.fsum(sqsums) - n * mean * mean, 0.0) / max(n - 1, 1)
    return mean, math.sqrt(var / n)


def _sphere_integral(cone, f, cfg, tag):
    """Integral of ``f`` over the unit-sphere patch interior to the cone.

    Directions are uniform on the sphere (normalized Gaussians); the
    surface-measure factor is the full sphere area times the acceptance
    indicator folded into the integrand.
    """
    dim = cone.dim
    area = sphere_area(dim)
    W = cone.normals.T

    def integrand(z):
        if cfg.direction_sampler == "gaussian":
            # accept raw Gaussians inside the cone, then normalize: same law
            inside = np.all(z @ W <= 0.0, axis=1)
            norms = np.maximum(np.linalg.norm(z, axis=1), 1e-300)
            v = z / norms[:, None]
        else:
            norms = np.maximum(np.linalg.norm(z, axis=1), 1e-300)
            v = z / norms[:, None]
            inside = np.all(v @ W <= 0.0, axis=1)
        out = np.zeros(z.shape[0])
        if np.any(inside):
            out[inside] = f(v[inside])
        return out

    mean, err = _mc_expectation(dim, integrand, cfg, tag)
    return area * mean, area * err


def sphere_area(dim):
    """Surface area of the unit sphere in R^dim."""
    return 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)


def phi_cdf(t):
    """Standard normal distribution function."""
    return special.ndtr(t)


def phi_inv(p):
    """Inverse of the standard normal distribution function."""
    return special.ndtri(p)


def radial_mass(R, n):
    """Integral of e^{-r^2/2} r^{n-1} over [0, R].

    Reduces to the regularized lower incomplete gamma function after the
    substitution s = r^2 / 2.
    """
    R = np.asarray(R, dtype=float)
    if np.any(R < 0.0):
        raise ValueError("radius must be nonnegative")
    if n < 1:
        raise ValueError("dimension must be at least 1")
    scale = 2.0 ** (n / 2.0 - 1.0) * math.gamma(n / 2.0)
    return scale * special.gammainc(n / 2.0, 0.5 * R * R)


def adaptive_simpson(f, a, b, tol=SIMPSON_TOL, max_depth=50):
    """Classic recursive adaptive Simpson quadrature."""
    def simpson(x0, x2, f0, f1, f2):
        return (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f1, f2, whole, eps, depth):
        xm = 0.5 * (x0 + x2)
        lm = 0.5 * (x0 + xm)
        rm = 0.5 * (xm + x2)
        fl = f(lm)
        fr = f(rm)
        left = simpson(x0, xm, f0, fl, f1)
        right = simpson(xm, x2, f1, fr, f2)
        if depth >= max_depth or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(x0, xm, f0, fl, f1, left, 0.5 * eps, depth + 1) + recurse(
            xm, x2, f1, fr, f2, right, 0.5 * eps, depth + 1
        )

    if b <= a:
        return 0.0
    mid = 0.5 * (a + b)
    fa, fm, fb = f(a), f(mid), f(b)
    whole = simpson(a, b, fa, fm, fb)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def gauss_volume_cone(cone, mc):
    """Gaussian measure of the cone by acceptance sampling."""
    W = cone.normals.T

    def integrand(z):
        return np.all(z @ W <= 0.0, axis=1).astype(float)

    mean, err = _mc_expectation(cone.dim, integrand, mc, _tag("gauss_volume_cone"))
    return MCEstimate(mean, err, mc.n_samples, mc.seed)


def cone_gauss_volume_exact(cone):
    """Closed form for planar cones: opening angle over the full turn."""
    lo, hi = cone_angle_interval(cone)
    return (hi - lo) / (2.0 * math.pi)


def halfspace_gauss_volume(u, t, mc):
    """Gaussian measure of {x : <x, u> <= t} by acceptance sampling.

    The exact value is the normal distribution function at t; this
    estimator exists to calibrate the sampling machinery.
    """
    u = np.asarray(u, dtype=float)
    dim = u.shape[0]

    def integrand(z):
        return (z @ u <= t).astype(float)

    mean, err = _mc_expectation(dim, integrand, mc, _tag("halfspace"))
    return MCEstimate(mean, err, mc.n_samples, mc.seed)


def covolume(K, mc):
    """Gaussian measure of C \\ K by acceptance sampling."""
    W = K.cone.normals.T
    U = K.omega.dirs.T
    h = K.defining_h

    def integrand(z):
        in_cone = np.all(z @ W <= 0.0, axis=1)
        in_K = in_cone & np.all(z @ U <= -h, axis=1)
        return (in_cone & ~in_K).astype(float)

    mean, err = _mc_expectation(K.dim, integrand, mc, _tag("covolume"))
    return MCEstimate(mean, err, mc.n_samples, mc.seed)


def covolume_radial(K, mc):
    """Covolume through the radial transform.

    The covolume equals (2 pi)^{-n/2} times the integral over the
    spherical patch of the cone of the radial mass up to the entry radius.
    Dimension 2 uses per-facet-arc adaptive quadrature; higher dimensions
    use spherical Monte Carlo.
    """
    n = K.dim
    norm = (2.0 * math.pi) ** (-0.5 * n)
    if n == 2:
        total = 0.0
        for i, a, b in facet_arcs(K):
            u = K.omega.dirs[i]
            hi = K.defining_h[i]

            def f(theta, u=u, hi=hi):
                v = np.array([math.cos(theta), math.sin(theta)])
                rho = hi / max(-(v @ u), 1e-300)
                return float(radial_mass(rho, 2))

            total += adaptive_simpson(f, a, b)
        return exact_estimate(norm * total, seed=mc.seed)

    def f(v):
        rho, _ = _radial_rows(K, v)
        return radial_mass(rho, n)

    val, err = _sphere_integral(K.cone, f, mc, _tag("covolume_radial"))
    if val == 0.0 and err == 0.0:
        raise EmptyOmegaC("no spherical sample landed inside the cone")
    return MCEstimate(norm * val, norm * err, mc.n_samples, mc.seed)


def _radial_rows(K, v):
    denom = np.maximum(-(v @ K.omega.dirs.T), 1e-300)
    ratios = K.defining_h / denom
    return np.max(ratios, axis=1), np.argmax(ratios, axis=1)


def gauss_volume(K, mc):
    """Gaussian volume of K via the covolume identity.

    The volume of the cone and the covolume are estimated on independent
    streams and subtracted; errors propagate in quadrature.  The identity
    volume(K) + covolume(K) = volume(C) therefore holds exactly.
    """
    if K.dim == 2:
        vol_c = exact_estimate(cone_gauss_volume_exact(K.cone), seed=mc.seed)
    else:
        vol_c = gauss_volume_cone(K.cone, mc)
    cov = covolume(K, mc)
    return combine_linear([1.0, -1.0], [vol_c, cov])


def gauss_volume_direct(K, mc):
    """Gaussian volume of K by direct acceptance sampling (second path)."""
    W = K.cone.normals.T
    U = K.omega.dirs.T
    h = K.defining_h

    def integrand(z):
        return (
            np.all(z @ W <= 0.0, axis=1) & np.all(z @ U <= -h, axis=1)
        ).astype(float)

    mean, err = _mc_expectation(K.dim, integrand, mc, _tag("gauss_volume_direct"))
    return MCEstimate(mean, err, mc.n_samples, mc.seed)


def _facet_frame(K, i):
    """Foot point and orthonormal basis of the i-th facet hyperplane."""
    u = K.omega.dirs[i]
    hbar = float(K.effective_h[i])
    p = -hbar * u
    # orthonormal complement of u via SVD of the 1 x n row
    _, _, vt = np.linalg.svd(u[None, :])
    B = vt[1:].T  # (n, n-1)
    return hbar, p, B


def facet_surface(K, i, mc):
    """Gaussian surface area of the i-th facet by hyperplane sampling.

    Factorizes the Gaussian across the facet hyperplane: the normal
    component contributes e^{-h^2/2}/sqrt(2 pi), the tangential component
    the Gaussian acceptance probability of the facet within its
    hyperplane.  Inactive facets carry a zero estimate.
    """
    if not K.facet_active[i]:
        warnings.warn(
            f"facet {i} is inactive; surface weight is exactly 0",
            InactiveFacetWarning,
            stacklevel=2,
        )
        return exact_estimate(0.0, n_samples=mc.n_samples, seed=mc.seed)
    hbar, p, B = _facet_frame(K, i)
    W = K.cone.normals.T
    U = K.omega.dirs.T
    h = K.defining_h
    slack = 1e-9

    def integrand(y):
        x = p + y @ B.T
        ok = np.all(x @ W <= slack, axis=1) & np.all(x @ U <= -h + slack, axis=1)
        return ok.astype(float)

    mean, err = _mc_expectation(K.dim - 1, integrand, mc, _tag(f"facet_surface:{i}"))
    scale = math.exp(-0.5 * hbar * hbar) / SQRT_2PI
    return MCEstimate(scale * mean, scale * err, mc.n_samples, mc.seed)


def facet_surface_exact(K, i):
    """Closed-form facet surface weight for planar shapes.

    In dimension 2 the facet is a segment; its Gaussian acceptance within
    the hyperplane is a difference of normal distribution values.
    """
    if K.dim != 2:
        raise DimensionMismatch("exact facet weights are available in dim 2 only")
    if not K.facet_active[i]:
        return exact_estimate(0.0)
    hbar, p, B = _facet_frame(K, i)
    b = B[:, 0]
    lo, hi = -np.inf, np.inf
    rows = np.vstack([K.cone.normals, K.omega.dirs])
    rhs = np.concatenate([np.zeros(K.cone.normals.shape[0]), -K.defining_h])
    for a, r in zip(rows, rhs):
        const = float(a @ p)
        coef = float(a @ b)
        if abs(coef) < 1e-14:
            if const > r + 1e-12:
                return exact_estimate(0.0)
            continue
        bound = (r - const) / coef
        if coef > 0:
            hi = min(hi, bound)
        else:
            lo = max(lo, bound)
    if hi <= lo:
        return exact_estimate(0.0)
    accept = float(phi_cdf(hi) - phi_cdf(lo))
    return exact_estimate(math.exp(-0.5 * hbar * hbar) / SQRT_2PI * accept)


def surface_radial(K, i, mc):
    """Facet surface weight through the radial transform (second path).

    Integrates e^{-rho^2/2} rho^{n-1} / |<v, u_i>| over the directions
    whose rays first meet the i-th facet.
    """
    n = K.dim
    norm = (2.0 * math.pi) ** (-0.5 * n)
    if n == 2:
        total = 0.0
        for j, a, b in facet_arcs(K):
            if j != i:
                continue
            u = K.omega.dirs[i]
            hi = K.defining_h[i]

            def f(theta, u=u, hi=hi):
                v = np.array([math.cos(theta), math.sin(theta)])
                d = max(-(v @ u), 1e-300)
                rho = hi / d
                return math.exp(-0.5 * rho * rho) * rho / d

            total += adaptive_simpson(f, a, b)
        return exact_estimate(norm * total, seed=mc.seed)

    ui = K.omega.dirs[i]

    def f(v):
        rho, idx = _radial_rows(K, v)
        sel = idx == i
        out = np.zeros(v.shape[0])
        if np.any(sel):
            d = np.maximum(-(v[sel] @ ui), 1e-300)
            r = rho[sel]
            out[sel] = np.exp(-0.5 * r * r) * r ** (K.dim - 1) / d
        return out

    val, err = _sphere_integral(K.cone, f, mc, _tag(f"surface_radial:{i}"))
    return MCEstimate(norm * val, norm * err, mc.n_samples, mc.seed)


def sector_cone_volume(K, i, mc):
    """Gaussian volume of the radial sector over the i-th facet.

    The sector is the union of segments from the origin to the facet; its
    Gaussian volume is the radial mass integrated over the directions
    selecting that facet.
    """
    n = K.dim
    norm = (2.0 * math.pi) ** (-0.5 * n)
    if n == 2:
        total = 0.0
        for j, a, b in facet_arcs(K):
            if j != i:
                continue
            u = K.omega.dirs[i]
            hi = K.defining_h[i]

            def f(theta, u=u, hi=hi):
                v = np.array([math.cos(theta), math.sin(theta)])
                rho = hi / max(-(v @ u), 1e-300)
                return float(radial_mass(rho, 2))

            total += adaptive_simpson(f, a, b)
        return exact_estimate(norm * total, seed=mc.seed)

    def f(v):
        rho, idx = _radial_rows(K, v)
        sel = idx == i
        out = np.zeros(v.shape[0])
        if np.any(sel):
            out[sel] = radial_mass(rho[sel], n)
        return out

    val, err = _sphere_integral(K.cone, f, mc, _tag(f"sector_cone_volume:{i}"))
    return MCEstimate(norm * val, norm * err, mc.n_samples, mc.seed)


def boundary_gauss_integral_2d(cone, mc):
    """(2 pi)^{-1/2} integral of the Gaussian density over both boundary rays.

    Each ray contributes the acceptance probability of a standard normal
    scalar landing on the cone side of the origin (exactly one half), so
    the two rays sum to one for every planar cone.
    """
    if cone.dim != 2:
        raise DimensionMismatch("boundary-ray integral is planar only")
    lo, hi = cone_angle_interval(cone)
    total = []
    for k, ang in enumerate((lo, hi)):
        d = np.array([math.cos(ang), math.sin(ang)])
        W = cone.normals.T

        def integrand(y):
            pts = y[:, :1] * d[None, :]
            return np.all(pts @ W <= 1e-12, axis=1).astype(float)

        mean, err = _mc_expectation(1, integrand, mc, _tag(f"boundary_ray:{k}"))
        total.append(MCEstimate(mean, err, mc.n_samples, mc.seed))
    return combine_linear([1.0, 1.0], total)
