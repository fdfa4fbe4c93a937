"""Numerical verification of the inequalities, variational identities and
non-uniqueness constructions satisfied by Gaussian measures of Wulff shapes.

Margins are reported in combined-sigma units so pass thresholds do not
depend on sample counts; deterministic planar estimates get a tiny sigma
floor that absorbs quadrature tolerance.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    MismatchedOmega,
    PeakNotFound,
    StepTooLarge,
    VerificationFailed,
)
from .gaussian import (
    MCConfig,
    MCEstimate,
    cone_gauss_volume_exact,
    covolume,
    covolume_radial,
    exact_estimate,
    facet_surface,
    facet_surface_exact,
    gauss_volume,
    phi_inv,
    sector_cone_volume,
)
from .geometry import (
    _same_frame,
    build_cone,
    combine_support,
    make_wulff,
    normals_from_generators_2d,
)
from .measures import surface_measure, surface_measure_exact

SIGMA_FLOOR = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CheckReport:
    name: str
    lhs: MCEstimate
    rhs: MCEstimate
    margin: float  # (lhs - rhs) in combined-sigma units
    passed: bool
    inputs: str    # digest of the inputs for reproducibility


@dataclass(frozen=True)
class NonUniquenessPair:
    t1: float
    t2: float
    common_value: float
    K: object
    L: object
    kind: str  # "surface" or "cone"


def _digest(*parts):
    hasher = hashlib.sha256()
    for p in parts:
        hasher.update(np.asarray(p, dtype=float).tobytes())
    return hasher.hexdigest()[:16]


def _shape_digest(K):
    return _digest(K.cone.normals, K.omega.dirs, K.defining_h)


def _sigma(lhs, rhs, extra_tol=0.0, scale=None):
    if scale is None:
        scale = max(abs(lhs.value), abs(rhs.value), 1.0)
    sig = math.hypot(lhs.std_err, rhs.std_err)
    return max(sig, extra_tol / 3.0, SIGMA_FLOOR + 1e-9 * scale)


def _report(name, lhs, rhs, digest, mode, extra_tol=0.0):
    sig = _sigma(lhs, rhs, extra_tol)
    margin = (lhs.value - rhs.value) / sig
    if mode == "ge":
        passed = margin >= -3.0
    elif mode == "eq":
        passed = abs(margin) <= 3.0
    else:  # "strict": lhs must clear rhs by more than three sigma
        passed = margin > 3.0
    return CheckReport(name=name, lhs=lhs, rhs=rhs, margin=margin,
                       passed=passed, inputs=digest)


def _volume(K, mc):
    if K.dim == 2:
        return exact_estimate(
            cone_gauss_volume_exact(K.cone) - covolume_radial(K, mc).value
        )
    return gauss_volume(K, mc)


def _surface(K, mc):
    return surface_measure_exact(K) if K.dim == 2 else surface_measure(K, mc)


# ---------------------------------------------------------------------------
# variational identities

def _auto_steps(K, f, count=3):
    f = np.asarray(f, dtype=float)
    nz = np.abs(f) > 0.0
    if not np.any(nz):
        base = 0.1
    else:
        base = 0.1 * float(np.min(K.effective_h[nz] / np.abs(f[nz])))
    return [base / 2.0**k for k in range(count)]


def _fd_derivative(values, steps):
    """Central differences, Richardson-extrapolated on the two finest steps."""
    ds = [
        ((vp.value - vm.value) / (2.0 * t),
         math.hypot(vp.std_err, vm.std_err) / (2.0 * t))
        for t, (vp, vm) in zip(steps, values)
    ]
    if len(ds) == 1:
        return ds[0]
    (d_a, e_a), (d_b, e_b) = ds[-2], ds[-1]
    a, b = steps[-2], steps[-1]
    w = a * a / (a * a - b * b)
    d = w * d_b - (w - 1.0) * d_a
    e = math.hypot(w * e_b, (w - 1.0) * e_a)
    return d, e


def _check_variational(K, f, steps, mc, log_family):
    f = np.asarray(f, dtype=float)
    if steps is None:
        steps = _auto_steps(K, f)
    steps = [float(t) for t in steps]
    hbar = K.effective_h
    values = []
    for t in steps:
        pair = []
        for s in (t, -t):
            h_t = hbar * np.exp(s * f) if log_family else hbar + s * f
            if np.any(h_t <= 0.0):
                raise StepTooLarge(f"support vector loses positivity at step {s}")
            pair.append(_volume(make_wulff(K.cone, K.omega, h_t), mc))
        values.append(pair)
    deriv, deriv_err = _fd_derivative(values, steps)

    s = _surface(K, mc)
    weights = f * (hbar * s.weights if log_family else s.weights)
    errs = f * (hbar * s.std_errs if log_family else s.std_errs)
    pairing = MCEstimate(
        -math.fsum(weights), math.sqrt(math.fsum(errs * errs)),
        mc.n_samples, mc.seed,
    )
    lhs = MCEstimate(deriv, deriv_err, mc.n_samples, mc.seed)
    name = "variational_log" if log_family else "variational_volume"
    return _report(
        name, lhs, pairing, _digest(K.defining_h, f, steps),
        mode="eq", extra_tol=0.01 * abs(pairing.value),
    )


def check_variational_volume(K, f, steps=None, mc=MCConfig()):
    """Volume derivative along h + t f against minus the surface pairing."""
    return _check_variational(K, f, steps, mc, log_family=False)


def check_variational_log(K, f, steps=None, mc=MCConfig()):
    """Volume derivative along h e^{t f} against minus the cone pairing."""
    return _check_variational(K, f, steps, mc, log_family=True)


# ---------------------------------------------------------------------------
# inequalities

def check_minkowski_inequality(K, L, mc=MCConfig()):
    """Support-difference pairing dominates the log-volume difference."""
    if not _same_frame(K, L):
        raise MismatchedOmega("shapes do not share (cone, omega)")
    s = _surface(K, mc)
    vol_k = _volume(K, mc)
    vol_l = _volume(L, mc)
    diff = K.effective_h - L.effective_h
    pairing = math.fsum(diff * s.weights)
    pairing_err = math.sqrt(math.fsum((diff * s.std_errs) ** 2))
    lhs = MCEstimate(
        pairing / vol_k.value,
        math.hypot(pairing_err / vol_k.value,
                   abs(pairing) * vol_k.std_err / vol_k.value**2),
        mc.n_samples, mc.seed,
    )
    rhs = MCEstimate(
        math.log(vol_l.value) - math.log(vol_k.value),
        math.hypot(vol_l.std_err / vol_l.value, vol_k.std_err / vol_k.value),
        mc.n_samples, mc.seed,
    )
    return _report("minkowski_inequality", lhs, rhs,
                   _digest(K.defining_h, L.defining_h), mode="ge")


def check_mixed_minkowski(K, L, mc=MCConfig()):
    """gamma1(K,K) - gamma1(K,L) >= volume(K) log(volume(L)/volume(K))."""
    if not _same_frame(K, L):
        raise MismatchedOmega("shapes do not share (cone, omega)")
    s = _surface(K, mc)
    vol_k = _volume(K, mc)
    vol_l = _volume(L, mc)
    diff = K.effective_h - L.effective_h
    lhs = MCEstimate(
        math.fsum(diff * s.weights),
        math.sqrt(math.fsum((diff * s.std_errs) ** 2)),
        mc.n_samples, mc.seed,
    )
    ratio = math.log(vol_l.value / vol_k.value)
    rhs = MCEstimate(
        vol_k.value * ratio,
        math.hypot(
            ratio * vol_k.std_err,
            vol_k.value * math.hypot(vol_l.std_err / vol_l.value,
                                     vol_k.std_err / vol_k.value),
        ),
        mc.n_samples, mc.seed,
    )
    return _report("mixed_minkowski", lhs, rhs,
                   _digest(K.defining_h, L.defining_h), mode="ge")


def check_log_concavity(K, L, t, mc=MCConfig()):
    """volume of the combined Wulff shape dominates the geometric mean."""
    M = make_wulff(K.cone, K.omega, combine_support(K, L, t))
    vol = [_volume(s, mc) for s in (M, K, L)]
    lhs = MCEstimate(math.log(vol[0].value), vol[0].std_err / vol[0].value,
                     mc.n_samples, mc.seed)
    rhs = MCEstimate(
        (1.0 - t) * math.log(vol[1].value) + t * math.log(vol[2].value),
        math.hypot((1.0 - t) * vol[1].std_err / vol[1].value,
                   t * vol[2].std_err / vol[2].value),
        mc.n_samples, mc.seed,
    )
    return _report("log_concavity", lhs, rhs,
                   _digest(K.defining_h, L.defining_h, [t]), mode="ge")


def check_ehrhard_wulff(K, L, t, mc=MCConfig()):
    """Concavity of the probit of the Gaussian volume along the Wulff
    combination of support vectors; the weaker log-concavity form is
    checked alongside and both must hold."""
    M = make_wulff(K.cone, K.omega, combine_support(K, L, t))
    vols = [_volume(s, mc) for s in (M, K, L)]

    def probit(est):
        x = float(phi_inv(est.value))
        dens = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        return x, est.std_err / max(dens, 1e-300)

    x_m, e_m = probit(vols[0])
    x_k, e_k = probit(vols[1])
    x_l, e_l = probit(vols[2])
    lhs = MCEstimate(x_m, e_m, mc.n_samples, mc.seed)
    rhs = MCEstimate((1.0 - t) * x_k + t * x_l,
                     math.hypot((1.0 - t) * e_k, t * e_l),
                     mc.n_samples, mc.seed)
    rep = _report("ehrhard_wulff", lhs, rhs,
                  _digest(K.defining_h, L.defining_h, [t]), mode="ge")
    weaker = check_log_concavity(K, L, t, mc)
    return CheckReport(name=rep.name, lhs=rep.lhs, rhs=rep.rhs,
                       margin=rep.margin,
                       passed=rep.passed and weaker.passed, inputs=rep.inputs)


def check_cone_volume_bound(K, mc=MCConfig()):
    """Cone measure over n is strictly below the radial sector volume."""
    m = len(K.omega)
    sector_vals, sector_errs = [], []
    for i in range(m):
        if not K.facet_active[i]:
            continue
        est = sector_cone_volume(K, i, mc)
        sector_vals.append(est.value)
        sector_errs.append(est.std_err)
    s = _surface(K, mc)
    cone_w = K.effective_h * s.weights
    cone_e = K.effective_h * s.std_errs
    lhs = MCEstimate(math.fsum(sector_vals),
                     math.sqrt(math.fsum(e * e for e in sector_errs)),
                     mc.n_samples, mc.seed)
    rhs = MCEstimate(math.fsum(cone_w) / K.dim,
                     math.sqrt(math.fsum(cone_e * cone_e)) / K.dim,
                     mc.n_samples, mc.seed)
    return _report("cone_volume_bound", lhs, rhs, _shape_digest(K), mode="strict")


def check_mixed_volume_bound(K, mc=MCConfig()):
    """gamma1(K,K)/n is strictly below the Gaussian covolume of K."""
    s = _surface(K, mc)
    cone_w = K.effective_h * s.weights
    cone_e = K.effective_h * s.std_errs
    lhs_cov = (
        exact_estimate(covolume_radial(K, mc).value)
        if K.dim == 2
        else covolume(K, mc)
    )
    rhs = MCEstimate(math.fsum(cone_w) / K.dim,
                     math.sqrt(math.fsum(cone_e * cone_e)) / K.dim,
                     mc.n_samples, mc.seed)
    return _report("mixed_volume_bound", lhs_cov, rhs, _shape_digest(K),
                   mode="strict")


# ---------------------------------------------------------------------------
# non-uniqueness constructions

def _single_facet_value(cone, dirs, t, kind, mc):
    K = make_wulff(cone, dirs, np.array([t]))
    if cone.dim == 2:
        s = facet_surface_exact(K, 0).value
    else:
        s = facet_surface(K, 0, mc).value
    return t * s if kind == "cone" else s


def _golden_max(f, a, b, tol=1e-10):
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
    x = 0.5 * (a + b)
    return x, f(x)


def _bisect_level(f, target, lo, hi, increasing, tol=1e-13):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            if increasing:
                lo = mid
            else:
                hi = mid
        else:
            if increasing:
                hi = mid
            else:
                lo = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def find_nonuniqueness(cone, b, kind, mc=MCConfig(), rho=0.3):
    """Two distinct single-facet shapes sharing a measure value.

    The per-direction value map rises from zero and decays back to zero,
    so every sub-peak level is hit on both sides of the maximum.  The peak
    is located by golden section (with a dense grid scan as fallback
    bracket) and the two level crossings by bisection; the resulting pair
    is re-verified by independent Monte Carlo at three combined sigma.
    """
    if kind not in ("surface", "cone"):
        raise ValueError("kind must be 'surface' or 'cone'")
    b = np.atleast_2d(np.asarray(b, dtype=float))
    crn = mc.with_samples(max(mc.n_samples, 50_000))

    def val(t):
        return _single_facet_value(cone, b, t, kind, crn)

    t_lo, t_hi = 1e-3, 10.0
    grid = np.geomspace(t_lo, t_hi, 60)
    vals = np.array([val(t) for t in grid])
    k = int(np.argmax(vals))
    if k == 0 or k == len(grid) - 1 or vals[k] <= 0.0:
        raise PeakNotFound("value map shows no interior maximum on the scan range")
    t_peak, v_peak = _golden_max(val, grid[k - 1], grid[k + 1])
    target = (1.0 - rho) * v_peak

    lo = grid[0]
    while val(lo) >= target:
        lo *= 0.5
        if lo < 1e-9:
            raise PeakNotFound("could not get below the level on the left")
    hi = grid[-1]
    while val(hi) >= target:
        hi *= 2.0
        if hi > 1e4:
            raise PeakNotFound("could not get below the level on the right")
    t1 = _bisect_level(val, target, lo, t_peak, increasing=True)
    t2 = _bisect_level(val, target, t_peak, hi, increasing=False)

    v1, v2 = val(t1), val(t2)
    if abs(v1 - v2) > 1e-6 * max(v1, v2):
        raise VerificationFailed("level bisection did not equalize the values")
    if abs(t1 - t2) <= 0.1 * t_peak:
        raise VerificationFailed("pair not separated; peak too flat")

    K = make_wulff(cone, b, np.array([t1]))
    L = make_wulff(cone, b, np.array([t2]))
    est1 = facet_surface(K, 0, mc)
    est2 = facet_surface(L, 0, mc)
    if kind == "cone":
        est1 = MCEstimate(t1 * est1.value, t1 * est1.std_err, mc.n_samples, mc.seed)
        est2 = MCEstimate(t2 * est2.value, t2 * est2.std_err, mc.n_samples, mc.seed)
    sig = _sigma(est1, est2)
    if abs(est1.value - est2.value) > 3.0 * sig:
        raise VerificationFailed(
            f"pair measures disagree beyond 3 sigma ({est1.value} vs {est2.value})"
        )
    return NonUniquenessPair(t1=float(t1), t2=float(t2),
                             common_value=float(0.5 * (v1 + v2)),
                             K=K, L=L, kind=kind)


def uniqueness_compare(K, L, vol_tol=0.01, sup_tol=0.02, mc=MCConfig()):
    """Equal volumes plus proportional surface measures must force K = L.

    When the preconditions hold (volumes within ``vol_tol`` relative and
    surface measures proportional within three sigma), the support vectors
    must agree within ``sup_tol``; a violation would contradict the
    uniqueness theorem and is reported as a failure.  Pairs that miss the
    preconditions pass vacuously.
    """
    if not _same_frame(K, L):
        raise MismatchedOmega("shapes do not share (cone, omega)")
    vol_k = _volume(K, mc)
    vol_l = _volume(L, mc)
    digest = _digest(K.defining_h, L.defining_h)
    vols_match = abs(vol_k.value - vol_l.value) <= vol_tol * max(
        vol_k.value, vol_l.value
    )
    s_k = _surface(K, mc)
    s_l = _surface(L, mc)
    tk, tl = s_k.weights.sum(), s_l.weights.sum()
    proportional = False
    if tk > 0 and tl > 0:
        c = tl / tk
        dev = np.abs(c * s_k.weights - s_l.weights)
        band = 3.0 * np.hypot(c * s_k.std_errs, s_l.std_errs) + SIGMA_FLOOR \
            + 1e-6 * max(tk, tl)
        proportional = bool(np.all(dev <= band))
    max_dev = float(np.max(np.abs(K.effective_h - L.effective_h) / K.effective_h))
    lhs = exact_estimate(max_dev)
    rhs = exact_estimate(sup_tol)
    if not (vols_match and proportional):
        return CheckReport("uniqueness_compare", lhs, rhs, margin=0.0,
                           passed=True, inputs=digest)
    sig = _sigma(lhs, rhs, scale=sup_tol)
    return CheckReport("uniqueness_compare", lhs, rhs,
                       margin=(rhs.value - lhs.value) / sig,
                       passed=max_dev <= sup_tol, inputs=digest)


# ---------------------------------------------------------------------------
# randomized fixtures shared by the verification suites and the tests

def octant_cone(n=3):
    return build_cone(np.eye(n), -np.eye(n))


def quarter_cone():
    """Planar cone between 45 and 135 degrees; Gaussian volume 1/4."""
    s = math.sqrt(0.5)
    return build_cone([[s, s], [-s, s]], [[s, -s], [-s, -s]])


def square_cone():
    """Cone over the unit square at height one."""
    g = np.array([[1, 1, 1], [1, -1, 1], [-1, 1, 1], [-1, -1, 1]]) / math.sqrt(3)
    s = math.sqrt(0.5)
    w = np.array([[s, 0, -s], [-s, 0, -s], [0, s, -s], [0, -s, -s]])
    return build_cone(g, w)


def _rotation(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q *= np.sign(np.diag(r))
    return q


def random_cone(rng, dim):
    if dim == 2:
        lo = rng.uniform(0.0, 2.0 * math.pi)
        width = rng.uniform(0.7, 2.4)
        g = np.array([
            [math.cos(lo), math.sin(lo)],
            [math.cos(lo + width), math.sin(lo + width)],
        ])
        return build_cone(g, normals_from_generators_2d(g))
    base = octant_cone(dim) if (dim != 3 or rng.random() < 0.5) else square_cone()
    rot = _rotation(rng, dim)
    return build_cone(base.generators @ rot.T, base.normals @ rot.T)


def random_direction_set(cone, m, rng, margin=0.02, min_sep=0.15):
    """Directions strictly interior to the dual cone, pairwise separated."""
    w = cone.normals
    dirs = []
    for _ in range(4000):
        lam = rng.dirichlet(np.ones(w.shape[0]))
        u = lam @ w
        u = u / np.linalg.norm(u)
        if np.max(u @ cone.generators.T) >= -margin:
            continue
        if any(np.linalg.norm(u - v) < min_sep for v in dirs):
            continue
        dirs.append(u)
        if len(dirs) == m:
            return np.array(dirs)
    raise PeakNotFound("could not sample enough well-separated directions")


def _facet_acceptance(K, i, rng, n=4096):
    """Quick probe of the tangential acceptance probability of a facet."""
    u = K.omega.dirs[i]
    p = -K.effective_h[i] * u
    _, _, vt = np.linalg.svd(u[None, :])
    B = vt[1:].T
    y = rng.standard_normal((n, K.dim - 1))
    x = p + y @ B.T
    ok = np.all(x @ K.cone.normals.T <= 1e-9, axis=1) & np.all(
        x @ K.omega.dirs.T <= -K.defining_h + 1e-9, axis=1
    )
    return float(np.mean(ok))


def random_wulff(cone, m, rng, min_acceptance=0.05):
    """Random shape with every facet strictly active and carrying mass."""
    for _ in range(200):
        try:
            dirs = random_direction_set(cone, m, rng)
        except PeakNotFound:
            continue
        h = rng.uniform(0.7, 1.6, size=m)
        K = make_wulff(cone, dirs, h)
        if not np.all(K.facet_active):
            continue
        if all(_facet_acceptance(K, i, rng) >= min_acceptance for i in range(m)):
            return K
    raise PeakNotFound("could not generate an all-active random shape")


def random_wulff_pair(cone, m, rng, **kw):
    K = random_wulff(cone, m, rng, **kw)
    h2 = K.defining_h * rng.uniform(0.75, 1.35, size=m)
    L = make_wulff(cone, K.omega, h2)
    return K, L
