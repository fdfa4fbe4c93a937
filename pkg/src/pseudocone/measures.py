"""Discrete measures on omega and the variational functionals built on them.

The Gaussian surface area measure restricts to the omega directions for
shapes determined by omega; the Gaussian cone measure is the surface
measure reweighted by the absolute support values.  Estimated measures
carry per-weight standard errors; target measures handed to the solvers
are exact and carry none.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import MismatchedOmega, ValidationError, ZeroVolume
from .gaussian import MCEstimate, facet_surface, facet_surface_exact, gauss_volume
from .geometry import DirectionSet, _same_frame, make_wulff


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Nonnegative weights on the directions of an omega set."""

    omega: DirectionSet
    weights: np.ndarray
    std_errs: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (len(self.omega),):
            raise ValidationError("weight count must match omega", field="weights")
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValidationError(
                "weights must be finite and nonnegative", field="weights"
            )
        object.__setattr__(self, "weights", w)

    @property
    def total(self):
        return float(np.sum(self.weights))

    def is_nonzero(self):
        return bool(np.any(self.weights > 0.0))


def surface_measure(K, mc):
    """Gaussian surface area measure of K restricted to omega."""
    m = len(K.omega)
    weights = np.zeros(m)
    errs = np.zeros(m)
    for i in range(m):
        if not K.facet_active[i]:
            continue
        est = facet_surface(K, i, mc)
        weights[i] = est.value
        errs[i] = est.std_err
    return DiscreteMeasure(omega=K.omega, weights=weights, std_errs=errs)


def surface_measure_exact(K):
    """Deterministic surface measure for planar shapes."""
    m = len(K.omega)
    weights = np.array([facet_surface_exact(K, i).value for i in range(m)])
    return DiscreteMeasure(omega=K.omega, weights=weights, std_errs=np.zeros(m))


def cone_measure(K, mc):
    """Gaussian cone measure: support-weighted surface measure.

    Reuses the surface estimates, so the identity C = h_bar * S holds
    exactly, weight by weight.
    """
    s = surface_measure(K, mc)
    hbar = K.effective_h
    return DiscreteMeasure(
        omega=K.omega, weights=hbar * s.weights, std_errs=hbar * s.std_errs
    )


def mixed_volume(K, L, mc):
    """Gaussian mixed volume: support values of L against the surface of K."""
    if not _same_frame(K, L):
        raise MismatchedOmega("shapes do not share (cone, omega)")
    s = surface_measure(K, mc)
    value = math.fsum(L.effective_h * s.weights)
    err = math.sqrt(math.fsum((L.effective_h * s.std_errs) ** 2))
    return MCEstimate(value, err, mc.n_samples, mc.seed)


def functional_I(mu, h, cone, mc):
    """Volume-times-linear-pairing functional of the surface problem.

    Value is gauss_volume([h]) * sum_i alpha_i h_i; its maximizers solve
    the normalized surface problem.
    """
    h = np.asarray(h, dtype=float)
    K = make_wulff(cone, mu.omega, h)
    vol = gauss_volume(K, mc)
    pairing = float(np.dot(mu.weights, h))
    return MCEstimate(
        vol.value * pairing, abs(pairing) * vol.std_err, mc.n_samples, mc.seed
    )


def functional_L(mu, h, cone, mc):
    """Volume-times-exponentiated-log-pairing functional of the log problem."""
    h = np.asarray(h, dtype=float)
    K = make_wulff(cone, mu.omega, h)
    vol = gauss_volume(K, mc)
    pairing = math.exp(float(np.dot(mu.weights, np.log(h))))
    return MCEstimate(
        vol.value * pairing, pairing * vol.std_err, mc.n_samples, mc.seed
    )


def normalization_c(K, mu, mc):
    """Normalization constant of the surface problem: <h_bar, mu> / volume."""
    if not (
        mu.omega is K.omega
        or (
            mu.omega.dirs.shape == K.omega.dirs.shape
            and np.allclose(mu.omega.dirs, K.omega.dirs)
        )
    ):
        raise MismatchedOmega("measure and shape do not share omega")
    vol = gauss_volume(K, mc)
    if vol.value < 5.0 * vol.std_err or vol.value <= 0.0:
        raise ZeroVolume("volume estimate indistinguishable from zero")
    pairing = float(np.dot(mu.weights, K.effective_h))
    value = pairing / vol.value
    err = abs(pairing) * vol.std_err / vol.value**2
    return MCEstimate(value, err, mc.n_samples, mc.seed)
