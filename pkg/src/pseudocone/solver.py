"""Variational solvers for the normalized surface problem and the log problem.

Both problems are solved by projected ascent of a log objective whose
stationary points are exactly the target identities:

* surface kind: ``F(h) = log volume([h]) + log <mu, h>``; at a stationary
  point ``c * S_i = mu_i`` with ``c = <mu, h> / volume``;
* log kind: ``G(h) = log volume([h]) + <mu, log h>`` in log coordinates;
  at a stationary point ``C_i / volume = mu_i``.

After every step the iterate is replaced by the effective support vector
of its own Wulff shape; this projection never decreases either objective.
Objective comparisons within an iteration reuse common random numbers and
the sample budget escalates across phases, so the line search is robust
to Monte Carlo noise.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMeasure, InfeasibleWeight, InvalidOptions
from .gaussian import (
    MCConfig,
    MCEstimate,
    _mc_expectation,
    _tag,
    cone_gauss_volume_exact,
    covolume,
    covolume_radial,
    exact_estimate,
    facet_surface,
    facet_surface_exact,
    gauss_volume,
    gauss_volume_direct,
)
from .geometry import make_wulff
from .measures import DiscreteMeasure

EPS_GUARD = 1e-12
# final-phase budget must keep 5x the expected relative estimator noise
# below the residual tolerance; the coefficient is a worst-case acceptance
NOISE_COEFF = 1.6


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 60
    step_init: float = 1.0
    armijo_c: float = 1e-4
    damping: float = 0.5
    mc_schedule: tuple = (10_000, 80_000, 800_000)
    tol_residual: float = 0.02
    seed: int = 0
    method: str = "gradient"  # or "fixed_point" (log kind only)
    screen: str = "warn"      # or "enforce": reject unnormalized-infeasible mu
    h_init: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 < self.armijo_c < 1.0:
            raise InvalidOptions("armijo_c must lie in (0, 1)")
        if not 0.0 < self.damping <= 1.0:
            raise InvalidOptions("damping must lie in (0, 1]")
        if self.method not in ("gradient", "fixed_point"):
            raise InvalidOptions("method must be 'gradient' or 'fixed_point'")
        if self.screen not in ("warn", "enforce"):
            raise InvalidOptions("screen must be 'warn' or 'enforce'")
        if len(self.mc_schedule) < 1 or any(n < 1_000 for n in self.mc_schedule):
            raise InvalidOptions("mc_schedule must hold sample counts >= 1000")
        if self.max_iters < 1:
            raise InvalidOptions("max_iters must be positive")
        if self.tol_residual <= 0.0:
            raise InvalidOptions("tol_residual must be positive")


@dataclass
class SolveReport:
    solution_h: np.ndarray
    solution: object
    kind: str
    residuals: np.ndarray
    c_value: MCEstimate | None
    objective_trace: list
    trace_rows: list
    gauss_volume: MCEstimate
    covolume: MCEstimate
    converged: bool
    iterations: int
    wall_time: float
    warnings: list = field(default_factory=list)


@dataclass
class FeasibilityScreen:
    """Per-direction suprema of single-facet surface weights."""

    t_grid: np.ndarray
    sup_weights: np.ndarray
    sup_errs: np.ndarray
    t_at_sup: np.ndarray
    infeasible: np.ndarray  # bool: weight exceeds sup + 3 sigma


def _validate_budget(opts, dim):
    if dim == 2:
        return  # deterministic measure path, no Monte Carlo noise
    n_final = opts.mc_schedule[-1]
    expected_rel = NOISE_COEFF / math.sqrt(n_final)
    if opts.tol_residual < 5.0 * expected_rel:
        raise InvalidOptions(
            f"tol_residual {opts.tol_residual:g} below 5x expected noise "
            f"{expected_rel:g} at {n_final} samples; raise the final budget"
        )


def _iter_seed(seed, phase, it):
    return (int(seed) * 1_000_003 + phase * 8_191 + it + 1) & 0x7FFFFFFFFFFFFFFF


def _bundle(K, mc):
    """Volume and per-direction surface weights of K on a common stream."""
    m = len(K.omega)
    S = np.zeros(m)
    S_err = np.zeros(m)
    if K.dim == 2:
        gamma = exact_estimate(
            cone_gauss_volume_exact(K.cone) - covolume_radial(K, mc).value
        )
        for i in range(m):
            if K.facet_active[i]:
                S[i] = facet_surface_exact(K, i).value
        return gamma, S, S_err
    gamma = gauss_volume_direct(K, mc)
    for i in range(m):
        if K.facet_active[i]:
            est = facet_surface(K, i, mc)
            S[i] = est.value
            S_err[i] = est.std_err
    return gamma, S, S_err


def _residual_values(kind, mu, h_eff, S, gamma):
    alpha = mu.weights
    if kind == "surface":
        c = float(np.dot(alpha, h_eff)) / gamma
        dev = np.abs(c * S - alpha)
    else:
        dev = np.abs(h_eff * S / gamma - alpha)
    return dev / np.maximum(alpha, EPS_GUARD)


def residual(K, mu, kind, mc):
    """Per-direction relative stationarity residuals of K against mu."""
    if kind not in ("surface", "log"):
        raise InvalidOptions("kind must be 'surface' or 'log'")
    gamma, S, _ = _bundle(K, mc)
    return _residual_values(kind, mu, K.effective_h, S, gamma.value)


def feasibility_screen(cone, mu, mc, t_lo=0.05, t_hi=6.0, points=25):
    """Scan single-facet shapes for the largest reachable surface weight.

    A weight above the per-direction supremum cannot be a surface measure
    of any single-facet shape, which rules out the unnormalized problem in
    that direction; the normalized problem is not obstructed.
    """
    grid = np.geomspace(t_lo, t_hi, points)
    m = len(mu.omega)
    sup_w = np.zeros(m)
    sup_e = np.zeros(m)
    t_at = np.zeros(m)
    for i in range(m):
        dirs = mu.omega.dirs[i : i + 1]
        best_w, best_e, best_t = -1.0, 0.0, grid[0]
        for t in grid:
            Kt = make_wulff(cone, dirs, np.array([t]))
            if cone.dim == 2:
                est = facet_surface_exact(Kt, 0)
            else:
                est = facet_surface(Kt, 0, mc)
            if est.value > best_w:
                best_w, best_e, best_t = est.value, est.std_err, t
        sup_w[i] = best_w
        sup_e[i] = best_e
        t_at[i] = best_t
    infeasible = mu.weights > sup_w + 3.0 * sup_e
    return FeasibilityScreen(
        t_grid=grid, sup_weights=sup_w, sup_errs=sup_e, t_at_sup=t_at,
        infeasible=infeasible,
    )


def _objective(kind, mu, h_eff, gamma_value):
    if gamma_value <= 0.0:
        return -math.inf
    if kind == "surface":
        return math.log(gamma_value) + math.log(float(np.dot(mu.weights, h_eff)))
    return math.log(gamma_value) + float(np.dot(mu.weights, np.log(h_eff)))


def _fixed_point_step(kind, cone, omega, h, alpha, S, gamma_value, beta):
    """One damped multiplicative step toward the stationarity identity."""
    if kind == "surface":
        c = float(np.dot(alpha, h)) / gamma_value
        target = c * S
    else:
        target = h * S / gamma_value
    ratio = np.where(
        (alpha > EPS_GUARD) & (target > EPS_GUARD), alpha / np.maximum(target, EPS_GUARD), 1.0
    )
    factor = np.clip(ratio, 0.25, 4.0) ** beta
    h_new = make_wulff(cone, omega, h * factor).effective_h.copy()
    return h_new, make_wulff(cone, omega, h_new)


def _paired_volume_shift(K, K_new, mc):
    """Volume change from K to K_new on common draws, with its noise.

    Shares the stream of the iteration's volume estimate, so adding the
    shift to that estimate reproduces exactly what a fresh evaluation of
    K_new on the same stream would return; the returned error is the
    honest noise of the difference, which is what the line search needs.
    """
    W = K.cone.normals.T
    U, h_old = K.omega.dirs.T, K.defining_h
    h_new = K_new.defining_h

    def integrand(z):
        in_cone = np.all(z @ W <= 0.0, axis=1)
        slabs = z @ U
        old = in_cone & np.all(slabs <= -h_old, axis=1)
        new = in_cone & np.all(slabs <= -h_new, axis=1)
        return new.astype(float) - old.astype(float)

    return _mc_expectation(K.dim, integrand, mc, _tag("gauss_volume_direct"))


def _solve(kind, cone, omega, mu, opts):
    t0 = time.perf_counter()
    if not isinstance(mu, DiscreteMeasure):
        mu = DiscreteMeasure(omega=omega, weights=np.asarray(mu, dtype=float))
    if not mu.is_nonzero():
        raise DegenerateMeasure("target measure has no positive weight")
    _validate_budget(opts, cone.dim)

    notes = []
    screen_mc = MCConfig(seed=opts.seed, n_samples=max(opts.mc_schedule[0], 10_000))
    screen = feasibility_screen(cone, mu, screen_mc)
    if np.any(screen.infeasible):
        bad = np.flatnonzero(screen.infeasible).tolist()
        if kind == "surface" and opts.screen == "enforce":
            raise InfeasibleWeight(
                f"weights at directions {bad} exceed the single-facet supremum; "
                "the unnormalized surface problem is unsolvable there"
            )
        notes.append(
            f"weights at directions {bad} exceed the single-facet supremum; "
            "only the normalized problem remains meaningful"
        )

    m = len(omega)
    h = np.ones(m) if opts.h_init is None else np.asarray(opts.h_init, dtype=float)
    K = make_wulff(cone, omega, h)
    h = K.effective_h.copy()
    K = make_wulff(cone, omega, h)

    alpha = mu.weights
    n_phases = len(opts.mc_schedule)
    iters_per_phase = max(1, math.ceil(opts.max_iters / n_phases))
    trace_rows = []
    objective_trace = []
    converged = False
    it_global = 0
    step_state = opts.step_init
    # once the residual drops below this, the gradient signal is near the
    # noise floor and the damped stationarity fixed point contracts faster
    polish_at = max(4.0 * opts.tol_residual, 0.08)

    # final stationarity check: fresh stream at the last phase's budget
    mc_fin = MCConfig(seed=_iter_seed(opts.seed, n_phases, 0),
                      n_samples=opts.mc_schedule[-1])

    def final_residuals(K_now, h_now):
        gamma_f, S_f, _ = _bundle(K_now, mc_fin)
        return _residual_values(kind, mu, h_now, S_f, gamma_f.value), gamma_f

    gamma_fin = None
    res_fin = None
    for phase, n_samp in enumerate(opts.mc_schedule):
        last_phase = phase == n_phases - 1
        stalls = 0
        best_res = math.inf
        for _ in range(iters_per_phase):
            mc_it = MCConfig(seed=_iter_seed(opts.seed, phase, it_global),
                             n_samples=n_samp)
            gamma, S, _ = _bundle(K, mc_it)
            res = _residual_values(kind, mu, h, S, gamma.value)
            res_max = float(np.max(res)) if res.size else 0.0
            obj = _objective(kind, mu, h, gamma.value)
            obj_sigma = gamma.std_err / max(gamma.value, 1e-300)
            c_here = float(np.dot(alpha, h)) / gamma.value if kind == "surface" \
                else 1.0 / gamma.value
            trace_rows.append({
                "iteration": it_global, "objective": obj, "residual": res_max,
                "gamma": gamma.value, "c": c_here,
                "objective_sigma": obj_sigma,
            })
            objective_trace.append(obj)
            it_global += 1

            if res_max <= opts.tol_residual:
                if not last_phase:
                    break  # residual met at this budget; escalate
                res_fin, gamma_fin = final_residuals(K, h)
                if np.max(res_fin) <= opts.tol_residual:
                    converged = True
                    break
            if res_max < best_res - 0.05 * opts.tol_residual:
                best_res = res_max
                stalls = 0
            else:
                stalls += 1
                if stalls > 4:
                    break  # no progress at this budget; escalate

            pairing = float(np.dot(alpha, h))
            if kind == "surface":
                grad = -S / gamma.value + alpha / pairing
            else:
                grad = -h * S / gamma.value + alpha

            accepted = False
            if (kind != "log" or opts.method != "fixed_point") \
                    and res_max > polish_at:
                # ascent step with backtracking; the slack is one sigma of
                # the common-random-number volume difference, not of two
                # independent estimates
                gnorm2 = float(np.dot(grad, grad))
                step = min(opts.step_init, 2.0 * step_state)
                for _bt in range(12):
                    if kind == "surface":
                        h_cand = h + step * grad
                        if np.any(h_cand <= 0.0):
                            step *= 0.5
                            continue
                    else:
                        h_cand = h * np.exp(step * grad)
                    K_cand = make_wulff(cone, omega, h_cand)
                    h_cand = K_cand.effective_h.copy()
                    K_cand = make_wulff(cone, omega, h_cand)
                    if cone.dim == 2:
                        gamma_c_val = cone_gauss_volume_exact(cone) \
                            - covolume_radial(K_cand, mc_it).value
                        slack = 0.0
                    else:
                        shift, shift_err = _paired_volume_shift(K, K_cand, mc_it)
                        gamma_c_val = gamma.value + shift
                        slack = shift_err / max(gamma.value, 1e-300)
                    obj_c = _objective(kind, mu, h_cand, gamma_c_val)
                    if obj_c >= obj + opts.armijo_c * step * gnorm2 - slack:
                        h, K = h_cand, K_cand
                        accepted = True
                        step_state = step
                        break
                    step *= 0.5
            if not accepted:
                # damped stationarity fixed point, kept only when it
                # improves the residual on the iteration's common stream
                # without giving up objective beyond the noise allowance
                beta = opts.damping
                for _attempt in range(4):
                    h_cand, K_cand = _fixed_point_step(
                        kind, cone, omega, h, alpha, S, gamma.value, beta
                    )
                    gamma_c, S_c, _ = _bundle(K_cand, mc_it)
                    res_c = _residual_values(kind, mu, h_cand, S_c,
                                             gamma_c.value)
                    res_c_max = float(np.max(res_c)) if res_c.size else 0.0
                    obj_c = _objective(kind, mu, h_cand, gamma_c.value)
                    obj_slack = math.hypot(
                        obj_sigma,
                        gamma_c.std_err / max(gamma_c.value, 1e-300),
                    ) + 1e-9
                    if res_c_max <= max(0.98 * res_max,
                                        0.8 * opts.tol_residual) \
                            and obj_c >= obj - obj_slack:
                        h, K = h_cand, K_cand
                        accepted = True
                        break
                    beta *= 0.5
            if not accepted:
                stalls += 1
        if converged:
            break

    if res_fin is None or not converged:
        res_fin, gamma_fin = final_residuals(K, h)
    converged = bool(res_fin.size == 0 or np.max(res_fin) <= opts.tol_residual)

    mc_rep = MCConfig(seed=opts.seed, n_samples=opts.mc_schedule[-1])
    vol = gauss_volume(K, mc_rep)
    cov = covolume(K, mc_rep)
    c_value = None
    if kind == "surface":
        pairing = float(np.dot(alpha, h))
        c_value = MCEstimate(
            pairing / gamma_fin.value,
            abs(pairing) * gamma_fin.std_err / gamma_fin.value**2,
            mc_fin.n_samples,
            mc_fin.seed,
        )
    return SolveReport(
        solution_h=h,
        solution=K,
        kind=kind,
        residuals=res_fin,
        c_value=c_value,
        objective_trace=objective_trace,
        trace_rows=trace_rows,
        gauss_volume=vol,
        covolume=cov,
        converged=converged,
        iterations=it_global,
        wall_time=time.perf_counter() - t0,
        warnings=notes,
    )


def solve_gaussian_minkowski(cone, omega, mu, opts=None):
    """Solve the normalized surface problem: find K with c * S(K, .) = mu."""
    return _solve("surface", cone, omega, mu, opts or SolveOptions())


def solve_log_minkowski(cone, omega, mu, opts=None):
    """Solve the log problem: find K with C(K, .) / volume(K) = mu."""
    return _solve("log", cone, omega, mu, opts or SolveOptions())
