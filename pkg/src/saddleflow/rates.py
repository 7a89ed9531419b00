"""Quantitative rate verification: best-iterate bounds, rate fits, and the
windowed pseudotrajectory diagnostic."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .flows import IntegratorConfig, VariableStepFlow, integrate
from .problems import Operator

Array = np.ndarray


def best_iterate(values) -> Array:
    """Running minimum m_n = min_{i <= n} values_i (non-increasing)."""
    values = np.asarray(values, dtype=float)
    return np.minimum.accumulate(values)


def explicit_bound(gamma, lipschitz, z0_norm, n) -> float:
    """(8 + 36 gamma^2 L^2) |z0|^2 / (2 gamma^2 n): the certified cap on
    min_{i <= n} |V(z_i)|^2 for the optimistic method with z_1 = z_0 and
    gamma <= 1/(16 L)."""
    return (8.0 + 36.0 * gamma ** 2 * lipschitz ** 2) * z0_norm ** 2 / (2.0 * gamma ** 2 * n)


def best_iterate_bound_check(v_norms, gamma, lipschitz, z0_norm):
    """Margins bound_n - min_{i <= n} |V(z_i)|^2 for every recorded n >= 1.

    ``v_norms`` must start with the initial iterate (index 0).  All margins
    are nonnegative when the step-size cap gamma <= 1/(16 L) holds.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if gamma > 1.0 / (16.0 * lipschitz) + 1e-15:
        raise ValueError("explicit bound requires gamma <= 1/(16 L)")
    v_norms = np.asarray(v_norms, dtype=float)
    if v_norms.ndim != 1 or v_norms.size < 2:
        raise ValueError("need at least the initial iterate and one step")
    running = best_iterate(v_norms ** 2)
    ns = np.arange(1, v_norms.size)
    bounds = explicit_bound(gamma, lipschitz, z0_norm, ns)
    return bounds - running[1:]


@dataclass
class RateFit:
    """Least-squares rate fit on a positive tail window."""

    exponent: Optional[float]   # power-law slope (None for geometric fits)
    rho_hat: Optional[float]    # geometric rate (None for power-law fits)
    intercept: float
    residual_rms: float
    window: tuple
    rho_theory: Optional[float] = None


def _tail_window(n, tail_fraction):
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    start = int(np.floor(n * (1.0 - tail_fraction)))
    return min(start, n - 2), n


def fit_power_law(times, values, tail_fraction=0.5) -> RateFit:
    """Slope of log(value) vs log(time) over the last tail_fraction of samples."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1 or times.size < 2:
        raise ValueError("times and values must be equal-length 1-d arrays")
    start, end = _tail_window(times.size, tail_fraction)
    t, v = times[start:end], values[start:end]
    if np.any(v <= 0):
        raise ValueError("power-law fit requires positive values in the window")
    if np.any(t <= 0):
        raise ValueError("power-law fit requires positive times in the window")
    slope, intercept = np.polyfit(np.log(t), np.log(v), 1)
    resid = np.log(v) - (slope * np.log(t) + intercept)
    return RateFit(
        exponent=float(slope),
        rho_hat=None,
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        window=(start, end),
    )


def fit_geometric(times, values, tail_fraction=0.5, mu=None, beta=None) -> RateFit:
    """Slope of log(value) vs time; rho_hat = -slope.

    When both ``mu`` and ``beta`` are supplied the theoretical geometric rate
    rho = 1 / (1/mu + 9/(2 beta)) is attached for comparison (the certified
    rate is a lower bound on the observed decay).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1 or times.size < 2:
        raise ValueError("times and values must be equal-length 1-d arrays")
    start, end = _tail_window(times.size, tail_fraction)
    t, v = times[start:end], values[start:end]
    if np.any(v <= 0):
        raise ValueError("geometric fit requires positive values in the window")
    slope, intercept = np.polyfit(t, np.log(v), 1)
    resid = np.log(v) - (slope * t + intercept)
    rho_theory = None
    if mu is not None and beta is not None:
        rho_theory = 1.0 / (1.0 / mu + 9.0 / (2.0 * beta))
    return RateFit(
        exponent=None,
        rho_hat=float(-slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        window=(start, end),
        rho_theory=rho_theory,
    )


def effective_times(step_sizes) -> Array:
    """tau_n = sum_{k < n} gamma_k (tau_0 = 0), the interpolation time axis."""
    step_sizes = np.asarray(step_sizes, dtype=float)
    return np.concatenate([[0.0], np.cumsum(step_sizes)])


def apt_window_check(taus, states, op: Operator, gamma_of_t, T=1.0, windows=8,
                     dt=None, t_start=None) -> Array:
    """Windowed sup-distance between the interpolated iterates and the flow.

    ``taus``/``states`` sample the discrete run on its effective-time axis,
    ``gamma_of_t`` is the continuous step-size schedule on that axis.  For
    each of ``windows`` geometrically spaced anchors t the variable-step flow
    is integrated from the interpolant over the horizon [0, T] and the
    sup-norm difference to the interpolant is returned.  A vanishing
    pseudotrajectory gap shows up as (eventually) shrinking window sups.
    """
    taus = np.asarray(taus, dtype=float)
    states = np.asarray(states, dtype=float)
    if taus.ndim != 1 or states.shape[0] != taus.size:
        raise ValueError("taus and states must align")
    if windows < 2:
        raise ValueError("need at least 2 windows")
    t_end = taus[-1] - T
    if t_start is None:
        t_start = max(taus[1], 1e-3 * taus[-1])
    if not t_start < t_end:
        raise ValueError("trajectory too short for the requested horizon")

    kappa_fn = lambda t: 1.0 / float(gamma_of_t(t))  # noqa: E731
    flow = VariableStepFlow(kappa_fn)

    def interp(t):
        cols = [np.interp(t, taus, states[:, j]) for j in range(states.shape[1])]
        return np.array(cols)

    def slope_at(t):
        i = int(np.searchsorted(taus, t, side="right") - 1)
        i = min(max(i, 0), taus.size - 2)
        return (states[i + 1] - states[i]) / (taus[i + 1] - taus[i])

    anchors = np.geomspace(t_start, t_end, windows)
    sups = np.zeros(windows)
    for j, t0 in enumerate(anchors):
        z0 = interp(t0)
        gamma_t = float(gamma_of_t(t0))
        w0 = -gamma_t * slope_at(t0) - 2.0 * gamma_t * op.field(z0) - z0
        kappa_max = max(kappa_fn(t0), kappa_fn(t0 + T))
        step = dt if dt is not None else min(1e-3, 0.2 / kappa_max)
        cfg = IntegratorConfig("rk4", step, T, record_every=1)
        traj = integrate(flow, op, z0, w0, cfg, t0=t0)
        diffs = [
            float(np.linalg.norm(interp(t0 + h) - zs))
            for h, zs in zip(traj.times - t0, traj.states)
        ]
        sups[j] = max(diffs)
    return sups
