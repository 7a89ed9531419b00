"""High-resolution differential equations of the discrete optimizers.

Every flow is written in first-order form.  Phase-space kinds evolve (z, omega)
with dz/dt = omega and

    domega/dt = -beta*omega + a_v*V(z) + a_jv*J(z)V(z) + a_jw*J(z)omega,

with the coefficient rows

    method          a_v           a_jv     a_jw
    gda-hrde        -beta         0        0
    eg-hrde         -beta         2        0
    ogda-hrde       -beta         0       -2
    la2-gda-hrde    -2*alpha*beta 2*alpha  0
    la3-gda-hrde    -3*alpha*beta 6*alpha  0

where beta = 2/gamma.  The Jacobian-free optimistic form evolves (z, w):

    dz/dt = -kappa*(z + w) - 2 V(z),   dw/dt = -kappa*(z + w),

with kappa = beta/2 = 1/gamma, optionally time-varying.  The shared
low-resolution baseline dz/dt = -V(z) is also provided.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .optimizers import DIVERGENCE_GUARD, Trajectory, step_ogda_s
from .problems import Operator, as_state

Array = np.ndarray


# ---------------------------------------------------------------------------
# Flow descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseFlow:
    """(z, omega) flow carrying one row of the coefficient table above."""

    beta: float
    a_v: float
    a_jv: float
    a_jw: float
    name: str

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")


def gda_flow(beta) -> PhaseFlow:
    return PhaseFlow(beta, -beta, 0.0, 0.0, "gda-hrde")


def eg_flow(beta) -> PhaseFlow:
    return PhaseFlow(beta, -beta, 2.0, 0.0, "eg-hrde")


def ogda_flow(beta) -> PhaseFlow:
    return PhaseFlow(beta, -beta, 0.0, -2.0, "ogda-hrde")


def la2_flow(beta, alpha) -> PhaseFlow:
    _check_alpha(alpha)
    return PhaseFlow(beta, -2.0 * alpha * beta, 2.0 * alpha, 0.0, "la2-gda-hrde")


def la3_flow(beta, alpha) -> PhaseFlow:
    _check_alpha(alpha)
    return PhaseFlow(beta, -3.0 * alpha * beta, 6.0 * alpha, 0.0, "la3-gda-hrde")


def _check_alpha(alpha):
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class JacobianFreeFlow:
    """(z, w) optimistic flow with constant kappa = 1/gamma."""

    kappa: float
    name = "ogda-hrde2"

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


@dataclass(frozen=True)
class VariableStepFlow:
    """(z, w) optimistic flow with time-varying kappa(t) = 1/gamma(t)."""

    kappa_fn: Callable[[float], float]
    name = "ogda-hrde2-varstep"


@dataclass(frozen=True)
class LowResolutionFlow:
    """dz/dt = -V(z): the step-size-free baseline shared by all methods."""

    name = "gda-ode"


def rhs(kind, op: Operator, z, aux, t=0.0):
    """Right-hand side of the selected flow at state (z, aux).

    Returns ``(dz, daux)``.  ``aux`` is omega for phase-space kinds, w for the
    Jacobian-free kinds, and ignored (may be None) for the low-resolution ODE.
    """
    z = np.asarray(z, dtype=float)
    if aux is not None:
        aux = np.asarray(aux, dtype=float)
    if isinstance(kind, PhaseFlow):
        v = op.field(z)
        domega = kind.a_v * v - kind.beta * aux
        if kind.a_jv != 0.0 or kind.a_jw != 0.0:
            jac = op.jacobian(z)
            if kind.a_jv != 0.0:
                domega = domega + kind.a_jv * (jac @ v)
            if kind.a_jw != 0.0:
                domega = domega + kind.a_jw * (jac @ aux)
        return aux.copy(), domega
    if isinstance(kind, JacobianFreeFlow):
        drift = -kind.kappa * (z + aux)
        return drift - 2.0 * op.field(z), drift
    if isinstance(kind, VariableStepFlow):
        kappa = float(kind.kappa_fn(t))
        if kappa <= 0:
            raise ValueError(f"kappa(t) must be positive, got {kappa} at t={t}")
        drift = -kappa * (z + aux)
        return drift - 2.0 * op.field(z), drift
    if isinstance(kind, LowResolutionFlow):
        return -op.field(z), None
    raise TypeError(f"unknown flow kind {kind!r}")


def ogda2_w_from_omega(op: Operator, z0, omega0, gamma) -> Array:
    """Initialization w0 = -gamma*omega0 - 2*gamma*V(z0) - z0.

    With this map the (z, omega) and (z, w) optimistic flows describe the same
    z(t).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    z0 = as_state(z0, op.dim)
    omega0 = as_state(omega0, op.dim)
    return -gamma * omega0 - 2.0 * gamma * op.field(z0) - z0


def low_resolution_ode_rhs(op: Operator, z) -> Array:
    """-V(z)."""
    return -op.field(z)


def euler_ogda2(op: Operator, z, w, gamma):
    """Explicit Euler step of the Jacobian-free flow with kappa = 1/(2*gamma).

    This reproduces the two-variable discrete optimistic scheme exactly, so it
    delegates to the same stepper (bit-identical results by construction).
    """
    return step_ogda_s(op, z, w, gamma)


# ---------------------------------------------------------------------------
# Fixed-step integration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegratorConfig:
    scheme: str = "rk4"
    dt: float = 1e-3
    t_end: float = 1.0
    record_every: int = 1

    def __post_init__(self):
        if self.scheme not in ("rk4", "euler"):
            raise ValueError("scheme must be 'rk4' or 'euler'")
        if self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dt and t_end must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


def default_dt(gamma, cap=1e-3) -> float:
    """Step size keeping the stiff -(2/gamma) relaxation inside RK4's comfort
    zone (|beta*dt| <= 0.1 by default policy)."""
    return min(cap, gamma / 20.0)


def integrate(kind, op: Operator, z0, aux0, cfg: IntegratorConfig,
              extra_metrics=None, t0=0.0, problem_label=None) -> Trajectory:
    """Fixed-step integration of a flow, recording every record_every-th step.

    Metric columns mirror the discrete run loop (z_norm, dist_to_solution,
    v_norm) plus aux_norm: ||omega|| for phase-space kinds, ||z + w|| for the
    Jacobian-free kinds.  ``extra_metrics`` callables receive (t, z, aux).
    The query column counts field evaluations consumed by the integrator.
    """
    z0 = as_state(z0, op.dim)
    scalar_aux = isinstance(kind, LowResolutionFlow)
    if scalar_aux:
        aux0 = np.zeros(0)
    else:
        aux0 = as_state(aux0, op.dim)
    extra_metrics = extra_metrics or {}

    evals = 0

    def count_field(z):
        nonlocal evals
        evals += 1
        return op.field_unchecked(z)

    counting = _CountingOperator(op, count_field)

    n_steps = int(round(cfg.t_end / cfg.dt))
    n_rec = n_steps // cfg.record_every + 1
    d = op.dim
    times = np.zeros(n_rec)
    queries = np.zeros(n_rec, dtype=np.int64)
    states = np.full((n_rec, d), np.nan)
    names = ["z_norm", "dist_to_solution", "v_norm", "aux_norm", *extra_metrics]
    cols = {name: np.full(n_rec, np.nan) for name in names}
    diverged = False

    z, aux = z0.copy(), aux0.copy()
    t = t0

    def aux_norm(z_i, aux_i):
        if scalar_aux:
            return 0.0
        if isinstance(kind, (JacobianFreeFlow, VariableStepFlow)):
            return float(np.linalg.norm(z_i + aux_i))
        return float(np.linalg.norm(aux_i))

    def record(i):
        times[i] = t
        queries[i] = evals
        states[i] = z
        if not np.all(np.isfinite(z)):
            return
        v = op.field_unchecked(z)
        cols["z_norm"][i] = float(np.linalg.norm(z))
        cols["dist_to_solution"][i] = float(np.linalg.norm(z - op.solution))
        cols["v_norm"][i] = float(np.linalg.norm(v))
        cols["aux_norm"][i] = aux_norm(z, aux)
        for name, fn in extra_metrics.items():
            cols[name][i] = float(fn(t, z, aux))

    record(0)
    rec = 1
    for n in range(n_steps):
        try:
            z, aux = _advance(kind, counting, z, aux, t, cfg.dt, cfg.scheme)
        except (ValueError, FloatingPointError):
            # Overflowed past float range mid-step: flag and stop stepping;
            # remaining records stay NaN-padded.
            diverged = True
            break
        t = t0 + (n + 1) * cfg.dt
        finite = np.all(np.isfinite(z)) and (scalar_aux or np.all(np.isfinite(aux)))
        if not finite or np.linalg.norm(z) > DIVERGENCE_GUARD:
            diverged = True
        if (n + 1) % cfg.record_every == 0:
            record(rec)
            rec += 1
        if not finite:
            break
    if rec < n_rec:
        times[rec:] = t
        queries[rec:] = evals

    return Trajectory(
        method=kind.name,
        problem=problem_label or op.label,
        steps=np.arange(n_rec) * cfg.record_every,
        times=times,
        queries=queries,
        states=states,
        metrics=cols,
        diverged=diverged,
    )


class _CountingOperator:
    """Thin pass-through that counts field evaluations (no validation: the
    integrator handles non-finite states itself)."""

    def __init__(self, op, field_fn):
        self._op = op
        self.field = field_fn
        self.dim = op.dim
        self.lipschitz = op.lipschitz

    def jacobian(self, z):
        return self._op.jacobian(z)


def _advance(kind, op, z, aux, t, dt, scheme):
    if isinstance(kind, LowResolutionFlow):
        f = lambda s, u: rhs(kind, op, u, None, s)[0]  # noqa: E731
        if scheme == "euler":
            return z + dt * f(t, z), aux
        k1 = f(t, z)
        k2 = f(t + 0.5 * dt, z + 0.5 * dt * k1)
        k3 = f(t + 0.5 * dt, z + 0.5 * dt * k2)
        k4 = f(t + dt, z + dt * k3)
        return z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), aux

    def f(s, zz, ww):
        return rhs(kind, op, zz, ww, s)

    if scheme == "euler":
        dz, da = f(t, z, aux)
        return z + dt * dz, aux + dt * da
    dz1, da1 = f(t, z, aux)
    dz2, da2 = f(t + 0.5 * dt, z + 0.5 * dt * dz1, aux + 0.5 * dt * da1)
    dz3, da3 = f(t + 0.5 * dt, z + 0.5 * dt * dz2, aux + 0.5 * dt * da2)
    dz4, da4 = f(t + dt, z + dt * dz3, aux + dt * da3)
    z_next = z + (dt / 6.0) * (dz1 + 2.0 * dz2 + 2.0 * dz3 + dz4)
    aux_next = aux + (dt / 6.0) * (da1 + 2.0 * da2 + 2.0 * da3 + da4)
    return z_next, aux_next


#: Flow identifiers exposed to the CLI.
FLOW_IDS = (
    "gda-hrde", "eg-hrde", "ogda-hrde", "la2-gda-hrde", "la3-gda-hrde",
    "ogda-hrde2", "ogda-hrde2-varstep", "gda-ode",
)


def make_flow(flow_id, gamma=None, alpha=0.5, kappa_fn=None):
    """Instantiate a flow descriptor from its CLI identifier.

    ``gamma`` sets beta = 2/gamma for phase-space kinds and kappa = 1/gamma
    for the Jacobian-free kind.
    """
    if flow_id == "gda-ode":
        return LowResolutionFlow()
    if flow_id == "ogda-hrde2-varstep":
        if kappa_fn is None:
            raise ValueError("ogda-hrde2-varstep requires a kappa schedule")
        return VariableStepFlow(kappa_fn)
    if gamma is None or gamma <= 0:
        raise ValueError(f"flow {flow_id!r} requires positive gamma")
    beta = 2.0 / gamma
    if flow_id == "gda-hrde":
        return gda_flow(beta)
    if flow_id == "eg-hrde":
        return eg_flow(beta)
    if flow_id == "ogda-hrde":
        return ogda_flow(beta)
    if flow_id == "la2-gda-hrde":
        return la2_flow(beta, alpha)
    if flow_id == "la3-gda-hrde":
        return la3_flow(beta, alpha)
    if flow_id == "ogda-hrde2":
        return JacobianFreeFlow(1.0 / gamma)
    raise ValueError(f"unknown flow id {flow_id!r}; known: {', '.join(FLOW_IDS)}")
