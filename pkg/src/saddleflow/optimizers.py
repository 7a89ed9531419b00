"""Discrete saddle-point optimizers and the shared run loop.

Steppers are pure functions; the run loop threads method memory, counts
gradient queries, and records per-step metrics into a Trajectory.  Divergence
(non-finite state or norm above the guard) is recorded, not raised: a blowing
up run is an expected, reportable outcome.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .problems import Operator, as_state

Array = np.ndarray

#: State-norm guard beyond which a run is flagged as diverged.
DIVERGENCE_GUARD = 1e12


class NoConvergenceError(RuntimeError):
    """Raised when the implicit-step solver fails to reach its tolerance."""


# ---------------------------------------------------------------------------
# Method descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GDA:
    gamma: float
    name = "gda"

    def __post_init__(self):
        _check_gamma(self.gamma)


@dataclass(frozen=True)
class EG:
    gamma: float
    name = "eg"

    def __post_init__(self):
        _check_gamma(self.gamma)


@dataclass(frozen=True)
class OGDA:
    gamma: float
    name = "ogda"

    def __post_init__(self):
        _check_gamma(self.gamma)


@dataclass(frozen=True)
class OGDAStateSpace:
    """The two-variable form of optimistic descent-ascent (z, w iterates)."""

    gamma: float
    name = "ogda-s"

    def __post_init__(self):
        _check_gamma(self.gamma)


@dataclass(frozen=True)
class LookaheadGDA:
    gamma: float
    k: int = 2
    alpha: float = 0.5
    name = "la-gda"

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")


@dataclass(frozen=True)
class OGDAVariableStep:
    """Optimistic method with a per-step schedule n -> gamma_n.

    The default power-law schedule gamma_n = gamma0 / (n+1)^power with
    power = 0.6 keeps the squared steps summable.
    """

    gamma0: float = 0.1
    power: float = 0.6
    schedule: Optional[Callable[[int], float]] = None
    name = "ogda-varstep"

    def step_size(self, n: int) -> float:
        if self.schedule is not None:
            return float(self.schedule(n))
        return self.gamma0 / (n + 1) ** self.power


@dataclass(frozen=True)
class ImplicitOGDA:
    gamma: float
    fp_tol: float = 1e-12
    fp_max_iter: int = 200
    name = "ogda-implicit"

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.fp_tol <= 0:
            raise ValueError("fp_tol must be positive")


def _check_gamma(gamma):
    if gamma <= 0:
        raise ValueError("step size gamma must be positive")


# ---------------------------------------------------------------------------
# Steppers
# ---------------------------------------------------------------------------

def step_gda(op: Operator, z, gamma) -> Array:
    """z - gamma * V(z)."""
    _check_gamma(gamma)
    return z - gamma * op.field(z)


def step_eg(op: Operator, z, gamma) -> Array:
    """z - gamma * V(z - gamma * V(z)); two gradient queries."""
    _check_gamma(gamma)
    return z - gamma * op.field(z - gamma * op.field(z))


def step_ogda(op: Operator, z, v_prev, gamma):
    """z - 2 gamma V(z) + gamma v_prev, where v_prev = V(previous iterate).

    Returns ``(z_next, V(z))`` so the caller can thread the field memory;
    one gradient query per step.  Under the equal-first-iterates convention
    the first genuine update is called with v_prev = V(z), since the previous
    iterate equals z itself.
    """
    _check_gamma(gamma)
    v = op.field(z)
    return z - 2.0 * gamma * v + gamma * v_prev, v


def step_ogda_s(op: Operator, z, w, gamma):
    """One step of the two-variable optimistic scheme.

    z' = (z - w)/2 - 2 gamma V(z),  w' = (w - z)/2.  Eliminating w recovers
    the one-variable optimistic update exactly.
    """
    _check_gamma(gamma)
    z_next = 0.5 * (z - w) - 2.0 * gamma * op.field(z)
    w_next = 0.5 * (w - z)
    return z_next, w_next


def ogda_s_w0(op: Operator, z0, gamma) -> Array:
    """w_0 = -z_0 - 4 gamma V(z_0): the initialization equivalent to z_1 = z_0."""
    _check_gamma(gamma)
    return -z0 - 4.0 * gamma * op.field(z0)


def step_la_gda(op: Operator, z, gamma, k, alpha) -> Array:
    """Lookahead step: k inner GDA steps, then interpolate with weight alpha."""
    _check_gamma(gamma)
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    fast = z
    for _ in range(k):
        fast = fast - gamma * op.field(fast)
    return z + alpha * (fast - z)


def step_ogda_implicit(op: Operator, z, omega, gamma, fp_tol=1e-12, fp_max_iter=200):
    """One step of the implicit optimistic scheme.

    Solves the coupled equations
        z' = z + (gamma/2) (omega' + omega)
        omega' = -V(z') - (V(z') - V(z)) / 2
    by substituting omega' into the z-equation, which gives the fixed-point
    map z' = c - (3 gamma / 4) V(z') with c = z + (gamma/2) omega
    + (gamma/4) V(z).  Picard iteration contracts when (3 gamma / 4) L < 1;
    otherwise (or on stall) a Newton iteration on the same equation is used.

    Returns ``(z_next, omega_next, queries)`` with ``queries`` the number of
    field evaluations consumed.
    """
    _check_gamma(gamma)
    v_z = op.field(z)
    queries = 1
    c = z + 0.5 * gamma * omega + 0.25 * gamma * v_z
    scale = 0.75 * gamma

    use_newton = op.lipschitz is not None and scale * op.lipschitz >= 1.0
    z_next = z.copy()
    converged = False
    if not use_newton:
        for _ in range(fp_max_iter):
            proposal = c - scale * op.field(z_next)
            queries += 1
            if not np.all(np.isfinite(proposal)):
                break
            if np.max(np.abs(proposal - z_next)) <= fp_tol:
                z_next = proposal
                converged = True
                break
            z_next = proposal

    if not converged:
        z_next = z.copy()
        for _ in range(fp_max_iter):
            residual = z_next + scale * op.field(z_next) - c
            queries += 1
            if np.max(np.abs(residual)) <= fp_tol:
                converged = True
                break
            jac = np.eye(op.dim) + scale * op.jacobian(z_next)
            z_next = z_next - np.linalg.solve(jac, residual)

    v_next = op.field(z_next)
    queries += 1
    residual = np.max(np.abs(z_next + scale * v_next - c))
    if not converged or not residual <= 10 * fp_tol:
        raise NoConvergenceError(
            f"implicit step residual {residual:.3e} > fp_tol {fp_tol:.1e} "
            f"after {fp_max_iter} iterations"
        )
    omega_next = -1.5 * v_next + 0.5 * v_z
    return z_next, omega_next, queries


def gradient_queries(kind) -> int:
    """Gradient queries consumed per step; implicit steps report per-run."""
    if isinstance(kind, (GDA, OGDA, OGDAStateSpace, OGDAVariableStep)):
        return 1
    if isinstance(kind, EG):
        return 2
    if isinstance(kind, LookaheadGDA):
        return kind.k
    if isinstance(kind, ImplicitOGDA):
        raise ValueError("implicit steps consume a variable number of queries; "
                         "read them off the trajectory's query column")
    raise TypeError(f"unknown optimizer kind {kind!r}")


# ---------------------------------------------------------------------------
# Trajectories and the run loop
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    """Recorded run: aligned step/time/query axes, iterates, and metrics.

    ``steps`` has length m+1 (the initial state is record 0); ``states`` is
    the (m+1, d) iterate matrix and ``queries`` the cumulative gradient-query
    count at each record.
    """

    method: str
    problem: str
    steps: Array
    times: Array
    queries: Array
    states: Array
    metrics: dict = field(default_factory=dict)
    diverged: bool = False

    def metric(self, name) -> Array:
        return self.metrics[name]

    def __len__(self):
        return len(self.steps)


def _base_metrics(op, z):
    if not np.all(np.isfinite(z)):
        return np.nan, np.nan, np.nan
    v = op.field_unchecked(z)
    return (
        float(np.linalg.norm(z)),
        float(np.linalg.norm(z - op.solution)),
        float(np.linalg.norm(v)),
    )


def run(op: Operator, kind, z0, steps, extra_metrics=None, problem_label=None) -> Trajectory:
    """Iterate ``kind`` from z0 for ``steps`` steps, recording metrics.

    ``extra_metrics`` maps column names to callables ``f(t, z, aux) -> float``
    (aux is the method memory: previous field for the one-variable optimistic
    method, w for the two-variable form, omega for the implicit scheme, else
    None).  Recording continues through divergence; once the state goes
    non-finite the remaining records are NaN-padded.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    z = as_state(z0, op.dim)
    extra_metrics = extra_metrics or {}

    n_rec = steps + 1
    times = np.zeros(n_rec)
    queries = np.zeros(n_rec, dtype=np.int64)
    states = np.full((n_rec, op.dim), np.nan)
    names = ["z_norm", "dist_to_solution", "v_norm", *extra_metrics]
    cols = {name: np.full(n_rec, np.nan) for name in names}
    diverged = False

    # Method memory.  For the optimistic kinds the first recorded step must
    # reproduce z_1 = z_0; seeding the field memory with 2 V(z_0) makes the
    # first update -2 gamma V(z_0) + gamma (2 V(z_0)) = 0 and leaves the
    # memory at V(z_1) = V(z_0) afterwards, so the whole sequence matches the
    # two-variable scheme initialized with its equivalent w_0.
    aux = None
    if isinstance(kind, (OGDA, OGDAVariableStep)):
        aux = 2.0 * op.field(z)
    elif isinstance(kind, OGDAStateSpace):
        aux = ogda_s_w0(op, z, kind.gamma)
    elif isinstance(kind, ImplicitOGDA):
        aux = np.zeros(op.dim)       # omega_0 = 0

    t = 0.0
    total_queries = 0

    def record(i, z_i):
        states[i] = z_i
        times[i] = t
        queries[i] = total_queries
        zn, dist, vn = _base_metrics(op, z_i)
        cols["z_norm"][i] = zn
        cols["dist_to_solution"][i] = dist
        cols["v_norm"][i] = vn
        for name, fn in extra_metrics.items():
            if np.all(np.isfinite(z_i)):
                cols[name][i] = float(fn(t, z_i, aux))

    record(0, z)
    last = 0
    for n in range(steps):
        try:
            if isinstance(kind, GDA):
                z = step_gda(op, z, kind.gamma)
                step_queries, dt = 1, kind.gamma
            elif isinstance(kind, EG):
                z = step_eg(op, z, kind.gamma)
                step_queries, dt = 2, kind.gamma
            elif isinstance(kind, OGDA):
                z, aux = step_ogda(op, z, aux, kind.gamma)
                step_queries, dt = 1, kind.gamma
            elif isinstance(kind, OGDAStateSpace):
                z, aux = step_ogda_s(op, z, aux, kind.gamma)
                step_queries, dt = 1, kind.gamma
            elif isinstance(kind, LookaheadGDA):
                z = step_la_gda(op, z, kind.gamma, kind.k, kind.alpha)
                step_queries, dt = kind.k, kind.gamma
            elif isinstance(kind, OGDAVariableStep):
                gamma_n = kind.step_size(n)
                z, aux = step_ogda(op, z, aux, gamma_n)
                step_queries, dt = 1, gamma_n
            elif isinstance(kind, ImplicitOGDA):
                z, aux, step_queries = step_ogda_implicit(
                    op, z, aux, kind.gamma, kind.fp_tol, kind.fp_max_iter
                )
                dt = kind.gamma
            else:
                raise TypeError(f"unknown optimizer kind {kind!r}")
        except TypeError:
            raise
        except (ValueError, FloatingPointError, NoConvergenceError):
            # Overflow / non-finite evaluation: the run is diverged; the
            # remaining records stay NaN-padded.
            diverged = True
            break
        total_queries += step_queries
        t += dt
        record(n + 1, z)
        last = n + 1
        if not np.all(np.isfinite(z)) or np.linalg.norm(z) > DIVERGENCE_GUARD:
            diverged = True
        if not np.all(np.isfinite(z)):
            break
    # Forward-fill the time/query axes of any NaN-padded tail.
    if last < steps:
        times[last + 1 :] = times[last]
        queries[last + 1 :] = queries[last]

    return Trajectory(
        method=getattr(kind, "name", type(kind).__name__),
        problem=problem_label or op.label,
        steps=np.arange(n_rec),
        times=times,
        queries=queries,
        states=states,
        metrics=cols,
        diverged=diverged,
    )


#: Method identifiers exposed to the CLI.
METHOD_IDS = ("gda", "eg", "ogda", "ogda-s", "la-gda", "ogda-varstep", "ogda-implicit")


def make_method(method_id, gamma=None, alpha=0.5, k=2, gamma0=0.1, power=0.6,
                fp_tol=1e-12, fp_max_iter=200):
    """Instantiate a method descriptor from its CLI identifier."""
    if method_id == "ogda-varstep":
        return OGDAVariableStep(gamma0=gamma0, power=power)
    if gamma is None:
        raise ValueError(f"method {method_id!r} requires gamma")
    if method_id == "gda":
        return GDA(gamma)
    if method_id == "eg":
        return EG(gamma)
    if method_id == "ogda":
        return OGDA(gamma)
    if method_id == "ogda-s":
        return OGDAStateSpace(gamma)
    if method_id == "la-gda":
        return LookaheadGDA(gamma, k=k, alpha=alpha)
    if method_id == "ogda-implicit":
        return ImplicitOGDA(gamma, fp_tol=fp_tol, fp_max_iter=fp_max_iter)
    raise ValueError(f"unknown method id {method_id!r}; known: {', '.join(METHOD_IDS)}")
