"""Time integration of the master equation and of its Heisenberg dual.

The integrator is the classical fourth-order Runge-Kutta scheme, used either
with a fixed step or with step-doubling error control. For a linear,
time-independent generator RK4 reproduces the fourth-order Taylor polynomial
of the propagator, so stationary states are exact fixed points of a step.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .generator import WcltGenerator, apply_adjoint, apply_predual, superoperator_matrix
from .linalg import check_density, check_hermitian, hermitian_part

log = logging.getLogger(__name__)

# vectorized right-hand side is used up to this Hilbert dimension
DENSE_RHS_MAX_DIM = 40
POSITIVITY_ABORT = 1e-6
TRACE_RENORM = 1e-10


class IntegrationError(RuntimeError):
    pass


class PositivityError(IntegrationError):
    pass


@dataclass
class Trajectory:
    times: np.ndarray
    states: list | None
    observables: dict = field(default_factory=dict)
    steps: int = 0
    rejected: int = 0

    @property
    def final(self) -> np.ndarray:
        if not self.states:
            raise ValueError("trajectory was run without state retention")
        return self.states[-1]


@dataclass
class LimitResult:
    state: np.ndarray
    residual: float
    time: float
    converged: bool


def _rhs(gen: WcltGenerator, adjoint: bool) -> Callable[[np.ndarray], np.ndarray]:
    d = gen.dim
    if d <= DENSE_RHS_MAX_DIM:
        S = _adjoint_superoperator(gen) if adjoint else superoperator_matrix(gen, DENSE_RHS_MAX_DIM)

        def f(r):
            return (S @ r.reshape(-1, order="F")).reshape((d, d), order="F")
        return f
    return (lambda x: apply_adjoint(gen, x)) if adjoint else (lambda r: apply_predual(gen, r))


def _adjoint_superoperator(gen: WcltGenerator) -> np.ndarray:
    """Column-stacked matrix of the Heisenberg generator.

    tr(A B) = vec(A^T) . vec(B), so duality gives vec(L(x)) = P S^T P vec(x)
    with P the transpose permutation.
    """
    S = superoperator_matrix(gen, max_dim=DENSE_RHS_MAX_DIM)
    d = gen.dim
    idx = np.arange(d * d).reshape((d, d), order="F").T.reshape(-1, order="F")
    return S.T[np.ix_(idx, idx)]


def estimate_norm(f: Callable[[np.ndarray], np.ndarray], d: int, iters: int = 30,
                  seed: int = 0) -> float:
    """Power-iteration estimate of the operator norm of a linear map on d x d matrices."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(iters):
        y = f(x)
        est = float(np.linalg.norm(y))
        if est == 0.0:
            return 0.0
        x = y / est
    return est


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


class _Stepper:
    """RK4 with either fixed substeps or step-doubling error control."""

    def __init__(self, f, d, dt=None, tol=1e-10, h0=None, h_min=1e-12):
        self.f = f
        self.fixed = dt
        self.tol = tol
        self.h_min = h_min
        self.steps = 0
        self.rejected = 0
        if dt is None:
            if h0 is None:
                norm = estimate_norm(f, d)
                h0 = 0.05 / norm if norm > 0 else 1.0
            self.h = h0

    def advance(self, y, span):
        """Integrate over a time span, landing exactly on its end."""
        if span <= 0:
            return y
        if self.fixed is not None:
            n = max(1, int(np.ceil(span / self.fixed - 1e-9)))
            h = span / n
            for _ in range(n):
                y = _rk4_step(self.f, y, h)
            self.steps += n
            return y
        t = 0.0
        while t < span:
            h = min(self.h, span - t)
            full = _rk4_step(self.f, y, h)
            half = _rk4_step(self.f, _rk4_step(self.f, y, 0.5 * h), 0.5 * h)
            err = float(np.max(np.abs(half - full))) / 15.0
            scale = max(1.0, float(np.max(np.abs(half))))
            if err <= self.tol * scale:
                y = half + (half - full) / 15.0
                t += h
                self.steps += 1
                grow = 4.0 if err == 0 else min(4.0, 0.9 * (self.tol * scale / err) ** 0.2)
                if h == self.h:
                    self.h = h * max(1.0, grow)
            else:
                self.rejected += 1
                self.h = h * max(0.1, 0.9 * (self.tol * scale / err) ** 0.2)
                if self.h < self.h_min:
                    raise IntegrationError(f"step size underflow (h = {self.h:.3e})")
        return y


def _grid(t_end, t_eval):
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    if t_eval is None:
        return np.array([0.0, float(t_end)])
    t_eval = np.asarray(t_eval, dtype=float)
    if t_eval.ndim != 1 or np.any(np.diff(t_eval) <= 0) or t_eval[0] < 0 or t_eval[-1] > t_end + 1e-12:
        raise ValueError("t_eval must be increasing within [0, t_end]")
    if t_eval[0] > 0:
        t_eval = np.concatenate([[0.0], t_eval])
    return t_eval


def _as_observables(observables) -> dict:
    if observables is None:
        return {}
    if isinstance(observables, Mapping):
        return {str(k): np.asarray(v, dtype=complex) for k, v in observables.items()}
    return {f"obs{i}": np.asarray(v, dtype=complex) for i, v in enumerate(observables)}


def evolve(gen: WcltGenerator, rho0: np.ndarray, t_end: float, *, dt: float | None = None,
           tol: float = 1e-10, t_eval: Sequence[float] | None = None,
           observables=None, keep_states: bool = True) -> Trajectory:
    """Integrate d rho/dt = L_*(rho) from ``rho0`` up to ``t_end``.

    ``dt`` selects fixed-step RK4 (each output interval is split into equal
    substeps no longer than ``dt``); otherwise steps adapt to ``tol``.
    Observables are recorded as tr(x rho(t)) at every output time.
    """
    rho = check_density(rho0).astype(complex)
    times = _grid(t_end, t_eval)
    obs = _as_observables(observables)
    stepper = _Stepper(_rhs(gen, adjoint=False), gen.dim, dt=dt, tol=tol)

    states = [] if keep_states else None
    values = {k: [] for k in obs}
    t_prev = times[0]
    if t_prev > 0:
        rho = stepper.advance(rho, t_prev)
    for t in times:
        rho = stepper.advance(rho, t - t_prev)
        t_prev = t
        rho = _retain(rho, t)
        if keep_states:
            states.append(rho.copy())
        for k, x in obs.items():
            values[k].append(np.trace(x @ rho))
    return Trajectory(times, states, {k: _maybe_real(v) for k, v in values.items()},
                      stepper.steps, stepper.rejected)


def _maybe_real(values):
    arr = np.asarray(values)
    if np.all(np.abs(arr.imag) <= 1e-12 * np.maximum(1.0, np.abs(arr.real))):
        return arr.real.copy()
    return arr


def _retain(rho: np.ndarray, t: float) -> np.ndarray:
    rho = hermitian_part(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_RENORM:
        log.debug("renormalizing trace drift %.2e at t=%g", tr - 1.0, t)
        rho = rho / tr
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -POSITIVITY_ABORT:
        raise PositivityError(f"state lost positivity at t={t:g} (min eigenvalue {lo:.3e})")
    return rho


def evolve_adjoint(gen: WcltGenerator, x0: np.ndarray, t_end: float, *, dt: float | None = None,
                   tol: float = 1e-12, t_eval: Sequence[float] | None = None) -> tuple[np.ndarray, list]:
    """Integrate dx/dt = L(x); returns output times and operators T_t(x0)."""
    x = check_hermitian(x0, tol=1e-10).astype(complex)
    times = _grid(t_end, t_eval)
    stepper = _Stepper(_rhs(gen, adjoint=True), gen.dim, dt=dt, tol=tol)
    ops = []
    t_prev = 0.0
    for t in times:
        x = hermitian_part(stepper.advance(x, t - t_prev))
        t_prev = t
        ops.append(x.copy())
    return times, ops


def residual(gen: WcltGenerator, rho: np.ndarray) -> float:
    return float(np.linalg.norm(apply_predual(gen, rho)))


def limit_state(gen: WcltGenerator, rho0: np.ndarray, residual_tol: float = 1e-9,
                t_max: float = 1e4, tol: float = 1e-12) -> LimitResult:
    """Evolve until ||L_*(rho)||_F <= residual_tol or ``t_max`` is reached.

    On timeout the last iterate is returned with ``converged=False``.
    """
    rho = check_density(rho0).astype(complex)
    res = residual(gen, rho)
    if res <= residual_tol:
        return LimitResult(rho, res, 0.0, True)
    f = _rhs(gen, adjoint=False)
    stepper = _Stepper(f, gen.dim, tol=tol)
    t = 0.0
    chunk = max(stepper.h * 20, 1e-3)
    while t < t_max:
        span = min(chunk, t_max - t)
        rho = _retain(stepper.advance(rho, span), t + span)
        t += span
        res = residual(gen, rho)
        if res <= residual_tol:
            return LimitResult(rho, res, t, True)
        chunk *= 1.5
    log.warning("limit_state: t_max=%g reached with residual %.3e", t_max, res)
    return LimitResult(rho, res, t, False)


def propagate_exact(gen: WcltGenerator, rho0: np.ndarray, t: float) -> np.ndarray:
    """Reference propagation by exponentiating the superoperator (small dimensions only)."""
    from scipy.linalg import expm

    d = gen.dim
    if d * d > 400:
        raise ValueError("exact propagation is limited to d^2 <= 400")
    S = superoperator_matrix(gen)
    v = expm(t * S) @ np.asarray(rho0, dtype=complex).reshape(-1, order="F")
    return v.reshape((d, d), order="F")
