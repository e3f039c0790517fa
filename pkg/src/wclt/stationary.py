"""Stationary-state structure of WCLT generators.

Covers the interaction-free subspace W_D (the common kernel of all Kraus
blocks and their adjoints), annihilator membership, detailed-balance
classification, the Liouvillian kernel, the W_D / W_D-perp block
decomposition of states and (sub)harmonicity of projections.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolution import evolve_adjoint, limit_state
from .generator import WcltGenerator, apply_adjoint, apply_predual, superoperator_matrix, unvec
from .linalg import (
    Subspace,
    check_density,
    check_hermitian,
    commutator,
    dagger,
    full_space,
    intersect,
    kernel,
    min_eig,
    projector,
)

ROUTES = ("kernel_pairs", "quadratic")


class StructureError(ValueError):
    """The state does not commute with the projection onto W_D."""


def interaction_free_subspace(gen: WcltGenerator, route: str = "kernel_pairs",
                              rel_tol: float = 1e-10) -> Subspace:
    """W_D by intersecting ker D_w and ker D_w^† (``kernel_pairs``) or
    ker(D_w D_w^† + D_w^† D_w) (``quadratic``) over all frequencies."""
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    pieces = []
    for ch in gen.nontrivial_channels():
        D = ch.kraus
        if route == "kernel_pairs":
            pieces += [kernel(D, rel_tol), kernel(dagger(D), rel_tol)]
        else:
            pieces.append(kernel(D @ dagger(D) + dagger(D) @ D, rel_tol))
    if not pieces:
        return full_space(gen.dim)
    return intersect(pieces)


def annihilator_membership(gen: WcltGenerator, rho: np.ndarray,
                           tol: float = 1e-10) -> tuple[bool, dict]:
    """Whether tr(rho D_w) vanishes for every Bohr frequency; also returns the traces."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (gen.dim, gen.dim):
        raise ValueError(f"state has shape {rho.shape}, generator dimension is {gen.dim}")
    traces = {ch.omega: complex(np.trace(rho @ ch.kraus)) for ch in gen.channels}
    return all(abs(v) <= tol for v in traces.values()), traces


@dataclass
class BalanceClassification:
    kind: str
    c_values: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)


def detailed_balance_classify(gen: WcltGenerator, rho: np.ndarray,
                              tol: float = 1e-9) -> BalanceClassification:
    """Classify ``rho`` by the relation rho D_w = c_w D_w rho.

    For each nontrivial channel, c_w is fitted by least squares,
    c = <D rho, rho D> / ||D rho||^2. Channels where both products vanish are
    skipped. The result is

    - ``annihilating``: every channel skipped,
    - ``none``: some channel has relative residual above ``tol`` (or D rho = 0
      while rho D != 0),
    - ``detailed``: every fitted c_w equals gamma_minus / gamma_plus within ``tol``,
    - ``local_detailed`` otherwise.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (gen.dim, gen.dim):
        raise ValueError(f"state has shape {rho.shape}, generator dimension is {gen.dim}")
    c_values, residuals = {}, {}
    kind_none = False
    matches_rates = True
    for ch in gen.nontrivial_channels():
        D = ch.kraus
        left, right = rho @ D, D @ rho
        nl, nr = np.linalg.norm(left), np.linalg.norm(right)
        floor = tol * np.linalg.norm(D)
        if nl <= floor and nr <= floor:
            continue
        if nr <= floor:
            residuals[ch.omega] = np.inf
            kind_none = True
            continue
        c = np.vdot(right, left) / nr**2
        res = float(np.linalg.norm(left - c * right) / max(nl, nr))
        c_values[ch.omega] = complex(c)
        residuals[ch.omega] = res
        if res > tol:
            kind_none = True
        if ch.gamma_plus == 0:
            matches_rates = False
        else:
            target = ch.gamma_minus / ch.gamma_plus
            if abs(c - target) > tol * max(1.0, abs(target)):
                matches_rates = False
    if kind_none:
        kind = "none"
    elif not c_values:
        kind = "annihilating"
    elif matches_rates:
        kind = "detailed"
    else:
        kind = "local_detailed"
    return BalanceClassification(kind, c_values, residuals)


@dataclass
class StationaryResult:
    kernel: Subspace
    state: np.ndarray
    residual: float
    converged: bool
    time: float = 0.0

    @property
    def kernel_dim(self) -> int:
        return self.kernel.dim

    def kernel_operators(self) -> list[np.ndarray]:
        d = int(round(np.sqrt(self.kernel.ambient_dim)))
        return [unvec(self.kernel.basis[:, j], d) for j in range(self.kernel.dim)]


def stationary_kernel(gen: WcltGenerator, rel_tol: float = 1e-10, residual_tol: float = 1e-9,
                      t_max: float = 1e4) -> StationaryResult:
    """Kernel of the superoperator plus the long-time limit of the maximally mixed state."""
    S = superoperator_matrix(gen)
    ker = kernel(S, rel_tol)
    d = gen.dim
    for j in range(ker.dim):
        r = np.linalg.norm(apply_predual(gen, unvec(ker.basis[:, j], d)))
        if r > 1e-9:
            raise ArithmeticError(f"kernel vector {j} has residual {r:.2e}")
    lim = limit_state(gen, np.eye(d, dtype=complex) / d, residual_tol=residual_tol, t_max=t_max)
    return StationaryResult(ker, lim.state, lim.residual, lim.converged, lim.time)


@dataclass
class StructureDecomposition:
    theta: float
    rho_wd: np.ndarray | None
    rho_perp: np.ndarray | None

    def reconstruct(self) -> np.ndarray:
        parts = []
        if self.rho_wd is not None:
            parts.append(self.theta * self.rho_wd)
        if self.rho_perp is not None:
            parts.append((1 - self.theta) * self.rho_perp)
        return sum(parts)


def decompose_state(rho: np.ndarray, wd: Subspace, tol: float = 1e-9,
                    zero_tol: float = 1e-14) -> StructureDecomposition:
    """Split rho = theta rho_wd + (1 - theta) rho_perp along W_D.

    Requires [rho, P_WD] = 0; raises ``StructureError`` otherwise rather than
    projecting the state.
    """
    rho = check_density(rho)
    P = projector(wd)
    if P.shape != rho.shape:
        raise ValueError("state and subspace dimensions differ")
    comm = np.linalg.norm(commutator(rho, P))
    if comm > tol:
        raise StructureError(f"state lacks the block structure: ||[rho, P_WD]|| = {comm:.2e}")
    Q = np.eye(P.shape[0]) - P
    theta = float(np.clip(np.trace(P @ rho).real, 0.0, 1.0))
    rho_wd = P @ rho @ P / theta if theta > zero_tol else None
    rho_perp = Q @ rho @ Q / (1 - theta) if theta < 1 - zero_tol else None
    return StructureDecomposition(theta, rho_wd, rho_perp)


@dataclass
class SubharmonicReport:
    subharmonic: bool
    harmonic: bool
    times: list
    min_eigs: list
    max_eigs: list
    infinitesimal_min_eig: float
    infinitesimal_diag_norm: float

    def __bool__(self) -> bool:
        return self.subharmonic


def is_subharmonic(gen: WcltGenerator, p: np.ndarray, times=(0.1, 0.5, 2.0),
                   tol: float = 1e-8) -> SubharmonicReport:
    """Check T_t(p) >= p at the sampled times (and T_t(p) = p for harmonicity).

    Also reports an infinitesimal signal: the smallest eigenvalue of L(p)
    compressed to the range of 1 - p, and ||p L(p) p|| (zero when p is subharmonic).
    """
    p = check_hermitian(p, tol=1e-10)
    if np.linalg.norm(p @ p - p) > 1e-10:
        raise ValueError("p is not an orthogonal projection")
    times = sorted(float(t) for t in times)
    _, ops = evolve_adjoint(gen, p, times[-1], t_eval=times)
    lo, hi = [], []
    for x in ops[-len(times):]:
        w = np.linalg.eigvalsh(x - p)
        lo.append(float(w[0]))
        hi.append(float(w[-1]))
    Lp = apply_adjoint(gen, p)
    B = kernel(p, 1e-10).basis
    inf_min = min_eig(dagger(B) @ Lp @ B) if B.shape[1] else 0.0
    sub = all(v >= -tol for v in lo)
    harm = sub and all(v <= tol for v in hi)
    return SubharmonicReport(sub, harm, times, lo, hi, inf_min, float(np.linalg.norm(p @ Lp @ p)))
