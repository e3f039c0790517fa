"""Weak-coupling-limit-type (WCLT) Markov generators.

A generator is fixed by the spectral data of a reference Hamiltonian H, an
interaction operator D and, for every positive Bohr frequency w, a rate
quadruple (gamma_minus, gamma_plus, zeta_minus, zeta_plus). Each frequency
contributes a GKSL term built from the Kraus block

    D_w = sum_{(e_n, e_m): e_n - e_m = w} P_m D P_n

and the effective Hamiltonian Delta_w = zeta_minus D_w^† D_w + zeta_plus D_w D_w^†.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    DEFAULT_CLUSTER_TOL,
    SpectralData,
    check_finite,
    check_hermitian,
    commutator,
    dagger,
    hermitian_eig,
)

SUPEROPERATOR_DIM_CAP = 64


@dataclass(frozen=True)
class BohrFrequency:
    omega: float
    # (n, m) indices into SpectralData.eigenvalues with e_n - e_m == omega
    pairs: tuple
    energies: tuple = ()

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"Bohr frequency must be positive, got {self.omega}")


@dataclass(frozen=True)
class Rates:
    gamma_minus: float
    gamma_plus: float
    zeta_minus: float = 0.0
    zeta_plus: float = 0.0

    def __post_init__(self):
        if self.gamma_minus < 0 or self.gamma_plus < 0:
            raise ValueError(f"dissipative rates must be non-negative: {self}")
        for name in ("gamma_minus", "gamma_plus", "zeta_minus", "zeta_plus"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")


ZERO_RATES = Rates(0.0, 0.0)


@dataclass(frozen=True)
class FrequencyChannel:
    freq: BohrFrequency
    kraus: np.ndarray
    gamma_minus: float
    gamma_plus: float
    zeta_minus: float = 0.0
    zeta_plus: float = 0.0
    trivial: bool = False

    @property
    def omega(self) -> float:
        return self.freq.omega

    @property
    def rates(self) -> Rates:
        return Rates(self.gamma_minus, self.gamma_plus, self.zeta_minus, self.zeta_plus)

    def effective_hamiltonian(self) -> np.ndarray:
        return effective_hamiltonian(self)


def bohr_frequencies(spectral: SpectralData, tol: float = DEFAULT_CLUSTER_TOL) -> list[BohrFrequency]:
    """All positive eigenvalue differences, ascending, with near-equal ones merged."""
    ev = spectral.eigenvalues
    diffs = sorted(
        (ev[n] - ev[m], n, m)
        for n in range(len(ev)) for m in range(len(ev)) if ev[n] - ev[m] > 0
    )
    groups: list[list[tuple]] = []
    for item in diffs:
        if groups and item[0] - groups[-1][0][0] <= tol * (1 + abs(item[0])):
            groups[-1].append(item)
        else:
            groups.append([item])
    out = []
    for g in groups:
        pairs = tuple(sorted((n, m) for _, n, m in g))
        out.append(BohrFrequency(
            omega=float(np.mean([w for w, _, _ in g])),
            pairs=pairs,
            energies=tuple((float(ev[n]), float(ev[m])) for n, m in pairs),
        ))
    return out


def kraus_operator(D: np.ndarray, freq: BohrFrequency, spectral: SpectralData) -> np.ndarray:
    D = check_finite(np.asarray(D, dtype=complex), "interaction")
    d = spectral.dim
    if D.shape != (d, d):
        raise ValueError(f"interaction has shape {D.shape}, spectral data has dimension {d}")
    out = np.zeros((d, d), dtype=complex)
    for n, m in freq.pairs:
        out += spectral.projections[m] @ D @ spectral.projections[n]
    return out


def gamma_from_temperature(c_omega: float, beta: float, omega: float) -> tuple[float, float]:
    """Thermal rate pair ``(gamma_plus, gamma_minus)``.

    gamma_plus = c / (exp(beta w) - 1) and gamma_minus = c exp(beta w) / (exp(beta w) - 1),
    so that gamma_minus / gamma_plus = exp(beta w) and gamma_minus - gamma_plus = c.
    """
    if c_omega < 0:
        raise ValueError("c_omega must be non-negative")
    x = beta * omega
    if not x > 0:
        raise ValueError(f"beta * omega must be positive, got {x}")
    if c_omega == 0:
        return 0.0, 0.0
    if x > 700.0:
        return c_omega * math.exp(-x), c_omega
    em1 = math.expm1(x)
    return c_omega / em1, c_omega / -math.expm1(-x)


def thermal_rates(c, beta, zeta_minus=0.0, zeta_plus=0.0) -> Callable[[BohrFrequency], Rates]:
    """Rate schedule from temperature data.

    ``c`` and ``beta`` may be constants or callables of the frequency value.
    """
    c_of = c if callable(c) else (lambda w, _c=float(c): _c)
    beta_of = beta if callable(beta) else (lambda w, _b=float(beta): _b)

    def schedule(freq: BohrFrequency) -> Rates:
        gp, gm = gamma_from_temperature(c_of(freq.omega), beta_of(freq.omega), freq.omega)
        return Rates(gm, gp, zeta_minus, zeta_plus)

    return schedule


def effective_hamiltonian(ch: FrequencyChannel) -> np.ndarray:
    D = ch.kraus
    return ch.zeta_minus * (dagger(D) @ D) + ch.zeta_plus * (D @ dagger(D))


@dataclass(frozen=True)
class WcltGenerator:
    """Predual generator ``L_*`` and its adjoint ``L`` for a list of frequency channels.

    ``commutant_term`` is an optional extra Hamiltonian in the commutant of H,
    contributing ``-i[Delta_1, rho]`` to the predual.
    """

    spectral: SpectralData
    interaction: np.ndarray
    channels: tuple
    commutant_term: np.ndarray | None = None
    tol: float = DEFAULT_CLUSTER_TOL
    _active: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        active = []
        for ch in self.channels:
            if ch.trivial:
                continue
            D = ch.kraus
            Dd = dagger(D)
            active.append((ch.gamma_minus, ch.gamma_plus, D, Dd, Dd @ D, D @ Dd,
                           effective_hamiltonian(ch)))
        object.__setattr__(self, "_active", tuple(active))

    @property
    def dim(self) -> int:
        return self.spectral.dim

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.spectral.hamiltonian()

    @property
    def frequencies(self) -> list[BohrFrequency]:
        return [ch.freq for ch in self.channels]

    def nontrivial_channels(self) -> list[FrequencyChannel]:
        return [ch for ch in self.channels if not ch.trivial]

    def channel(self, omega: float) -> FrequencyChannel:
        for ch in self.channels:
            if abs(ch.omega - omega) <= self.tol * (1 + abs(omega)):
                return ch
        raise KeyError(f"no Bohr frequency near {omega}")

    def effective_hamiltonian(self) -> np.ndarray:
        """Sum of all channel effective Hamiltonians plus the commutant term."""
        total = np.zeros((self.dim, self.dim), dtype=complex)
        for *_, delta in self._active:
            total += delta
        if self.commutant_term is not None:
            total += self.commutant_term
        return total

    def predual(self, rho: np.ndarray) -> np.ndarray:
        return apply_predual(self, rho)

    def adjoint(self, x: np.ndarray) -> np.ndarray:
        return apply_adjoint(self, x)

    def superoperator(self, max_dim: int = SUPEROPERATOR_DIM_CAP) -> np.ndarray:
        return superoperator_matrix(self, max_dim)


def _check_square(gen: WcltGenerator, A: np.ndarray, name: str) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.shape != (gen.dim, gen.dim):
        raise ValueError(f"{name} has shape {A.shape}, generator dimension is {gen.dim}")
    return A


def apply_predual(gen: WcltGenerator, rho: np.ndarray) -> np.ndarray:
    """Schrodinger-picture generator applied to ``rho``."""
    rho = _check_square(gen, rho, "rho")
    out = np.zeros_like(rho)
    for gm, gp, D, Dd, DdD, DDd, delta in gen._active:
        out -= 0.5 * gm * (DdD @ rho + rho @ DdD)
        out += gp * (Dd @ rho @ D)
        out -= 0.5 * gp * (DDd @ rho + rho @ DDd)
        out += gm * (D @ rho @ Dd)
        out -= 1j * commutator(delta, rho)
    if gen.commutant_term is not None:
        out -= 1j * commutator(gen.commutant_term, rho)
    return out


def apply_adjoint(gen: WcltGenerator, x: np.ndarray) -> np.ndarray:
    """Heisenberg-picture generator applied to the observable ``x``."""
    x = _check_square(gen, x, "x")
    out = np.zeros_like(x)
    for gm, gp, D, Dd, DdD, DDd, delta in gen._active:
        out += 1j * commutator(delta, x)
        out -= gm * (0.5 * (DdD @ x + x @ DdD) - Dd @ x @ D)
        out -= gp * (0.5 * (DDd @ x + x @ DDd) - D @ x @ Dd)
    if gen.commutant_term is not None:
        out += 1j * commutator(gen.commutant_term, x)
    return out


def vec(A: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(A).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int | None = None) -> np.ndarray:
    v = np.asarray(v)
    if d is None:
        d = math.isqrt(v.size)
    return v.reshape((d, d), order="F")


def superoperator_matrix(gen: WcltGenerator, max_dim: int = SUPEROPERATOR_DIM_CAP) -> np.ndarray:
    """Matrix ``S`` with ``vec(L_*(rho)) = S vec(rho)`` (column stacking).

    Uses ``vec(A X B) = (B^T kron A) vec(X)``.
    """
    d = gen.dim
    if d > max_dim:
        raise ValueError(f"dimension {d} exceeds the superoperator cap {max_dim}")
    eye = np.eye(d)
    S = np.zeros((d * d, d * d), dtype=complex)

    def sandwich(A, B):
        return np.kron(B.T, A)

    for gm, gp, D, Dd, DdD, DDd, delta in gen._active:
        S -= 0.5 * gm * (sandwich(DdD, eye) + sandwich(eye, DdD))
        S += gp * sandwich(Dd, D)
        S -= 0.5 * gp * (sandwich(DDd, eye) + sandwich(eye, DDd))
        S += gm * sandwich(D, Dd)
        S -= 1j * (sandwich(delta, eye) - sandwich(eye, delta))
    if gen.commutant_term is not None:
        K = gen.commutant_term
        S -= 1j * (sandwich(K, eye) - sandwich(eye, K))
    return S


RateSpec = Callable[[BohrFrequency], Rates] | Mapping[float, Rates]


def _match_rates(freqs: list[BohrFrequency], rates: Mapping[float, Rates], tol: float) -> dict[int, Rates]:
    matched: dict[int, Rates] = {}
    for omega, r in rates.items():
        hits = [i for i, f in enumerate(freqs) if abs(f.omega - float(omega)) <= tol * (1 + abs(f.omega))]
        if not hits:
            raise ValueError(f"rate entry for omega={omega} matches no Bohr frequency "
                             f"(available: {[f.omega for f in freqs]})")
        if hits[0] in matched:
            raise ValueError(f"duplicate rate entry for omega={freqs[hits[0]].omega}")
        matched[hits[0]] = r if isinstance(r, Rates) else Rates(*r)
    return matched


def build_generator(spectral: SpectralData, interaction: np.ndarray, rates: RateSpec, *,
                    tol: float = DEFAULT_CLUSTER_TOL, commutant_term: np.ndarray | None = None,
                    trivial_tol: float = 1e-14) -> WcltGenerator:
    """Assemble a generator with one channel per positive Bohr frequency.

    ``rates`` is either a callable ``BohrFrequency -> Rates`` or a mapping from
    frequency value to ``Rates``. Mapping keys must each match a Bohr frequency
    within ``tol``; every nontrivial channel needs an entry. Channels whose
    Kraus block vanishes are kept and flagged trivial.
    """
    D = check_finite(np.asarray(interaction, dtype=complex), "interaction")
    d = spectral.dim
    if D.shape != (d, d):
        raise ValueError(f"interaction has shape {D.shape}, expected {(d, d)}")
    freqs = bohr_frequencies(spectral, tol)
    matched = None if callable(rates) else _match_rates(freqs, rates, tol)
    scale = max(1.0, float(np.max(np.abs(D))))

    channels = []
    for i, f in enumerate(freqs):
        K = kraus_operator(D, f, spectral)
        trivial = float(np.max(np.abs(K), initial=0.0)) <= trivial_tol * scale
        if matched is None:
            r = rates(f)
        elif i in matched:
            r = matched[i]
        elif trivial:
            r = ZERO_RATES
        else:
            raise ValueError(f"no rates given for nontrivial Bohr frequency {f.omega}")
        channels.append(FrequencyChannel(f, K, r.gamma_minus, r.gamma_plus,
                                         r.zeta_minus, r.zeta_plus, trivial))

    if commutant_term is not None:
        commutant_term = check_hermitian(commutant_term, name="commutant term")
        H = spectral.hamiltonian()
        err = np.linalg.norm(commutator(commutant_term, H))
        if err > 1e-10 * max(1.0, np.linalg.norm(H) * np.linalg.norm(commutant_term)):
            raise ValueError(f"commutant term does not commute with H (||[K, H]|| = {err:.2e})")
    return WcltGenerator(spectral, D, tuple(channels), commutant_term, tol)


def generator_from_hamiltonian(H: np.ndarray, interaction: np.ndarray, rates: RateSpec,
                               cluster_tol: float = DEFAULT_CLUSTER_TOL, **kwargs) -> WcltGenerator:
    return build_generator(hermitian_eig(H, cluster_tol), interaction, rates, tol=cluster_tol, **kwargs)
