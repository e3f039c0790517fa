"""Built-in models: the modified AKV quantum transport model and the KV
photosynthesis model, with the closed-form oracles that go with them.

Basis conventions (index = label):

AKV, dimension N + M + 1
    e_0 (energy 0), e_1 (eps1), e_2..e_N (eps2, block P2), e_{N+1}..e_{N+M} (eps3, block P3)
KV, dimension N + 1
    e_0 (energy 0), e_1 (eps1), e_2..e_N (eps2, block P2)
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .generator import Rates, WcltGenerator, build_generator, thermal_rates
from .linalg import (
    SpectralData,
    Subspace,
    check_density,
    dagger,
    hermitian_part,
    projector,
    span,
)

IDENTITY_TOL = 1e-10


class ModelError(ValueError):
    pass


def default_interference(N: int, M: int) -> np.ndarray:
    """Interference coefficients g (M x (N-1)), rows indexed by b, columns by a.

    g_ab = exp(2 pi i (a - (N-1)) (b - (N+1)) / (N-1)). Row b = N+1 and column
    a = N-1 are all ones; distinct rows are orthogonal with squared norm N-1.
    """
    if N < 2 or not 1 <= M <= N - 1:
        raise ModelError(f"need N >= 2 and 1 <= M <= N-1, got N={N}, M={M}")
    a = np.arange(2, N + 1)
    b = np.arange(N + 1, N + M + 1)
    return np.exp(2j * np.pi * np.outer(b - (N + 1), a - (N - 1)) / (N - 1))


@dataclass(frozen=True)
class AkvParams:
    """Parameters of the modified AKV model.

    The rate tuples are indexed by (w1, w2, w3) with w1 = eps1 - eps2,
    w2 = eps2 - eps3, w3 = eps3. ``gamma_re_plus[2]`` must be 0, and
    ``gamma_im_plus[2]`` is unused.
    """

    N: int = 4
    M: int = 2
    eps: tuple = (7.0, 3.0, 1.0)
    gamma_re_minus: tuple = (1.0, 2.0, 1.0)
    gamma_re_plus: tuple = (1.0, 1.0, 0.0)
    gamma_im_minus: tuple = (0.5, 0.5, 0.5)
    gamma_im_plus: tuple = (0.5, 0.5, 0.5)
    g: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        N, M = self.N, self.M
        if N < 3:
            raise ModelError("N must be at least 3")
        if not 1 <= M <= N - 1:
            raise ModelError(f"M must satisfy 1 <= M <= N-1, got M={M}")
        e1, e2, e3 = self.eps
        if not 0 < e3 < e2 < e1:
            raise ModelError(f"eigenvalues must satisfy 0 < eps3 < eps2 < eps1, got {self.eps}")
        for name in ("gamma_re_minus", "gamma_re_plus", "gamma_im_minus", "gamma_im_plus"):
            vals = getattr(self, name)
            if len(vals) != 3 or any(v < 0 or not math.isfinite(v) for v in vals):
                raise ModelError(f"{name} must hold three finite non-negative values")
        if min(self.gamma_re_minus) <= 0 or min(self.gamma_re_plus[:2]) <= 0:
            raise ModelError("Re-rates for w1, w2 and gamma_re_minus for w3 must be positive")
        if self.gamma_re_plus[2] != 0:
            raise ModelError("gamma_re_plus for w3 must be 0")
        if self.g is not None:
            g = np.asarray(self.g, dtype=complex)
            if g.shape != (M, N - 1):
                raise ModelError(f"g must have shape {(M, N - 1)}, got {g.shape}")
            err = np.max(np.abs(g @ dagger(g) / (N - 1) - np.eye(M)))
            if err > IDENTITY_TOL:
                raise ModelError(f"interference matrix violates g g^dag / (N-1) = I (error {err:.2e})")
            object.__setattr__(self, "g", g)

    @property
    def dim(self) -> int:
        return self.N + self.M + 1

    @property
    def frequencies(self) -> tuple[float, float, float]:
        e1, e2, e3 = self.eps
        return e1 - e2, e2 - e3, e3

    def interference(self) -> np.ndarray:
        return default_interference(self.N, self.M) if self.g is None else self.g

    def rates(self) -> dict[float, Rates]:
        """Generator rates for the three active frequencies.

        Each Kraus factor sqrt(2 Gamma_Re) multiplies sqrt(N-1) D_w, so
        gamma = 2 (N-1) Gamma_Re; zeta follows the effective Hamiltonian.
        """
        k = self.N - 1
        rm, rp, im_, ip = self.gamma_re_minus, self.gamma_re_plus, self.gamma_im_minus, self.gamma_im_plus
        w1, w2, w3 = self.frequencies
        return {
            w1: Rates(2 * k * rm[0], 2 * k * rp[0], -k * im_[0], k * ip[0]),
            w2: Rates(2 * k * rm[1], 2 * k * rp[1], -k * im_[1], k * ip[1]),
            w3: Rates(2 * k * rm[2], 0.0, -k * im_[2], 0.0),
        }

    def replace(self, **changes) -> "AkvParams":
        kw = {name: getattr(self, name) for name in self.__dataclass_fields__}
        kw.update(changes)
        return AkvParams(**kw)


@dataclass(frozen=True)
class AkvModel:
    params: AkvParams
    generator: WcltGenerator
    Z: np.ndarray
    T: np.ndarray
    psi: np.ndarray
    psi_prime: np.ndarray
    P: tuple  # P0, P1, P2, P3
    absZ: np.ndarray
    q: np.ndarray
    p_wd: np.ndarray
    p_v: np.ndarray

    @property
    def dim(self) -> int:
        return self.params.dim

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def weights(self) -> tuple[float, float]:
        """(Gamma_+, Gamma_-) / (Gamma_+ + Gamma_-) for the Z channel."""
        gp, gm = self.params.gamma_re_plus[1], self.params.gamma_re_minus[1]
        return gp / (gp + gm), gm / (gp + gm)

    @property
    def p_wd_closed_form(self) -> np.ndarray:
        """P0 + (P2 - |Z|): the interaction-free projector of the active jumps only.

        With Gamma_Re,+ = 0 at w3 the operator D_w3^dag never acts, and e0 then
        lies in the common kernel of the operators that do. This differs from
        ``p_wd`` by P0.
        """
        return self.P[0] + self.p_wd

    @property
    def p_wd_perp(self) -> np.ndarray:
        return np.eye(self.dim) - self.p_wd

    @property
    def p_recurrent_perp(self) -> np.ndarray:
        """Projection onto W_D-perp intersected with V, equal to q + Z q Z^dag."""
        return self.q + self.Z @ self.q @ dagger(self.Z)

    def kraus(self, i: int) -> np.ndarray:
        """Kraus block of w_i (i = 1..6 in the model's frequency labelling)."""
        return self.generator.channel(self.omega(i)).kraus

    def omega(self, i: int) -> float:
        e1, e2, e3 = self.params.eps
        return {1: e1 - e2, 2: e2 - e3, 3: e3, 4: e1, 5: e2, 6: e1 - e3}[i]

    def subspace(self, P: np.ndarray) -> Subspace:
        return span(P)

    def heff(self) -> np.ndarray:
        return self.generator.effective_hamiltonian()

    def invariant(self, sigma, lam: float = 0.0, rho_wd=None) -> np.ndarray:
        return akv_invariant(self, sigma, lam, rho_wd)

    def limit_state(self, eta) -> np.ndarray:
        return akv_limit_state(self, eta)

    def random_walk(self) -> "RandomWalk":
        return random_walk_reduction(self)

    def energy_gain(self) -> float:
        return akv_energy_gain(self)


def _unit(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def build_akv(params: AkvParams | None = None) -> AkvModel:
    """Construct the modified AKV model and its distinguished operators."""
    params = params or AkvParams()
    N, M, d = params.N, params.M, params.dim
    e1, e2, e3 = params.eps
    k = N - 1
    sk = math.sqrt(k)

    freqs = sorted([e1 - e2, e2 - e3, e3, e1, e2, e1 - e3])
    if min(np.diff(freqs)) <= 1e-9 * (1 + max(freqs)):
        raise ModelError(f"the six Bohr frequencies must be distinct, got {freqs}")

    g = params.interference()
    Z = np.zeros((d, d), dtype=complex)
    Z[N + 1:, 2:N + 1] = g / sk
    Zd = dagger(Z)

    P0 = np.diag(_unit(d, 0).real).astype(complex)
    P1 = np.diag(_unit(d, 1).real).astype(complex)
    P2 = np.diag(np.r_[0, 0, np.ones(k), np.zeros(M)]).astype(complex)
    P3 = np.diag(np.r_[np.zeros(N + 1), np.ones(M)]).astype(complex)
    T = P0 + P1 + Z + Zd

    psi = np.r_[0, 0, np.ones(k), np.zeros(M)].astype(complex)
    psi_prime = np.r_[np.zeros(N + 1), np.ones(M)].astype(complex)
    e = [_unit(d, i) for i in range(d)]

    # The rank-one terms of D come from these identities; assert rather than assume.
    identities = {
        "T e_1 = e_1": T @ e[1] - e[1],
        "T e_0 = e_0": T @ e[0] - e[0],
        "sqrt(N-1) T e_{N+1} = psi": sk * (T @ e[N + 1]) - psi,
        "sqrt(N-1) T e_{N-1} = psi'": sk * (T @ e[N - 1]) - psi_prime,
    }
    for name, diff in identities.items():
        if np.max(np.abs(diff)) > IDENTITY_TOL:
            raise ModelError(f"identity {name} fails for the given interference matrix")

    D = np.outer(T @ e[N + 1], (T @ e[1]).conj()) + Z + np.outer(T @ e[0], (T @ e[N - 1]).conj())

    spectral = SpectralData.from_levels([0.0, e1, e2, e3], [1, 1, k, M])
    gen = build_generator(spectral, D, params.rates())

    absZ = hermitian_part(Zd @ Z)
    fixed = span([psi, Zd @ psi_prime])
    q = hermitian_part(absZ @ (np.eye(d) - projector(fixed)))
    # e0 spans the range of D_w3, so it is not interaction free
    p_wd = P2 - absZ
    v_perp = span([e[0], e[1], psi, psi_prime, Z @ psi, Zd @ psi_prime])
    p_v = np.eye(d) - projector(v_perp)
    return AkvModel(params, gen, Z, T, psi, psi_prime, (P0, P1, P2, P3), absZ, q,
                    hermitian_part(p_wd), hermitian_part(p_v))


def _support_check(rho: np.ndarray, P: np.ndarray, what: str, tol: float = 1e-10):
    err = np.max(np.abs(P @ rho @ P - rho))
    if err > tol:
        raise ModelError(f"state is not supported on {what} (error {err:.2e})")


def akv_invariant(model: AkvModel, sigma, lam: float = 0.0, rho_wd=None) -> np.ndarray:
    """Invariant state lam rho_wd + (1 - lam)(p sigma + (1 - p) Z sigma Z^dag).

    ``sigma`` must be a state on V intersected with Im|Z| (q sigma q = sigma),
    ``rho_wd`` a state on W_D; p = Gamma_+ / (Gamma_+ + Gamma_-) for the Z channel.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    out = np.zeros((model.dim, model.dim), dtype=complex)
    if lam > 0:
        if rho_wd is None:
            raise ValueError("rho_wd is required when lambda > 0")
        rho_wd = check_density(rho_wd, name="rho_wd")
        _support_check(rho_wd, model.p_wd, "W_D")
        out += lam * rho_wd
    if lam < 1:
        sigma = check_density(sigma, name="sigma")
        _support_check(sigma, model.q, "V intersected with Im|Z|")
        p, r = model.weights
        out += (1 - lam) * (p * sigma + r * model.Z @ sigma @ dagger(model.Z))
    return out


def akv_limit_state(model: AkvModel, eta) -> np.ndarray:
    """Long-time limit of a state supported on W_D-perp intersected with V.

    By linearity of the two single-block limits, the limit is
    p sigma + (1 - p) Z sigma Z^dag with sigma = q eta q + Z^dag eta Z, which
    has unit trace because tr(Z^dag eta Z) = tr(P3 eta). Coherences between
    the q block and the P3 block decay.
    """
    eta = check_density(eta, name="eta")
    _support_check(eta, model.p_recurrent_perp, "W_D-perp intersected with V")
    Z, q = model.Z, model.q
    sigma = q @ eta @ q + dagger(Z) @ eta @ Z
    tr = np.trace(sigma).real
    if tr <= 0:
        raise ModelError("eta has no weight on either block")
    sigma = sigma / tr
    p, r = model.weights
    return hermitian_part(p * sigma + r * Z @ sigma @ dagger(Z))


@dataclass(frozen=True)
class RandomWalk:
    """Two-state jump process between sigma and Z sigma Z^dag.

    Q-matrix [[-a, a], [b, -b]] with a = 2(N-1) Gamma_Re,-, b = 2(N-1) Gamma_Re,+.
    """

    a: float
    b: float

    @property
    def Q(self) -> np.ndarray:
        return np.array([[-self.a, self.a], [self.b, -self.b]])

    @property
    def stationary(self) -> np.ndarray:
        s = self.a + self.b
        return np.array([self.b / s, self.a / s])

    def weights(self, t) -> np.ndarray:
        """Weights (w_sigma, w_Z) at time t starting from sigma; shape (..., 2)."""
        t = np.asarray(t, dtype=float)
        a, b = self.a, self.b
        decay = np.exp(-t * (a + b))
        w_sigma = (b + a * decay) / (a + b)
        w_z = (a - a * decay) / (a + b)
        return np.stack([w_sigma, w_z], axis=-1)


def random_walk_reduction(model: AkvModel) -> RandomWalk:
    k = model.N - 1
    return RandomWalk(2 * k * model.params.gamma_re_minus[1], 2 * k * model.params.gamma_re_plus[1])


def akv_energy_gain(model: AkvModel) -> float:
    """Energy gain for initial states on Im|Z| intersected with {psi, Z^dag psi'}-perp."""
    p = model.params
    gp, gm = p.gamma_re_plus[1], p.gamma_re_minus[1]
    return (p.N - 1) * gm / (gp + gm) * (p.gamma_im_plus[1] + p.gamma_im_minus[1])


@dataclass(frozen=True)
class KvModel:
    N: int
    eps: tuple
    theta: float
    generator: WcltGenerator
    chi: np.ndarray
    P: tuple  # P0, P1, P2

    @property
    def dim(self) -> int:
        return self.N + 1

    @property
    def chi_unit(self) -> np.ndarray:
        return self.chi / np.linalg.norm(self.chi)

    def p_wd(self) -> np.ndarray:
        d = self.dim
        return np.eye(d) - projector(span([_unit(d, 0), _unit(d, 1), self.chi]))


def build_kv(N: int = 5, eps1: float = 1.0, eps2: float = 3.0, rates=None,
             theta: float = math.pi / 2) -> KvModel:
    """KV photosynthesis model with Kraus blocks |e0><chi|, |e1><Psi|, |e0><e1|.

    ``rates`` is a callable ``BohrFrequency -> Rates`` (default: thermal with
    c = 1, beta = 1) or a mapping with keys ``"omega1"`` (eps2),
    ``"omega2"`` (eps2 - eps1) and ``"omega3"`` (eps1). The phase ``theta`` of
    Psi = exp(i theta) chi leaves |Psi><Psi| = |chi><chi| unchanged.
    """
    if N < 3:
        raise ModelError("N must be at least 3")
    if not 0 < eps1 < eps2:
        raise ModelError("need 0 < eps1 < eps2")
    if abs(eps2 - 2 * eps1) <= 1e-9 * (1 + eps2):
        raise ModelError("eps2 = 2 eps1 merges two Bohr frequencies")
    d = N + 1
    chi = np.r_[0, 0, np.ones(N - 1)].astype(complex)
    Psi = np.exp(1j * theta) * chi
    e0, e1 = _unit(d, 0), _unit(d, 1)
    D = np.outer(e0, chi.conj()) + np.outer(e1, Psi.conj()) + np.outer(e0, e1.conj())
    spectral = SpectralData.from_levels([0.0, eps1, eps2], [1, 1, N - 1])

    if rates is None:
        rates = thermal_rates(1.0, 1.0)
    if isinstance(rates, Mapping):
        labels = {"omega1": eps2, "omega2": eps2 - eps1, "omega3": eps1}
        unknown = set(rates) - set(labels)
        if unknown:
            raise ModelError(f"unknown rate keys {sorted(unknown)}")
        rates = {labels[k]: (v if isinstance(v, Rates) else Rates(*v)) for k, v in rates.items()}
    gen = build_generator(spectral, D, rates)
    P = spectral.projection_for(0.0), spectral.projection_for(eps1), spectral.projection_for(eps2)
    return KvModel(N, (eps1, eps2), theta, gen, chi, P)


@dataclass
class KvDecomposition:
    lam: float
    r0: float
    r1: float
    weight_wd: float
    rho_wd: np.ndarray | None
    support_residual: float


def kv_decompose(model: KvModel, rho: np.ndarray) -> KvDecomposition:
    """Write rho = lam (r0 P0 + r1 P1 + |chi><chi| / (N-1)) + w rho_wd.

    lam is the weight on the normalized bright vector, r0 and r1 the ratios of
    the e0 and e1 populations to it, and w = 1 - lam (1 + r0 + r1). The
    reported support residual is the norm of the part of the remainder outside W_D.
    """
    rho = np.asarray(rho, dtype=complex)
    u = model.chi_unit
    lam = float(np.vdot(u, rho @ u).real)
    p0, p1 = float(rho[0, 0].real), float(rho[1, 1].real)
    r0 = p0 / lam if lam > 0 else math.nan
    r1 = p1 / lam if lam > 0 else math.nan
    bright = p0 * model.P[0] + p1 * model.P[1] + lam * np.outer(u, u.conj())
    rem = rho - bright
    P = model.p_wd()
    support_residual = float(np.linalg.norm(rem - P @ rem @ P))
    w = float(np.trace(rem).real)
    rho_wd = rem / w if w > 1e-14 else None
    return KvDecomposition(lam, r0, r1, w, rho_wd, support_residual)


def bright_kernel(model: KvModel) -> Subspace:
    """Span of e0, e1 and chi (the orthogonal complement of W_D)."""
    d = model.dim
    return span([_unit(d, 0), _unit(d, 1), model.chi])

