"""Dense complex linear algebra used throughout the package.

Everything here works on plain ``numpy`` arrays. Hermitian operators and
density matrices are ordinary square arrays; the ``check_*`` helpers
validate them where a contract demands it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_CLUSTER_TOL = 1e-9
DEFAULT_KERNEL_TOL = 1e-10
DEFAULT_INTERSECT_TOL = 1e-9


class NotHermitianError(ValueError):
    pass


def dagger(A: np.ndarray) -> np.ndarray:
    return A.conj().T


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B - B @ A


def anticommutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return A @ B + B @ A


def inf_norm(A: np.ndarray) -> float:
    """Induced infinity norm (max absolute row sum)."""
    if A.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(A), axis=1)))


def check_finite(A: np.ndarray, name: str = "matrix") -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-d array, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def check_hermitian(A: np.ndarray, tol: float | None = None, name: str = "operator") -> np.ndarray:
    """Return ``A`` as a complex array after checking ``||A - A^†||_inf <= tol``.

    The default tolerance is ``1e-12 * ||A||_inf``.
    """
    A = check_finite(np.asarray(A, dtype=complex), name)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if tol is None:
        tol = 1e-12 * inf_norm(A)
    asym = inf_norm(A - dagger(A))
    if asym > tol:
        raise NotHermitianError(f"{name} is not Hermitian: ||A - A^dag||_inf = {asym:.3e} > {tol:.3e}")
    return A


def check_density(rho: np.ndarray, trace_tol: float = 1e-10, psd_tol: float = 1e-10,
                  name: str = "state") -> np.ndarray:
    rho = check_hermitian(rho, name=name)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"{name} has trace {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -psd_tol:
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {lo:.3e})")
    return rho


def hermitian_part(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + dagger(A))


def hs_inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(A^† B)."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch: {A.shape} vs {B.shape}")
    return complex(np.vdot(A, B))


def is_psd(A: np.ndarray, tol: float = 1e-10) -> bool:
    A = check_hermitian(A)
    return bool(np.linalg.eigvalsh(A)[0] >= -tol)


def min_eig(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(hermitian_part(np.asarray(A, dtype=complex)))[0])


def trace_distance(A: np.ndarray, B: np.ndarray) -> float:
    """Half the trace norm of ``A - B`` for Hermitian arguments."""
    w = np.linalg.eigvalsh(hermitian_part(np.asarray(A - B, dtype=complex)))
    return 0.5 * float(np.sum(np.abs(w)))


@dataclass(frozen=True)
class Subspace:
    """Subspace of C^n represented by an orthonormal column basis."""

    basis: np.ndarray
    tol: float = 1e-10

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex)
        if basis.ndim != 2:
            raise ValueError("basis must be 2-d (ambient_dim x k)")
        k = basis.shape[1]
        if k > basis.shape[0]:
            raise ValueError("more basis vectors than ambient dimension")
        if k:
            gram_err = np.max(np.abs(dagger(basis) @ basis - np.eye(k)))
            if gram_err > max(self.tol, 1e-10):
                raise ValueError(f"basis is not orthonormal (error {gram_err:.2e})")
        object.__setattr__(self, "basis", basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return projector(self)

    def complement(self) -> "Subspace":
        return kernel(dagger(self.basis), 1e-10) if self.dim else full_space(self.ambient_dim)

    def contains(self, v: np.ndarray, tol: float = 1e-9) -> bool:
        """True when every column of ``v`` lies in the subspace up to ``tol``."""
        v = np.asarray(v, dtype=complex).reshape(self.ambient_dim, -1)
        resid = v - self.basis @ (dagger(self.basis) @ v)
        scale = max(1.0, float(np.max(np.abs(v))) if v.size else 0.0)
        return bool(np.all(np.abs(resid) <= tol * scale))

    @classmethod
    def empty(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0), dtype=complex))


def full_space(n: int) -> Subspace:
    return Subspace(np.eye(n, dtype=complex))


def span(vectors, rel_tol: float = 1e-10, ambient_dim: int | None = None,
         atol: float = 1e-12) -> Subspace:
    """Orthonormal basis for the span of the given vectors (columns or list).

    Singular values at or below ``max(atol, rel_tol * sigma_max)`` are dropped.
    """
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        V = vectors.astype(complex)
    else:
        vectors = list(vectors)
        if not vectors:
            if ambient_dim is None:
                raise ValueError("ambient_dim required for an empty span")
            return Subspace.empty(ambient_dim)
        V = np.column_stack([np.asarray(v, dtype=complex).ravel() for v in vectors])
    if V.shape[1] == 0:
        return Subspace.empty(V.shape[0])
    U, s, _ = np.linalg.svd(V, full_matrices=False)
    if s.size == 0 or s[0] <= atol:
        return Subspace.empty(V.shape[0])
    r = int(np.sum(s > max(atol, rel_tol * s[0])))
    return Subspace(U[:, :r])


def kernel(A: np.ndarray, rel_tol: float = DEFAULT_KERNEL_TOL) -> Subspace:
    """Null space of ``A`` from singular values ``<= rel_tol * sigma_max``.

    An all-zero matrix has the whole domain as kernel.
    """
    A = check_finite(np.asarray(A, dtype=complex))
    n = A.shape[1]
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return full_space(n)
    rank = int(np.sum(s > rel_tol * smax))
    basis = dagger(Vh[rank:, :])
    return Subspace(basis, tol=rel_tol)


def projector(S: Subspace) -> np.ndarray:
    B = S.basis
    P = B @ dagger(B)
    return hermitian_part(P)


def intersect(subspaces, tol: float = DEFAULT_INTERSECT_TOL) -> Subspace:
    """Intersection as the kernel of the summed complementary projectors.

    ``sum_i (I - P_i)`` is PSD with spectrum in ``[0, k]``, so the kernel
    threshold is absolute: eigenvalues ``<= tol`` are treated as zero.
    """
    subspaces = list(subspaces)
    if not subspaces:
        raise ValueError("need at least one subspace")
    n = subspaces[0].ambient_dim
    if any(S.ambient_dim != n for S in subspaces):
        raise ValueError("ambient dimension mismatch: "
                         f"{sorted({S.ambient_dim for S in subspaces})}")
    total = np.zeros((n, n), dtype=complex)
    eye = np.eye(n)
    for S in subspaces:
        total += eye - projector(S)
    w, V = np.linalg.eigh(hermitian_part(total))
    return Subspace(V[:, w <= tol], tol=tol)


def subspace_distance(S1: Subspace, S2: Subspace) -> float:
    """Spectral norm of the difference of orthogonal projectors."""
    if S1.ambient_dim != S2.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    return float(np.linalg.norm(projector(S1) - projector(S2), 2))


@dataclass(frozen=True)
class SpectralData:
    """Clustered spectral decomposition ``A = sum_k eigenvalues[k] * projections[k]``.

    ``eigenvalues`` is strictly increasing. ``levels`` optionally records a
    block layout in basis order, ``(eigenvalue, multiplicity)`` per block,
    when the eigenbasis is the standard basis.
    """

    eigenvalues: np.ndarray
    projections: tuple
    multiplicities: tuple
    levels: tuple | None = field(default=None, compare=False)

    @property
    def dim(self) -> int:
        return self.projections[0].shape[0]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def hamiltonian(self) -> np.ndarray:
        return sum(e * P for e, P in zip(self.eigenvalues, self.projections))

    def projection_for(self, value: float, tol: float = DEFAULT_CLUSTER_TOL) -> np.ndarray:
        for e, P in zip(self.eigenvalues, self.projections):
            if abs(e - value) <= tol * (1 + abs(value)):
                return P
        raise KeyError(f"no eigenvalue near {value}")

    @classmethod
    def from_levels(cls, eigenvalues, multiplicities) -> "SpectralData":
        """Diagonal H whose basis blocks carry the given eigenvalues, in basis order.

        Projections are exact 0/1 diagonal matrices. Blocks may come in any
        energy order but must carry distinct eigenvalues.
        """
        eigenvalues = [float(e) for e in eigenvalues]
        multiplicities = [int(m) for m in multiplicities]
        if len(eigenvalues) != len(multiplicities) or not eigenvalues:
            raise ValueError("eigenvalues and multiplicities must be non-empty and equally long")
        if any(m < 1 for m in multiplicities):
            raise ValueError("multiplicities must be >= 1")
        if len(set(eigenvalues)) != len(eigenvalues):
            raise ValueError("block eigenvalues must be distinct")
        d = sum(multiplicities)
        offsets = np.cumsum([0] + multiplicities)
        blocks = []
        for e, m, start in zip(eigenvalues, multiplicities, offsets):
            diag = np.zeros(d)
            diag[start:start + m] = 1.0
            blocks.append((e, m, np.diag(diag).astype(complex)))
        blocks.sort(key=lambda b: b[0])
        return cls(
            eigenvalues=np.array([b[0] for b in blocks]),
            projections=tuple(b[2] for b in blocks),
            multiplicities=tuple(b[1] for b in blocks),
            levels=tuple(zip(eigenvalues, multiplicities)),
        )


def hermitian_eig(A: np.ndarray, cluster_tol: float = DEFAULT_CLUSTER_TOL,
                  symmetry_tol: float | None = None) -> SpectralData:
    """Eigendecomposition of a Hermitian matrix with eigenvalue clustering.

    Eigenvalues within ``cluster_tol * (1 + |lambda|)`` of the first member of
    a cluster are merged; the cluster's eigenvalue is the mean of its members.
    """
    A = check_hermitian(A, symmetry_tol)
    w, V = np.linalg.eigh(hermitian_part(A))
    groups: list[list[int]] = []
    for i, lam in enumerate(w):
        if groups and lam - w[groups[-1][0]] <= cluster_tol * (1 + abs(lam)):
            groups[-1].append(i)
        else:
            groups.append([i])
    eigenvalues = np.array([w[g].mean() for g in groups])
    projections = tuple(hermitian_part(V[:, g] @ dagger(V[:, g])) for g in groups)
    return SpectralData(eigenvalues, projections, tuple(len(g) for g in groups))


def random_state(rng: np.random.Generator, d: int, support: np.ndarray | None = None,
                 rank: int | None = None) -> np.ndarray:
    """Random density matrix, optionally supported inside the column span of ``support``."""
    B = np.eye(d, dtype=complex) if support is None else np.asarray(support, dtype=complex)
    k = B.shape[1]
    if k == 0:
        raise ValueError("cannot place a state on the zero subspace")
    r = k if rank is None else rank
    G = rng.normal(size=(k, r)) + 1j * rng.normal(size=(k, r))
    rho = B @ (G @ dagger(G)) @ dagger(B)
    rho = hermitian_part(rho)
    return rho / np.trace(rho).real


def random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * hermitian_part(G)
