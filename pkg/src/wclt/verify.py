"""Pass/fail checks of the closed-form results for the built-in models.

Each check returns a ``CheckResult`` row; ``status`` is ``pass``, ``fail`` or
``skip`` (the instance lacks the structure the check needs, e.g. an empty
Im|Z| intersected with {psi, Z^dag psi'}-perp).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .evolution import evolve, limit_state, residual
from .generator import WcltGenerator, apply_adjoint, apply_predual, superoperator_matrix, vec
from .linalg import (
    commutator,
    dagger,
    hs_inner,
    random_hermitian,
    random_state,
    span,
    subspace_distance,
    trace_distance,
)
from .models import AkvModel, AkvParams, KvModel, build_akv, build_kv, kv_decompose
from .stationary import (
    annihilator_membership,
    detailed_balance_classify,
    interaction_free_subspace,
    is_subharmonic,
    stationary_kernel,
)


@dataclass
class CheckResult:
    name: str
    label: str
    tolerance: float | None
    value: float | None
    status: str
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status != "fail"

    def as_dict(self) -> dict:
        return asdict(self)


def _row(name, label, tol, value, ok=None, note=""):
    if ok is None:
        ok = value <= tol
    return CheckResult(name, label, tol, float(value), "pass" if ok else "fail", note)


def _skip(name, label, note):
    return CheckResult(name, label, None, None, "skip", note)


def wellformedness(gen: WcltGenerator, rng: np.random.Generator, samples: int = 3) -> dict:
    """Largest violations of the generator identities over a few random inputs."""
    d = gen.dim
    errs = {"unit": float(np.max(np.abs(apply_adjoint(gen, np.eye(d))))),
            "trace": 0.0, "hermiticity": 0.0, "duality": 0.0, "superoperator": 0.0}
    S = superoperator_matrix(gen) if d * d <= 4096 else None
    for _ in range(samples):
        rho = random_state(rng, d)
        x = random_hermitian(rng, d)
        A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        Lr = apply_predual(gen, rho)
        errs["trace"] = max(errs["trace"], abs(np.trace(Lr)))
        errs["hermiticity"] = max(errs["hermiticity"], float(np.max(np.abs(Lr - dagger(Lr)))))
        lhs = np.trace(apply_adjoint(gen, x) @ rho)
        rhs = np.trace(x @ Lr)
        errs["duality"] = max(errs["duality"], abs(lhs - rhs))
        if S is not None:
            diff = S @ vec(A) - vec(apply_predual(gen, A))
            errs["superoperator"] = max(errs["superoperator"], float(np.max(np.abs(diff))))
    return errs


def _akv_structure(m: AkvModel) -> list[CheckResult]:
    rows = []
    p = m.params
    N = p.N
    d = m.dim
    e = np.eye(d)
    sk = np.sqrt(N - 1)
    freqs = sorted(ch.omega for ch in m.generator.channels)
    expected = sorted(m.omega(i) for i in range(1, 7))
    rows.append(_row("bohr_frequencies", "six Bohr frequencies", 1e-12,
                     max(abs(a - b) for a, b in zip(freqs, expected)) if len(freqs) == 6 else np.inf))
    trivial = max(float(np.max(np.abs(m.kraus(i)))) for i in (4, 5, 6))
    rows.append(_row("trivial_blocks", "D_w4 = D_w5 = D_w6 = 0", 0.0, trivial))
    closed = max(
        np.max(np.abs(m.kraus(1) - np.outer(m.psi, e[1]) / sk)),
        np.max(np.abs(m.kraus(2) - m.Z)),
        np.max(np.abs(m.kraus(3) - np.outer(e[0], m.psi_prime.conj()) / sk)),
    )
    rows.append(_row("kraus_closed_forms", "Kraus blocks w1, w2, w3", 1e-12, closed))
    Z, T = m.Z, m.T
    P0, P1, P2, P3 = m.P
    z_err = max(
        np.max(np.abs(Z @ dagger(Z) - P3)),
        np.max(np.abs(m.absZ @ m.absZ - m.absZ)),
        np.max(np.abs(Z @ Z)),
        np.max(np.abs(T - dagger(T))),
        np.max(np.abs(T @ P2 @ T - P3)),
        np.max(np.abs(T @ P3 @ T - m.absZ)),
        np.max(np.abs(m.q @ m.q - m.q)),
    )
    rows.append(_row("z_algebra", "interference operator identities", 1e-10, z_err))
    return rows


def _akv_wd(m: AkvModel) -> list[CheckResult]:
    gen = m.generator
    H = gen.hamiltonian
    wd_pairs = interaction_free_subspace(gen, "kernel_pairs")
    wd_quad = interaction_free_subspace(gen, "quadratic")
    rows = [_row("wd_routes", "kernel pairs vs quadratic kernel", 1e-9,
                 subspace_distance(wd_pairs, wd_quad) if wd_pairs.dim == wd_quad.dim else np.inf)]
    target = span(m.p_wd, ambient_dim=m.dim)
    dist = subspace_distance(wd_pairs, target) if wd_pairs.dim == target.dim else np.inf
    rows.append(_row("wd_projector", "W_D = (P2 - |Z|)", 1e-9, dist,
                     note=f"dim W_D = {wd_pairs.dim}"))
    rows.append(_row("wd_commutes_h", "[P_WD, H] = 0", 1e-10,
                     np.linalg.norm(commutator(wd_pairs.projector(), H))))
    return rows


def _has_q(m: AkvModel) -> bool:
    return np.trace(m.q).real > 0.5


def _akv_stationarity(m: AkvModel, rng) -> list[CheckResult]:
    gen = m.generator
    rows = []
    wd = interaction_free_subspace(gen)
    if wd.dim:
        worst = 0.0
        for _ in range(3):
            v = wd.basis @ (rng.normal(size=wd.dim) + 1j * rng.normal(size=wd.dim))
            v /= np.linalg.norm(v)
            worst = max(worst, residual(gen, np.outer(v, v.conj())))
        rows.append(_row("wd_pure_stationary", "pure states on W_D are stationary", 1e-10, worst))
    else:
        rows.append(_skip("wd_pure_stationary", "pure states on W_D are stationary", "W_D = {0}"))
    if _has_q(m):
        worst = 0.0
        for lam in (0.0, 0.4, 1.0):
            sigma = random_state(rng, m.dim, support=span(m.q).basis)
            rho_wd = random_state(rng, m.dim, support=wd.basis) if wd.dim else None
            if rho_wd is None and lam > 0:
                continue
            worst = max(worst, residual(gen, m.invariant(sigma, lam, rho_wd)))
        rows.append(_row("invariant_closed_form", "explicit invariant states", 1e-10, worst))
    else:
        rows.append(_skip("invariant_closed_form", "explicit invariant states",
                          "Im|Z| meets {psi, Z^dag psi'}-perp only in 0"))
    if m.params.M < m.params.N - 1:
        v = m.p_wd @ (rng.normal(size=m.dim) + 1j * rng.normal(size=m.dim))
        u = np.eye(m.dim)[0] + v / np.linalg.norm(v)
        u /= np.linalg.norm(u)
        rho = np.outer(u, u.conj())
        member, _ = annihilator_membership(gen, rho)
        comm = np.linalg.norm(commutator(rho, gen.hamiltonian))
        ok = residual(gen, rho) <= 1e-10 and member and comm > 0.01
        rows.append(CheckResult("invariant_outside_commutant", "stationary, in Ann(D), not in {H}'",
                                1e-10, residual(gen, rho), "pass" if ok else "fail",
                                f"||[rho, H]|| = {comm:.3f}"))
    return rows


def _akv_dynamics(m: AkvModel, rng) -> list[CheckResult]:
    gen = m.generator
    rows = []
    label_skip = "needs a nonzero Im|Z| intersected with {psi, Z^dag psi'}-perp"
    if not _has_q(m):
        for name in ("approach_equilibrium", "block_masses", "random_walk", "energy_gain",
                     "detailed_balance"):
            rows.append(_skip(name, name.replace("_", " "), label_skip))
        return rows
    pr = m.p_recurrent_perp
    worst, masses = 0.0, 0.0
    p_plus, p_minus = m.weights
    for _ in range(2):
        eta = random_state(rng, m.dim, support=span(pr).basis)
        lim = limit_state(gen, eta, residual_tol=1e-11)
        worst = max(worst, trace_distance(lim.state, m.limit_state(eta)))
        masses = max(masses, abs(np.trace(m.q @ lim.state).real - p_plus),
                     abs(np.trace(m.P[3] @ lim.state).real - p_minus))
    rows.append(_row("approach_equilibrium", "limit of states on W_D-perp and V", 1e-6, worst))
    rows.append(_row("block_masses", "tr(q eta_inf), tr(P3 eta_inf)", 1e-7, masses))

    walk = m.random_walk()
    times = np.linspace(0, 5, 50)
    rho0 = m.q / np.trace(m.q).real
    traj = evolve(gen, rho0, 5.0, t_eval=times, observables={"q": m.q}, tol=1e-13, keep_states=False)
    err = float(np.max(np.abs(traj.observables["q"] - walk.weights(times)[:, 0])))
    rows.append(_row("random_walk", "two-state jump process", 1e-8, err))

    heff = m.heff()
    lim = limit_state(gen, rho0, residual_tol=1e-11)
    gain = np.trace(lim.state @ heff).real - np.trace(rho0 @ heff).real
    rows.append(_row("energy_gain", "energy gain", 1e-6, abs(gain - m.energy_gain()),
                     note=f"gain = {gain:.6f}"))

    tau = m.invariant(random_state(rng, m.dim, support=span(m.q).basis))
    cls = detailed_balance_classify(gen, tau)
    c2 = cls.c_values.get(m.omega(2), np.nan)
    target = m.params.gamma_re_minus[1] / m.params.gamma_re_plus[1]
    ok = cls.kind == "detailed" and abs(c2 - target) <= 1e-9
    rows.append(CheckResult("detailed_balance", "invariant states are detailed balance", 1e-9,
                            float(abs(c2 - target)), "pass" if ok else "fail", f"kind = {cls.kind}"))
    return rows


def _akv_harmonic(m: AkvModel) -> list[CheckResult]:
    gen = m.generator
    rows = []
    if np.trace(m.p_v).real > 0.5:
        rep = is_subharmonic(gen, m.p_v)
        rows.append(_row("p_v_subharmonic", "T_t(p_V) >= p_V", 1e-8, max(0.0, -min(rep.min_eigs))))
    else:
        rows.append(_skip("p_v_subharmonic", "T_t(p_V) >= p_V", "V = {0}"))
    worst = 0.0
    for p in (m.p_wd, m.p_wd_perp):
        rep = is_subharmonic(gen, p)
        worst = max(worst, max(abs(v) for v in rep.min_eigs + rep.max_eigs))
    rows.append(_row("wd_harmonic", "P_WD and its complement are harmonic", 1e-8, worst))
    return rows


def _akv_kernel(m: AkvModel) -> list[CheckResult]:
    res = stationary_kernel(m.generator)
    return [CheckResult("liouvillian_kernel", "fixed-point space dimension", None,
                        float(res.kernel_dim), "pass",
                        f"canonical residual {res.residual:.1e}")]


def verify_akv(params: AkvParams | None = None, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    m = build_akv(params)
    wf = wellformedness(m.generator, rng)
    rows = [_row("generator", "generator identities", 1e-10, max(wf.values()))]
    rows += _akv_structure(m)
    rows += _akv_wd(m)
    rows += _akv_stationarity(m, rng)
    rows += _akv_dynamics(m, rng)
    rows += _akv_harmonic(m)
    rows += _akv_kernel(m)
    return rows


def verify_kv(model: KvModel | None = None, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    m = model or build_kv()
    gen = m.generator
    wf = wellformedness(gen, rng)
    rows = [_row("generator", "generator identities", 1e-10, max(wf.values()))]
    wd = interaction_free_subspace(gen)
    target = span(m.p_wd(), ambient_dim=m.dim)
    dist = subspace_distance(wd, target) if wd.dim == target.dim == m.N - 2 else np.inf
    rows.append(_row("wd_dark", "W_D = {e0, e1, chi}-perp", 1e-9, dist, note=f"dim W_D = {wd.dim}"))
    worst_res, worst_orth = 0.0, 0.0
    chi_proj = np.outer(m.chi, m.chi.conj())
    for _ in range(3):
        rho = random_state(rng, m.dim, support=wd.basis)
        worst_res = max(worst_res, residual(gen, rho))
        for P in (m.P[0], m.P[1], chi_proj):
            worst_orth = max(worst_orth, abs(hs_inner(rho, P)))
    rows.append(_row("dark_stationary", "states on W_D are stationary", 1e-10, worst_res))
    rows.append(_row("dark_orthogonal", "dark states avoid P0, P1, |chi><chi|", 1e-12, worst_orth))
    canon = stationary_kernel(gen).state
    dec = kv_decompose(m, canon)
    rows.append(_row("dark_decomposition", "bright part plus dark remainder", 1e-8,
                     dec.support_residual,
                     note=f"lambda={dec.lam:.6g} r0={dec.r0:.6g} r1={dec.r1:.6g}"))
    return rows


def _transport_point(base: AkvParams, r: float, seed: int) -> dict:
    gm = base.gamma_re_minus[1]
    rp = list(base.gamma_re_plus)
    rp[1] = r * gm
    m = build_akv(base.replace(gamma_re_plus=tuple(rp)))
    if not _has_q(m):
        raise ValueError("transport sweep needs a nonzero Im|Z| intersected with {psi, Z^dag psi'}-perp")
    eta = random_state(np.random.default_rng(seed), m.dim, support=span(m.p_recurrent_perp).basis)
    lim = limit_state(m.generator, eta, residual_tol=1e-11)
    return {"ratio": r, "mass_p3": float(np.trace(m.P[3] @ lim.state).real),
            "expected": 1.0 / (1.0 + r), "residual": lim.residual}


def transport_sweep(params: AkvParams | None = None, ratios=(1.0, 0.1, 0.01),
                    seed: int = 0, workers: int = 1) -> list[dict]:
    """Mass on P3 in the limit state as Gamma_Re,+ / Gamma_Re,- at w2 shrinks.

    Each ratio gets its own seed, so results do not depend on ``workers``.
    """
    base = params or AkvParams(N=4, M=3)
    seeds = np.random.SeedSequence(seed).spawn(len(ratios))
    jobs = [(base, float(r), int(s.generate_state(1)[0])) for r, s in zip(ratios, seeds)]
    if workers <= 1:
        return [_transport_point(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda j: _transport_point(*j), jobs))


def all_passed(rows) -> bool:
    return all(r.passed for r in rows)


def format_table(rows) -> str:
    lines = [f"{'check':28} {'status':6} {'value':>12} {'tol':>9}  label"]
    for r in rows:
        val = "" if r.value is None else f"{r.value:12.3e}"
        tol = "" if r.tolerance is None else f"{r.tolerance:9.1e}"
        note = f" ({r.note})" if r.note else ""
        lines.append(f"{r.name:28} {r.status:6} {val:>12} {tol:>9}  {r.label}{note}")
    return "\n".join(lines)
