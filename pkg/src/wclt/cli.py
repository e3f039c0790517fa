"""Command-line interface: ``wclt <command> ...``.

Reports go to stdout as JSON unless ``--out`` names a file. The thread count
of the linear-algebra backend and of parameter sweeps is taken from the
``WCLT_NUM_THREADS`` environment variable.
"""

from __future__ import annotations

import os

_THREADS = os.environ.get("WCLT_NUM_THREADS")
if _THREADS:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _THREADS)

import argparse  # noqa: E402
import csv  # noqa: E402
import io as _io  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402

import numpy as np  # noqa: E402

from .evolution import evolve  # noqa: E402
from .generator import bohr_frequencies  # noqa: E402
from .io import (  # noqa: E402
    SpecError,
    encode_matrix,
    load_spec,
    load_state,
    model_spec_from_generator,
    save_json,
)
from .linalg import projector  # noqa: E402
from .models import AkvParams, ModelError, build_akv, build_kv  # noqa: E402
from .stationary import (  # noqa: E402
    annihilator_membership,
    detailed_balance_classify,
    interaction_free_subspace,
    is_subharmonic,
    stationary_kernel,
)
from .verify import all_passed, format_table, transport_sweep, verify_akv, verify_kv  # noqa: E402


def _threads() -> int:
    try:
        return max(1, int(_THREADS)) if _THREADS else 1
    except ValueError:
        return 1


def _emit(args, obj) -> None:
    text = save_json(obj)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _complex_json(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def cmd_frequencies(args) -> int:
    spec = load_spec(args.spec)
    freqs = bohr_frequencies(spec.spectral())
    _emit(args, {"frequencies": [
        {"omega": f.omega, "pairs": [list(p) for p in f.pairs],
         "energies": [list(e) for e in f.energies]} for f in freqs]})
    return 0


def cmd_kraus(args) -> int:
    gen = load_spec(args.spec).build()
    chans = gen.channels if args.omega is None else [gen.channel(args.omega)]
    _emit(args, {"channels": [
        {"omega": ch.omega, "trivial": ch.trivial, "kraus": encode_matrix(ch.kraus)} for ch in chans]})
    return 0


def cmd_wd(args) -> int:
    gen = load_spec(args.spec).build()
    wd = interaction_free_subspace(gen, args.route)
    _emit(args, {"route": args.route, "dim": wd.dim, "basis": encode_matrix(wd.basis),
                 "projector": encode_matrix(projector(wd))})
    return 0


def cmd_stationary(args) -> int:
    gen = load_spec(args.spec).build()
    res = stationary_kernel(gen)
    report = {"residual": res.residual, "converged": res.converged, "time": res.time}
    show_all = not (args.canonical or args.kernel_dim or args.classify)
    if args.kernel_dim or show_all:
        report["kernel_dim"] = res.kernel_dim
    if args.canonical or show_all:
        report["canonical_state"] = encode_matrix(res.state)
    if args.classify:
        cls = detailed_balance_classify(gen, res.state)
        report["classification"] = {"kind": cls.kind,
                                    "c_values": {str(k): _complex_json(v) for k, v in cls.c_values.items()},
                                    "residuals": {str(k): v for k, v in cls.residuals.items()}}
    _emit(args, report)
    return 0


def cmd_classify(args) -> int:
    gen = load_spec(args.spec).build()
    rho = load_state(args.state, gen.dim)
    member, traces = annihilator_membership(gen, rho)
    cls = detailed_balance_classify(gen, rho)
    _emit(args, {"kind": cls.kind, "annihilator": member,
                 "traces": {str(k): _complex_json(v) for k, v in traces.items()},
                 "c_values": {str(k): _complex_json(v) for k, v in cls.c_values.items()},
                 "residual": float(np.linalg.norm(gen.predual(rho)))})
    return 0


def cmd_subharmonic(args) -> int:
    gen = load_spec(args.spec).build()
    p = load_state(args.projection, gen.dim)
    rep = is_subharmonic(gen, p, times=args.times)
    _emit(args, {"subharmonic": rep.subharmonic, "harmonic": rep.harmonic, "times": rep.times,
                 "min_eigs": rep.min_eigs, "max_eigs": rep.max_eigs,
                 "infinitesimal_min_eig": rep.infinitesimal_min_eig,
                 "infinitesimal_diag_norm": rep.infinitesimal_diag_norm})
    return 0


def cmd_evolve(args) -> int:
    gen = load_spec(args.spec).build()
    rho0 = load_state(args.initial, gen.dim)
    obs = {}
    for item in args.observables or []:
        name, _, path = item.partition("=")
        if not path:
            raise SpecError(f"observable {item!r} must be given as name=file")
        obs[name] = load_state(path, gen.dim)
    times = np.linspace(0.0, args.t, args.points)
    traj = evolve(gen, rho0, args.t, dt=args.dt, tol=args.tol, t_eval=times, observables=obs,
                  keep_states=bool(args.snapshots))
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", *obs])
    for i, t in enumerate(traj.times):
        row = [repr(float(t))]
        for k in obs:
            v = traj.observables[k][i]
            row.append(repr(float(np.real(v))))
        writer.writerow(row)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if args.snapshots:
        save_json({"times": traj.times.tolist(),
                   "states": [encode_matrix(s) for s in traj.states]}, args.snapshots)
    return 0


def _akv_params(args) -> AkvParams:
    kw = {"N": args.n, "M": args.m}
    if args.eps:
        kw["eps"] = tuple(args.eps)
    for name in ("gamma_re_minus", "gamma_re_plus", "gamma_im_minus", "gamma_im_plus"):
        val = getattr(args, name)
        if val:
            kw[name] = tuple(val)
    return AkvParams(**kw)


def cmd_akv_build(args) -> int:
    model = build_akv(_akv_params(args))
    spec = model_spec_from_generator(model.generator).to_dict()
    spec["meta"] = {"model": "akv", "N": model.params.N, "M": model.params.M}
    _emit(args, spec)
    return 0


def _report(args, rows) -> int:
    ok = all_passed(rows)
    if args.table:
        text = format_table(rows)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    else:
        _emit(args, {"passed": ok, "checks": [r.as_dict() for r in rows]})
    return 0 if ok else 1


def cmd_akv_verify(args) -> int:
    return _report(args, verify_akv(_akv_params(args), seed=args.seed))


def cmd_akv_sweep(args) -> int:
    params = _akv_params(args)
    rows = transport_sweep(params, args.ratios, seed=args.seed, workers=_threads())
    masses = [r["mass_p3"] for r in rows]
    order = np.argsort(args.ratios)
    monotone = bool(np.all(np.diff(np.asarray(masses)[order]) <= 1e-12))
    _emit(args, {"points": rows, "monotone": monotone})
    return 0


def cmd_kv_build(args) -> int:
    model = build_kv(args.n, args.eps1, args.eps2, theta=args.theta)
    spec = model_spec_from_generator(model.generator).to_dict()
    spec["meta"] = {"model": "kv", "N": model.N}
    _emit(args, spec)
    return 0


def cmd_kv_verify(args) -> int:
    model = build_kv(args.n, args.eps1, args.eps2, theta=args.theta)
    return _report(args, verify_kv(model, seed=args.seed))


def _akv_args(p: argparse.ArgumentParser, n: int = 4, m: int = 2) -> None:
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--m", type=int, default=m)
    p.add_argument("--eps", type=float, nargs=3, metavar=("E1", "E2", "E3"))
    for name in ("gamma_re_minus", "gamma_re_plus", "gamma_im_minus", "gamma_im_plus"):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=float, nargs=3,
                       metavar=("W1", "W2", "W3"))


def _kv_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--eps1", type=float, default=1.0)
    p.add_argument("--eps2", type=float, default=3.0)
    p.add_argument("--theta", type=float, default=np.pi / 2)


class _Sub:
    """Subparser group that attaches the shared options to every command."""

    def __init__(self, group, common):
        self.group = group
        self.common = common

    def add_parser(self, name, **kw):
        return self.group.add_parser(name, parents=[self.common], **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wclt", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    parser.add_argument("--out", help="write the report to this file instead of stdout")
    # the same options after the subcommand; SUPPRESS keeps the top-level values otherwise
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", default=argparse.SUPPRESS)
    sub = _Sub(parser.add_subparsers(dest="command", required=True), common)

    p = sub.add_parser("frequencies", help="Bohr frequencies with level pairs")
    p.add_argument("spec")
    p.set_defaults(func=cmd_frequencies)

    p = sub.add_parser("kraus", help="Kraus blocks per frequency")
    p.add_argument("spec")
    p.add_argument("--omega", type=float)
    p.set_defaults(func=cmd_kraus)

    p = sub.add_parser("wd", help="interaction-free subspace")
    p.add_argument("spec")
    p.add_argument("--route", choices=["kernel_pairs", "quadratic"], default="kernel_pairs")
    p.set_defaults(func=cmd_wd)

    p = sub.add_parser("stationary", help="Liouvillian kernel and canonical stationary state")
    p.add_argument("spec")
    p.add_argument("--canonical", action="store_true")
    p.add_argument("--kernel-dim", action="store_true")
    p.add_argument("--classify", action="store_true")
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("classify", help="annihilator membership and detailed balance of a state")
    p.add_argument("spec")
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("subharmonic", help="test T_t(p) >= p for a projection")
    p.add_argument("spec")
    p.add_argument("--projection", required=True)
    p.add_argument("--times", type=float, nargs="+", default=[0.1, 0.5, 2.0])
    p.set_defaults(func=cmd_subharmonic)

    p = sub.add_parser("evolve", help="integrate the master equation, CSV of observables")
    p.add_argument("spec")
    p.add_argument("--initial", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--observables", nargs="*", metavar="NAME=FILE")
    p.add_argument("--points", type=int, default=51)
    p.add_argument("--dt", type=float)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--snapshots", help="JSON file for state snapshots")
    p.set_defaults(func=cmd_evolve)

    akv = _Sub(sub.add_parser("akv", help="modified AKV transport model")
               .add_subparsers(dest="akv", required=True), common)
    p = akv.add_parser("build")
    _akv_args(p)
    p.set_defaults(func=cmd_akv_build)
    p = akv.add_parser("verify")
    _akv_args(p)
    p.add_argument("--table", action="store_true", help="plain-text table instead of JSON")
    p.set_defaults(func=cmd_akv_verify)
    p = akv.add_parser("sweep")
    _akv_args(p, m=3)
    p.add_argument("--ratios", type=float, nargs="+", default=[1.0, 0.1, 0.01])
    p.set_defaults(func=cmd_akv_sweep)

    kv = _Sub(sub.add_parser("kv", help="KV photosynthesis model")
              .add_subparsers(dest="kv", required=True), common)
    p = kv.add_parser("build")
    _kv_args(p)
    p.set_defaults(func=cmd_kv_build)
    p = kv.add_parser("verify")
    _kv_args(p)
    p.add_argument("--table", action="store_true")
    p.set_defaults(func=cmd_kv_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, ModelError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"wclt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
