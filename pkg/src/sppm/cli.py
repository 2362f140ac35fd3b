"""Command-line front end.

Usage: ``sppm <group> <action> [options]``; every run emits one RunRecord
(JSON by default, CSV on request).  Exit codes: 0 success, 1 input error,
2 numeric error, 3 capacity error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import config, duality, exact, hubbard, ising, laplacian, meanfield
from .errors import InputError, SppmError
from .matrix import LogSigned, as_square, read_matrix

SCHEMA = 1


@dataclass
class RunRecord:
    """One CLI invocation: inputs, outputs and (optionally) timing."""

    command: str
    params: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_time: float | None = None
    seed: int | None = None

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "command": self.command, "params": self.params,
                "outputs": self.outputs, "wall_time": self.wall_time, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        d = json.loads(text)
        if d.get("schema") != SCHEMA:
            raise InputError(f"unsupported RunRecord schema {d.get('schema')!r}")
        return cls(d["command"], d.get("params", {}), d.get("outputs", {}), d.get("wall_time"),
                   d.get("seed"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        records = self.outputs.get("records")
        if isinstance(records, list) and records and isinstance(records[0], dict):
            keys = sorted({k for r in records for k in r})
            w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
            w.writeheader()
            for r in records:
                w.writerow({k: _csv_cell(_clean(r.get(k))) for k in keys})
        else:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            for k, v in sorted(_flatten(_clean(self.outputs)).items()):
                w.writerow([k, _csv_cell(v)])
        return buf.getvalue()


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return {"re": _clean(x.real), "im": _clean(x.imag)}
    if isinstance(x, LogSigned):
        return _clean(x.to_dict())
    return x


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _csv_cell(v):
    if isinstance(v, list):
        return ";".join(str(x) for x in v)
    return v


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _floats(text: str) -> list[float]:
    """``a,b,c`` or ``start:stop:step`` (stop inclusive)."""
    try:
        if ":" in text:
            a, b, s = (float(x) for x in text.split(":"))
            if s <= 0:
                raise ValueError
            n = int(math.floor((b - a) / s + 1e-9)) + 1
            return [round(a + i * s, 12) for i in range(n)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"cannot parse number list {text!r} (use a,b,c or start:stop:step)") from None


def _ints(text: str) -> list[int]:
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise InputError(f"expected integers, got {text!r}")
    return [int(v) for v in vals]


def _one(vals, name):
    if len(vals) != 1:
        raise InputError(f"--{name} expects a single value here, got {len(vals)}")
    return vals[0]


def _load_matrix(args) -> tuple[np.ndarray, dict]:
    if args.matrix and args.gen:
        raise InputError("give either --matrix or --gen, not both")
    if args.matrix:
        return read_matrix(args.matrix), {"matrix": args.matrix}
    if args.gen:
        kind, _, rest = args.gen.partition(":")
        try:
            if kind == "laplacian":
                L = int(rest)
            elif kind == "ising-F":
                L, h = rest.split(",")
                L, h = int(L), float(h)
        except ValueError:
            raise InputError(f"malformed --gen {args.gen!r}") from None
        if kind == "laplacian":
            return laplacian.laplacian_matrix(L), {"gen": args.gen}
        if kind == "ising-F":
            return ising.ising_F(L, h), {"gen": args.gen}
        raise InputError(f"unknown generator {kind!r} (laplacian:L or ising-F:L,h)")
    raise InputError("this command needs --matrix <path> or --gen <spec>")


def _init_state(args):
    if args.init is None:
        return meanfield.MFState()
    vals = _floats(args.init)
    if len(vals) != 3:
        raise InputError("--init expects d1,d2,d3")
    return meanfield.MFState(*vals)


def _mf_kwargs(args):
    tol = args.tol if args.tol is not None else config.default_tol(meanfield.DEFAULT_TOL)
    return {"damping": args.damping, "tol": tol, "max_iter": args.max_iter}


def _sppm_value(res: exact.SppmResult) -> dict:
    d = res.to_dict()
    d["value"] = res.real if abs(res.value.phase) < 1e-12 or abs(abs(res.value.phase) - math.pi) < 1e-12 else None
    return d


# ---- handlers: each returns (params, outputs) ----

def _sppm(args):
    A, params = _load_matrix(args)
    if args.action == "exact":
        params["n"] = args.n
        return params, _sppm_value(exact.sppm_exact(A, args.n))
    if args.action == "hs":
        return params, _sppm_value(exact.sppm_hs_discrete(A))
    params.update(samples=args.samples)
    est = exact.sppm_hs_random(A, args.samples, seed=args.seed)
    return params, est.to_dict()


def _dual(args):
    A, params = _load_matrix(args)
    us = _floats(args.u) if args.u else [0.1, 0.5, 0.9]
    params.update(u=us, branch=args.branch)
    if args.action == "check":
        ref = exact.sppm_exact(A, 2).value
        recs = []
        for u in us:
            T = duality.build_dual(A, u, args.branch)
            val = duality.sppm_dual_exact(T).value
            recs.append({"u": u, "log_dual": val.log_mag, "log_exact": ref.log_mag,
                         "log_rel_diff": abs(val.log_mag - ref.log_mag) / max(1.0, abs(ref.log_mag)),
                         "agree": bool(val.isclose(ref, 1e-8))})
        return params, {"records": recs, "all_agree": all(r["agree"] for r in recs)}
    if args.action == "expand":
        ref = exact.sppm_exact(A, 2).value
        recs = []
        for u in us:
            T = duality.build_dual(A, u, args.branch)
            for order in (0, 1, 2):
                v = duality.weak_coupling_expansion(T, order)
                recs.append({"u": u, "order": order, "log_approx": v.log_mag, "log_exact": ref.log_mag})
        return params, {"records": recs}
    us = _floats(args.u) if args.u else list(duality.default_u_grid())
    params["u"] = us
    recs = []
    for u in us:
        T = duality.build_dual(A, u, args.branch)
        res = meanfield.mf_multistart(T, "dual", inits=_inits(args), **_mf_kwargs(args))
        f = -res.best.log_value / (2 * A.shape[0])
        ratio = meanfield.stability_ratio(res.best, f)
        recs.append({"u": u, "log_sppm_mf": res.best.log_value, "f_mf": f, "stability_ratio": ratio,
                     "stable": meanfield.is_stable(ratio), **res.best.state.to_dict()})
    return params, {"records": recs}


def _inits(args):
    return None if args.init is None else [_init_state(args)]


def _mf(args):
    A, params = _load_matrix(args)
    A = as_square(A)
    kw = _mf_kwargs(args)
    params.update(kw)
    if args.action == "solve":
        sol = meanfield.mf_direct(A, _init_state(args), pin_delta2=not args.free_delta2, **kw)
        return params, sol.to_dict()
    res = meanfield.mf_multistart(A, "direct", inits=_inits(args), pin_delta2=not args.free_delta2, **kw)
    out = {"best": res.best.to_dict(), "solutions": [s.to_dict() for s in res.solutions],
           "failures": len(res.failures)}
    if args.action == "stability":
        # free-energy density per replica, -ln M / (2 l)
        f = -res.best.log_value / (2 * A.shape[0])
        ratio = meanfield.stability_ratio(res.best, f)
        out.update(f_mf=f, stability_ratio=ratio, stable=meanfield.is_stable(ratio))
    return params, out


def _laplacian(args):
    a = args.action
    if a == "exact":
        L = _one(_ints(args.L or "8"), "L")
        n = args.n
        z_enum = laplacian.z_exact_enumeration(L, n)
        out = {"log_Z_enumeration": z_enum.log_mag}
        if L <= 40:
            out["log_Z_clusters"] = laplacian.z_cluster_formula(L, n).log_mag
        out["log_Z_transfer"] = laplacian.z_transfer_matrix(L, n).log_mag
        out["f"] = -z_enum.log_mag / (n * L)
        return {"L": L, "n": n}, out
    if a == "thermo":
        ns = _floats(args.n_list) if args.n_list else [float(args.n)]
        return {"n": ns}, {"records": [laplacian.thermo_point(n).to_dict() for n in ns]}
    if a == "clusters":
        ns = _floats(args.n_list) if args.n_list else [float(args.n)]
        recs = []
        for n in ns:
            c = laplacian.cluster_distribution(n, l_report=args.l_report)
            recs.append({"n": n, "dominant_length": c.dominant_length,
                         **{f"m{l}": v for l, v in c.mean_m_plus.items()}})
        return {"n": ns}, {"records": recs}
    if a == "ground-states":
        Ls = _ints(args.L or "8:16:1")
        recs = []
        for L in Ls:
            c = laplacian.ground_state_census(L)
            X = laplacian.separated_monomer_count(L) if L % 3 == 1 else None
            exp_gs, exp_cl = laplacian.expected_ground_state_counts(L, X)
            ref = laplacian.expected_ground_state_counts(L, laplacian.closed_form_X(L))
            recs.append({**c.to_dict(), "expected_ground_states": exp_gs, "expected_clusters": exp_cl,
                         "formula_ground_states": ref[0], "formula_clusters": ref[1]})
        return {"L": Ls}, {"records": recs}
    return {}, laplacian.laplacian_mf_benchmark().to_dict()


def _ising(args):
    a = args.action
    if a == "efp":
        hs = _floats(args.h or "1")
        recs = []
        for h in hs:
            z = ising.efp_zeta(h)
            r = {"h": h, "zeta": z, "minus_two_zeta": -2 * z}
            if h != 1:
                r["zeta_prime"] = ising.efp_zeta_prime(h)
                r["zeta_prime_closed"] = ising.efp_zeta_prime_closed(h)
            recs.append(r)
        out = {"records": recs}
        if len(recs) == 1:
            out.update(recs[0])
        return {"h": hs}, out
    if a == "hstar":
        Ls = _ints(args.L or "40,60,80,100,150,200,250,300,350,400")
        return {"L": Ls}, ising.hstar_scan(Ls).to_dict()
    if a == "kinks":
        Ls = _ints(args.L or "10:74:2")
        h = _one(_floats(args.h or "1"), "h")
        pts = [ising.kink_correction(L, h) for L in Ls]
        fit = ising.fit_alpha_beta(pts)
        return {"L": Ls, "h": h}, {"records": [p.to_dict() for p in pts], "fit": fit.to_dict()}
    if a == "scan-u":
        L = _one(_ints(args.L or "30"), "L")
        h = _one(_floats(args.h or "0"), "h")
        us = _floats(args.u) if args.u else None
        pts = ising.dual_u_scan(L, h, us, args.branch)
        out = {"records": [p.to_dict() for p in pts]}
        try:
            out["best"] = ising.best_stable_u(pts).to_dict()
        except SppmError as exc:
            out["best"] = None
            out["best_error"] = str(exc)
        return {"L": L, "h": h, "u": us}, out
    Ls = _ints(args.L or "12")
    hs = _floats(args.h or "0")
    u = _one(_floats(args.u), "u") if args.u else 0.2
    method = args.method
    pts = []
    for L in Ls:
        for h in hs:
            if method == "exact":
                pts.append(ising.renyi2_exact(L, h))
            elif method == "mf":
                pts.append(ising.renyi2_mf(L, h))
            elif method == "dual-mf":
                pts.append(ising.renyi2_dual_mf(L, h, u, args.branch))
            elif method == "efp":
                pts.append(ising.kink_correction(L, h, flips=0))
            else:
                pts.append(ising.kink_correction(L, h, flips=2))
    out = {"records": [p.to_dict() for p in pts]}
    if a == "scan-h" and len(set(Ls)) >= 3:
        fits = {}
        for h in hs:
            fits[str(h)] = ising.fit_alpha_beta([p for p in pts if p.h == h]).to_dict()
        out["fits"] = fits
    return {"L": Ls, "h": hs, "method": method, "u": u if method == "dual-mf" else None}, out


def _hubbard(args):
    spec = hubbard.HubbardSpec(args.sites, args.slices, args.t, args.U, args.mu, args.beta)
    out = {"spec": spec.to_dict()}
    z = hubbard.hubbard_partition_sppm(spec, args.branch)
    out["Z_sppm"] = z.real
    out["Z_weighted"] = hubbard.hubbard_partition_weighted(spec)
    if spec.dim <= 12:
        out["Z_hs"] = hubbard.hubbard_partition_hs(spec, args.branch).real
    z_ss = hubbard.hubbard_single_site_analytic(spec.beta, spec.mu, spec.U)
    out["Z_single_site_analytic"] = z_ss
    if spec.t == 0:
        out["Z_atomic_analytic"] = z_ss ** spec.L
        out["atomic_check"] = hubbard.hubbard_atomic_check(spec, args.branch)
    if spec.L == 1:
        conv = hubbard.single_site_convergence(spec.beta, spec.mu, spec.U, branch=args.branch)
        out["convergence"] = conv.to_dict()
    return {"branch": args.branch}, out


_ACTIONS = {
    "sppm": (["exact", "hs", "random"], _sppm),
    "dual": (["check", "expand", "scan-u"], _dual),
    "mf": (["solve", "multistart", "stability"], _mf),
    "laplacian": (["exact", "thermo", "clusters", "ground-states", "mf"], _laplacian),
    "ising": (["renyi", "scan-h", "scan-u", "efp", "kinks", "hstar"], _ising),
    "hubbard": (["check"], _hubbard),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--matrix", help="matrix file (.csv or .json)")
    common.add_argument("--gen", help="generated input: laplacian:L or ising-F:L,h")
    common.add_argument("--n", type=int, default=2, help="minor power (default 2)")
    common.add_argument("--n-list", help="list of powers for thermodynamic runs")
    common.add_argument("--u", help="dual coupling(s): a,b,c or start:stop:step")
    common.add_argument("--h", help="transverse field(s)")
    common.add_argument("--L", help="size(s)")
    common.add_argument("--branch", type=int, default=None, help="mass branch (+1 or -1)")
    common.add_argument("--method", default="exact", choices=["exact", "mf", "dual-mf", "efp", "kink2"])
    common.add_argument("--samples", type=int, default=10000)
    common.add_argument("--init", help="starting state d1,d2,d3")
    common.add_argument("--free-delta2", action="store_true", help="do not pin delta2 to 0")
    common.add_argument("--l-report", type=int, default=8)
    common.add_argument("--out", choices=["json", "csv"], default="json")
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--damping", type=float, default=meanfield.DEFAULT_DAMPING)
    common.add_argument("--max-iter", type=int, default=meanfield.DEFAULT_MAX_ITER)
    common.add_argument("--timing", action="store_true", help="record wall time (breaks byte-identity)")
    # Hubbard model parameters
    common.add_argument("--sites", type=int, default=1)
    common.add_argument("--slices", type=int, default=8)
    common.add_argument("--t", type=float, default=0.0)
    common.add_argument("--U", type=float, default=1.0)
    common.add_argument("--mu", type=float, default=0.0)
    common.add_argument("--beta", type=float, default=1.0)

    p = _Parser(prog="sppm", description="Sums of powers of principal minors: exact, dual and mean-field.")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)
    for name, (actions, _) in _ACTIONS.items():
        g = groups.add_parser(name)
        sub = g.add_subparsers(dest="action", required=True, parser_class=_Parser)
        for act in actions:
            sub.add_parser(act, parents=[common])
    return p


def run(argv=None) -> tuple[RunRecord, str]:
    """Parse ``argv`` and execute; raises library errors instead of exiting.

    The ``sppm`` group may be omitted: ``sppm exact ...`` is ``sppm sppm exact ...``.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in _ACTIONS["sppm"][0]:
        argv.insert(0, "sppm")
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            raise InputError(f"--threads must be >= 1, got {args.threads}")
        config.set_threads(args.threads)
    if args.branch is None:
        args.branch = 1 if args.group == "hubbard" else -1
    if args.branch not in (1, -1):
        raise InputError(f"--branch must be +1 or -1, got {args.branch}")
    handler = _ACTIONS[args.group][1]
    t0 = time.perf_counter()
    params, outputs = handler(args)
    wall = time.perf_counter() - t0
    return RunRecord(f"{args.group} {args.action}", params, outputs,
                     wall if args.timing else None, args.seed), args.out


def main(argv=None) -> int:
    try:
        record, fmt = run(argv)
    except SppmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        config.set_threads(None)
    sys.stdout.write(record.to_json() + "\n" if fmt == "json" else record.to_csv())
    return 0


if __name__ == "__main__":
    sys.exit(main())
