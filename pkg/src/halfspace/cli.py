"""Command-line driver: every experiment as a subcommand.

Exit codes: 0 when every check passes, 1 when any check fails, 2 for usage
or configuration errors.  Values come from the command line, then from the
``--config`` file (``key = value`` lines, ``#`` comments), then from the
subcommand defaults; the resolved configuration is echoed in every JSON
summary.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, HalfspaceError
from .stattests import _clean

__all__ = ["main", "build_parser", "load_config"]

# flag name -> type; shared by every subcommand
FLAGS: dict[str, Callable[[str], Any]] = {
    "seed": int, "samples": int, "n": int, "x": int, "T": float, "X": float, "alpha": float,
    "A": float, "K": int, "workers": int, "out": str, "format": str, "config": str,
    "t": float, "dt": float, "dx": float, "p": float, "bound": str, "geometry": str, "seeds": int,
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "kernel-table": {"n": 20},
    "psi": {"x": 0, "n": 2},
    "bounds-audit": {"bound": "all"},
    "sample-paths": {"x": 0, "n": 10, "samples": 10, "seed": 0},
    "coupling-check": {"x": 0, "n": 50, "samples": 10_000, "seed": 0},
    "martingale-check": {"x": 100, "n": 100},
    "concentration": {"x": 0, "n": 10_000, "K": 10_000, "samples": 4000, "seed": 0},
    "meander-kernel": {"t": 0.5, "T": 1.0, "X": 0.0},
    "kernel-convergence": {"n": 5000},
    "polymer-dp": {"n": 4, "x": 0, "samples": 10, "seed": 0, "geometry": "quadrant", "A": 0.0},
    "chaos-check": {"n": 4, "seeds": 100, "seed": 0},
    "loggamma-identity": {"n": 9, "T": 1.0 / 3.0, "A": 0.0, "samples": 100_000, "seed": 0},
    "reduction-check": {"x": 0, "n": 64, "samples": 10_000, "seed": 0},
    "holder-audit": {"n": 64, "T": 1.0, "samples": 2000, "seed": 0, "p": 2.0},
    "she-simulate": {"T": 1.0, "X": 4.0, "K": 8, "dt": 0.02, "dx": 0.1, "seed": 0},
    "dirichlet-relation": {"T": 1.0, "X": 4.0, "K": 8, "dt": 0.02, "dx": 0.1, "seed": 0},
    "derivative-limit": {"T": 1.0, "X": 4.0, "K": 8, "dt": 0.01, "dx": 0.05, "seed": 0, "samples": 32},
    "convergence-study": {"n": 256, "T": 1.0, "X": 0.5, "samples": 2000, "seed": 0},
    "acceptance": {"seed": 20240601},
}

COMMON = {"workers": None, "out": None, "format": "text"}


def load_config(path: str) -> dict[str, Any]:
    """Parse ``key = value`` lines; unknown keys raise :class:`ConfigError`."""
    out: dict[str, Any] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in FLAGS or key == "config":
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = FLAGS[key](val)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="halfspace", description="Half-space walks, polymers and SHE experiments.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    for name in DEFAULTS:
        p = sub.add_parser(name)
        for flag, typ in FLAGS.items():
            kw: dict[str, Any] = {"type": typ, "default": None}
            if flag == "format":
                kw["choices"] = ["csv", "json", "text"]
            p.add_argument(f"--{flag}", **kw)
    return parser


def resolve(args: argparse.Namespace) -> dict[str, Any]:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[args.command])
    if args.config:
        cfg.update(load_config(args.config))
    for flag in FLAGS:
        v = getattr(args, flag, None)
        if v is not None and flag != "config":
            cfg[flag] = v
    cfg["command"] = args.command
    return cfg


# -- commands: each returns (summary, artifact text or None, passed, text line) ---------

def _kernel_table(c):
    from .discrete_kernels import KernelWorkspace, kernel_table_csv
    ws = KernelWorkspace(c["n"])
    csv = kernel_table_csv(ws, c["n"])
    return {"rows": csv.count("\n") - 1}, csv, True, f"{csv.count(chr(10)) - 1} kernel values"


def _psi(c):
    from .discrete_kernels import KernelWorkspace, survival_table_csv
    ws = KernelWorkspace(max(c["n"], 1))
    v = ws.survival(c["x"], c["n"])
    return {"psi": v}, survival_table_csv(ws, c["n"], c["x"]), True, repr(v)


def _bounds_audit(c):
    from .continuum_kernels import quadrature_bound_audit
    from .discrete_kernels import AUDITS, audit_bound
    names = list(AUDITS) + ["easy", "dik", "spat", "tem"] if c["bound"] == "all" else [c["bound"]]
    recs = []
    for name in names:
        rep = quadrature_bound_audit(name) if name in ("easy", "dik", "spat", "tem") else audit_bound(name)
        recs.append(rep.record())
    text = "\n".join(f"{r['bound']}: worst_ratio={r['worst_ratio']:.6g}" for r in recs)
    return {"audits": recs}, None, True, text


def _sample_paths(c):
    from .meander_walks import paths_csv, sample_paths
    P = sample_paths(c["x"], c["n"], c["samples"], c["seed"], workers=c["workers"])
    return {"samples": int(P.shape[0])}, paths_csv(P), True, paths_csv(P).rstrip("\n")


def _coupling_check(c):
    from .meander_walks import sample_coupled_pairs
    lo, hi = sample_coupled_pairs(c["x"], c["n"], c["samples"], c["seed"], workers=c["workers"])
    bad = int(np.sum(np.any(np.abs(hi - lo) != 1, axis=1)))
    return {"pairs": int(lo.shape[0]), "violations": bad}, None, bad == 0, f"{bad} violations in {lo.shape[0]} pairs"


def _martingale_check(c):
    from .discrete_kernels import KernelWorkspace
    from . import meander_walks as mw
    ws = KernelWorkspace(c["n"] + 2)
    r = mw.martingale_identity_residual(ws, c["n"], c["x"])
    inc = mw.martingale_increment_max(ws, c["n"], c["x"])
    gap = min(mw.submartingale_gap(ws, lam, c["n"], c["x"]) for lam in (0.1, 0.5, 1.0))
    ok = r <= 1e-12 and inc <= 2.0 + 1e-12 and gap >= 0.0
    return ({"identity_residual": r, "increment_max": inc, "min_submartingale_gap": gap}, None, ok,
            f"residual={r:.3g} increment_max={inc:.6g} min_gap={gap:.3g}")


def _concentration(c):
    from .meander_walks import concentration_tail
    from .stattests import subgaussian_fit
    k = c["K"]
    u = np.array([0.5, 1.0, 1.5, 2.0, 2.5, 3.0]) * math.sqrt(k)
    curve = concentration_tail(c["x"], c["n"], k, u, c["samples"], c["seed"], workers=c["workers"])
    fit = subgaussian_fit(curve.u, curve.p_hat, k, curve.stderr)
    summ = {"u": curve.u, "p_hat": curve.p_hat, "stderr": curve.stderr, "flagged": curve.flagged,
            "fit": fit.to_dict()}
    return summ, curve.to_csv(), fit.passed, f"slope={fit.statistic:.4f} (pass if <= -1/32)"


def _meander_kernel(c):
    from .continuum_kernels import kernel_grid_csv, meander_kernel
    Y = np.linspace(0.0, c["X"] + 6 * math.sqrt(c["T"]), 121)
    csv = kernel_grid_csv(c["t"], c["T"], c["X"], Y)
    return {"points": int(Y.size), "max": float(np.max(meander_kernel(c["t"], c["T"], c["X"], Y)))}, csv, True, csv.rstrip("\n")


def _kernel_convergence(c):
    from .continuum_kernels import sup_error
    from .discrete_kernels import KernelWorkspace
    n = c["n"]
    ws = KernelWorkspace(2 * n)
    Y = np.linspace(0.0, 4.0, 401)
    errs = {f"{t},{T},{X}": sup_error(ws, n, t, T, X, Y) for t, T, X in [(0.5, 1.0, 0.0), (1.0, 1.0, 0.0), (0.5, 1.0, 1.0)]}
    return {"n": n, "sup_errors": errs}, None, True, "\n".join(f"(t,T,X)=({k}): {v:.5g}" for k, v in errs.items())


def _polymer_dp(c):
    from . import polymer as pm
    from .discrete_kernels import KernelWorkspace
    from .rng import RngStream
    n, vals = c["n"], []
    if c["geometry"] == "octant":
        vals = pm.loggamma_samples(n, n, c["A"], 1, c["samples"], c["seed"], c["workers"]).tolist()
    elif c["geometry"] == "quadrant":
        ws = KernelWorkspace(2 * n)
        for s in range(c["samples"]):
            rng = RngStream(c["seed"], s)
            W = c["x"] + 2 * n + 2
            om = rng.child(0).normal((2 * n, W))
            z0 = pm.BoundaryData.from_weights(rng.child(1).normal(W), n)
            vals.append(pm.quadrant_partition_dp(ws, om, z0, c["x"], n ** -0.25, n).value)
    else:
        raise ConfigError("geometry must be quadrant or octant")
    csv = "sample_id,value\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(vals))
    return {"mean": float(np.mean(vals)), "samples": len(vals)}, csv, True, csv.rstrip("\n")


def _chaos_check(c):
    from . import polymer as pm
    from .discrete_kernels import KernelWorkspace
    from .rng import RngStream
    n = c["n"]
    L = 2 * n
    if L > 24:
        raise ConfigError("chaos-check enumerates paths; need 2n <= 24")
    ws = KernelWorkspace(L)
    x = c["x"] if c.get("x") is not None else 0
    good = 0
    worst = 0.0
    for s in range(c["seeds"]):
        rng = RngStream(c["seed"], s)
        W = x + L + 2
        om = rng.child(0).normal((L, W))
        z0 = pm.BoundaryData.from_weights(rng.child(1).normal(W), n).values
        beta = n ** -0.25
        dp = pm.quadrant_partition_dp(ws, om, z0, x, beta).value
        en = pm.quadrant_partition_enum(om, z0, x, beta)
        ch, _ = pm.chaos_expansion_eval(ws, om, z0, x, beta)
        err = max(abs(dp - en), abs(dp - ch)) / max(abs(dp), 1e-300)
        worst = max(worst, err)
        good += err <= 1e-10
    total = c["seeds"]
    return ({"matches": good, "environments": total, "worst_relative": worst}, None, good == total,
            f"{good}/{total} exact matches")


def _loggamma_identity(c):
    from .polymer import loggamma_identity_experiment
    r = loggamma_identity_experiment(c["n"], c["T"], c["A"], c["samples"], c["seed"], c["workers"])
    return r.to_dict(), None, r.passed, f"KS p={r.p_value:.4g} moment z={r.statistic['max_moment_z']:.3g} passed={r.passed}"


def _reduction_check(c):
    from .polymer import octant_reduction_experiment
    ladder = sorted({8, c["n"]})
    rows = octant_reduction_experiment(c["x"], ladder, c["samples"], c["seed"], c["workers"])
    ok = True
    if len(rows) == 2:
        a, b = rows
        ok = b["mean_abs_error"] + 3 * b["stderr"] < a["mean_abs_error"] - 3 * a["stderr"]
    text = "\n".join(f"n={r['n']}: E|E|={r['mean_abs_error']:.4f} +- {r['stderr']:.4f}" for r in rows)
    return {"rows": rows}, None, ok, text


def _holder_audit(c):
    from .polymer import holder_moment_audit
    n = c["n"]
    ladder = sorted({max(2, n // 4), max(2, n // 2), n})
    rows = holder_moment_audit(ladder, c["T"], [0.5, 1.0, 1.5], c["p"], c["samples"], c["seed"], workers=c["workers"])
    text = "\n".join(f"n={r['n']}: one_point={r['one_point']:.4g} spatial={r['spatial']:.4g} temporal={r['temporal']:.4g}" for r in rows)
    return {"rows": rows}, None, True, text


def _grid(c):
    from .she_chaos import GridParams
    return GridParams(c["dt"], c["dx"], c["T"], c["X"], c["K"])


def _she_simulate(c):
    from .rng import RngStream
    from .she_chaos import InitialData, field_csv, picard_solve
    g = _grid(c)
    cg = picard_solve(g, InitialData.constant(g), rng=RngStream(c["seed"], 0).child(0))
    csv = field_csv(cg)
    return ({"N": g.N, "M": g.M, "final_wall_value": float(cg.solution[-1, 0])}, csv, True,
            f"solved {g.N} x {g.M + 1} grid; Z(T, 0) = {cg.solution[-1, 0]:.6g}")


def _dirichlet_relation(c):
    from .acceptance import RELATION_TOL
    from .she_chaos import dirichlet_relation_check
    r = dirichlet_relation_check(_grid(c), c["seed"], RELATION_TOL)
    return r.to_dict(), None, r.passed, "\n".join(
        f"dt={l['dt']} dx={l['dx']}: mean mismatch {l['mean_mismatch']:.4g}" for l in r.details["levels"])


def _derivative_limit(c):
    from .she_chaos import derivative_limit_experiment
    r = derivative_limit_experiment(_grid(c), [0.4, 0.2, 0.1, 0.05], c["seed"], realizations=c["samples"])
    text = "\n".join(f"X={X}: rms |ratio-1| = {d:.4g}" for X, d in zip(r.details["X"], r.details["rms_deviation"]))
    return r.to_dict(), None, r.passed, text


def _convergence_study(c):
    from .she_chaos import polymer_to_she_convergence
    n = c["n"]
    ladder = sorted({max(2, n // 16), max(2, n // 4), n})
    rep = polymer_to_she_convergence(ladder, c["T"], c["X"], c["samples"], c["seed"], workers=c["workers"])
    text = [f"SPDE mean {rep['spde_mean']:.6f}, chaos (k<=2) variance {rep['spde_variance_k2']:.4g}"]
    text += [f"n={r['n']}: mean={r['mean']:.4f} +- {r['mean_stderr']:.4f} var={r['variance']:.4g}" for r in rep["ladder"]]
    return rep, None, True, "\n".join(text)


def _acceptance(c):
    from .acceptance import run_suite, suite_json
    lines: list[str] = []
    res = run_suite(c["seed"], c["workers"], echo=lambda s: (print(s), lines.append(s)))
    ok = all(r.passed for r in res)
    return {"criteria": json.loads(suite_json(res))}, None, ok, f"{sum(r.passed for r in res)}/{len(res)} criteria passed"


COMMANDS: dict[str, Callable] = {
    "kernel-table": _kernel_table, "psi": _psi, "bounds-audit": _bounds_audit,
    "sample-paths": _sample_paths, "coupling-check": _coupling_check,
    "martingale-check": _martingale_check, "concentration": _concentration,
    "meander-kernel": _meander_kernel, "kernel-convergence": _kernel_convergence,
    "polymer-dp": _polymer_dp, "chaos-check": _chaos_check, "loggamma-identity": _loggamma_identity,
    "reduction-check": _reduction_check, "holder-audit": _holder_audit, "she-simulate": _she_simulate,
    "dirichlet-relation": _dirichlet_relation, "derivative-limit": _derivative_limit,
    "convergence-study": _convergence_study, "acceptance": _acceptance,
}


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = resolve(args)
        summary, artifact, passed, line = COMMANDS[args.command](cfg)
    except (ConfigError, HalfspaceError, ValueError, IndexError) as exc:
        print(f"halfspace: error: {exc}", file=sys.stderr)
        return 2
    report = _clean({"command": args.command, "config": {k: v for k, v in cfg.items() if k != "command"},
                     "passed": bool(passed), "summary": summary})
    fmt = cfg["format"]
    if fmt == "json":
        _emit(json.dumps(report, sort_keys=True) + "\n", cfg["out"])
    elif fmt == "csv":
        if artifact is None:
            print("halfspace: error: this command has no CSV artifact", file=sys.stderr)
            return 2
        _emit(artifact, cfg["out"])
        if cfg["out"]:
            print(json.dumps(report, sort_keys=True))
    else:
        if args.command != "acceptance" or not cfg["out"]:
            print(line)
        if cfg["out"]:
            _emit(json.dumps(report, sort_keys=True) + "\n" if artifact is None else artifact, cfg["out"])
    return 0 if passed else 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
