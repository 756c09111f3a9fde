"""Batch front-end.

Each subcommand runs one family of checks and writes a JSON report. Exit
codes: 0 all checks passed, 1 a verdict failed, 2 invalid input.

Options may also come from a flat ``key = value`` config file given with
``--config``; command-line flags take precedence. List-valued keys (``t``,
``x``) separate points with ``;`` and coordinates with ``,``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import density, linalg, verify
from .exceptions import MVGammaError
from .montecarlo import MCEstimate, RngSeed

COMMANDS = ("identities", "lt-check", "theorem1", "density", "sample", "inequality",
            "admissibility", "probe")

DEFAULTS = {
    "alpha": 1.0,
    "n": 100_000,
    "seed": 0,
    "workers": 1,
    "count": 10,
    "method": "auto",
    "structure": "general",
    "grid_size": 20,
}


class InputError(MVGammaError):
    pass


def _points(text) -> list[list[float]]:
    if text is None:
        return []
    if isinstance(text, list):
        chunks = text
    else:
        chunks = str(text).split(";")
    out = []
    for chunk in chunks:
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            out.append([float(v) for v in chunk.replace(",", " ").split()])
        except ValueError as exc:
            raise InputError(f"cannot parse point {chunk!r}") from exc
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mvgamma", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path)
        p.add_argument("--sigma", type=Path, help="matrix text file")
        p.add_argument("--random-p", type=int, help="use a random SPD matrix of this size")
        p.add_argument("--alpha", type=float)
        p.add_argument("--p1", type=int)
        p.add_argument("--n", type=int, help="Monte Carlo sample count")
        p.add_argument("--seed", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--workers", type=int)
        p.add_argument("--t", action="append", help="transform point, e.g. 0.1,0.2,0.3")
        p.add_argument("--x", action="append", help="evaluation point, e.g. 1,1,1")
        p.add_argument("--count", type=int, help="random points when none are given")
        p.add_argument("--output", type=Path, help="JSON report path (default: stdout)")
        p.add_argument("--csv", type=Path, help="CSV table path")
        if name == "sample":
            p.add_argument("--method", choices=("auto", "wishart", "gaussian"))
        if name == "admissibility":
            p.add_argument("--p", type=int)
            p.add_argument("--structure", choices=verify.STRUCTURES)
            p.add_argument("--m", type=int)
            p.add_argument("--m0", type=int)
            p.add_argument("--m12", type=int)
            p.add_argument("--p2", type=int)
        if name == "probe":
            p.add_argument("--grid-size", type=int)
    return parser


def load_config(path: Path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string("[experiment]\n" + path.read_text())
    except (OSError, configparser.Error) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    return {k.replace("-", "_"): v for k, v in parser["experiment"].items()}


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win)."""
    flags = {k: v for k, v in vars(args).items() if v is not None}
    conf = load_config(args.config) if args.config else {}
    conf.pop("command", None)
    opts = dict(DEFAULTS)
    types = {"alpha": float, "tol": float, "n": int, "seed": int, "workers": int, "p1": int,
             "count": int, "random_p": int, "p": int, "m": int, "m0": int, "m12": int, "p2": int,
             "grid_size": int}
    for k, v in conf.items():
        try:
            opts[k] = types[k](v) if k in types else v
        except ValueError as exc:
            raise InputError(f"config key {k!r}: {exc}") from exc
    opts.update(flags)
    for key in ("sigma", "output", "csv"):
        if opts.get(key) is not None:
            opts[key] = Path(opts[key])
    opts["t"] = _points(opts.get("t"))
    opts["x"] = _points(opts.get("x"))
    if opts["n"] <= 1:
        raise InputError("requires n ≥ 2")
    if opts["workers"] < 1:
        raise InputError("requires workers ≥ 1")
    return opts


def load_sigma(opts) -> np.ndarray:
    if opts.get("sigma") is not None:
        try:
            return linalg.CovMatrix(linalg.read_matrix(opts["sigma"])).entries
        except OSError as exc:
            raise InputError(f"cannot read {opts['sigma']}: {exc}") from exc
    if opts.get("random_p"):
        gen = RngSeed(opts["seed"]).generator(1)
        return linalg.random_spd(opts["random_p"], gen)
    raise InputError("a covariance matrix is required: pass --sigma or --random-p")


def _t_points(opts, p) -> list[list[float]]:
    pts = opts["t"]
    if not pts:
        gen = RngSeed(opts["seed"]).generator(2)
        pts = gen.uniform(0.0, 1.0, size=(opts["count"], p)).tolist()
    for t in pts:
        if len(t) != p:
            raise InputError(f"transform point {t} has {len(t)} coordinates, expected {p}")
    return pts


def _x_points(opts, p, default=None) -> list[list[float]]:
    pts = opts["x"] or default or []
    if not pts:
        raise InputError("evaluation points are required: pass --x")
    for x in pts:
        if len(x) != p:
            raise InputError(f"point {x} has {len(x)} coordinates, expected {p}")
    return pts


def digest(inputs: dict) -> str:
    blob = json.dumps(inputs, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def record(check, inputs_digest, estimate, std_error, oracle, verdict, seed, n, **extra) -> dict:
    rec = {
        "check": check,
        "inputs_digest": inputs_digest,
        "estimate": _num(estimate),
        "std_error": _num(std_error),
        "oracle": _num(oracle),
        "verdict": verdict,
        "seed": seed,
        "n": n,
    }
    rec.update(extra)
    return rec


def _allowed_exceedances(k: int) -> int:
    return math.ceil(k / 20) if k >= 10 else 0


def _within(est, oracle) -> str:
    return "pass" if est.within(oracle, verify.SIGMA_RULE) else "fail"


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_identities(opts, sigma, dg):
    p = sigma.shape[0]
    tol = opts.get("tol", 1e-9)
    alpha = opts["alpha"]
    chain_err = closed_err = syl_err = 0.0
    pts = _t_points(opts, p)
    count = 0
    for p1 in range(1, p):
        part = linalg.partition_blocks(sigma, p1)
        for t in pts:
            t = np.asarray(t)
            chain_err = max(chain_err, linalg.det_block_factorization(sigma, t, p1).max_rel_error)
            exact = density.mvgamma_lt(t, alpha, sigma)
            closed_err = max(closed_err, abs(verify.rhs_lt_closed(t, alpha, part) - exact) / exact)
            t1, t2 = np.diag(t[:p1]), np.diag(t[p1:])
            m1 = np.eye(p1) + part.schur.entries @ t1
            m2 = np.eye(p - p1) + part.s22.entries @ t2
            a12 = part.s22_inv_s21().T @ np.linalg.inv(m2)
            b21 = part.s21 @ t1 @ np.linalg.inv(m1)
            d1, d2 = linalg.sylvester_identity(a12, b21)
            syl_err = max(syl_err, abs(d1 - d2) / abs(d1))
            count += 1
    verdict = lambda e: "pass" if e <= tol else "fail"
    return [
        record("det_chain", dg, chain_err, None, 0.0, verdict(chain_err), None, count, tol=tol),
        record("rhs_lt_closed", dg, closed_err, None, 0.0, verdict(closed_err), None, count, tol=tol),
        record("sylvester", dg, syl_err, None, 0.0, verdict(syl_err), None, count, tol=tol),
    ]


def cmd_lt_check(opts, sigma, dg):
    p = sigma.shape[0]
    alpha, n, seed, workers = opts["alpha"], opts["n"], opts["seed"], opts["workers"]
    pts = _t_points(opts, p)
    samples = density.sample_mvgamma(alpha, sigma, n, RngSeed(seed, 0), workers=workers)
    out = []
    for t in pts:
        est = density.empirical_lt(samples, t)
        oracle = density.mvgamma_lt(t, alpha, sigma)
        out.append(record("empirical_lt", dg, est.value, est.std_error, oracle,
                          _within(est, oracle), [seed, 0], n, t=t))
    if opts.get("p1"):
        part = linalg.partition_blocks(sigma, opts["p1"])
        for i, t in enumerate(pts):
            est = verify.rhs_lt_mc(t, alpha, part, n, RngSeed(seed, 1 + i), workers=workers)
            oracle = density.mvgamma_lt(t, alpha, sigma)
            out.append(record("rhs_lt_mc", dg, est.value, est.std_error, oracle,
                              _within(est, oracle), [seed, 1 + i], n, t=t))
    return out


def cmd_theorem1(opts, sigma, dg):
    p = sigma.shape[0]
    if not opts.get("p1"):
        raise InputError("theorem1 requires --p1")
    alpha, n, seed, workers = opts["alpha"], opts["n"], opts["seed"], opts["workers"]
    part = linalg.partition_blocks(sigma, opts["p1"])
    verify.check_partition_shape(alpha, part)
    tol = opts.get("tol", 1e-4)
    pts = _t_points(opts, p)
    out = []
    for i, t in enumerate(pts):
        oracle = density.mvgamma_lt(t, alpha, sigma)
        closed = verify.rhs_lt_closed(t, alpha, part)
        rel = abs(closed - oracle) / oracle
        out.append(record("rhs_lt_closed", dg, closed, None, oracle,
                          "pass" if rel <= 1e-9 else "fail", None, 1, t=t))
        est = verify.rhs_lt_mc(t, alpha, part, n, RngSeed(seed, 1 + i), workers=workers)
        out.append(record("rhs_lt_mc", dg, est.value, est.std_error, oracle,
                          _within(est, oracle), [seed, 1 + i], n, t=t))
    if part.p1 == 1 and part.p2 in (1, 2):
        quad = verify.theorem1_quadrature_lt(alpha, part, pts)
        out.append(record("density_mass", dg, quad.mass, None, 1.0,
                          "pass" if abs(quad.mass - 1.0) <= tol else "fail", None, 0, tol=tol))
        for t, val in zip(pts, quad.lt):
            oracle = density.mvgamma_lt(t, alpha, sigma)
            out.append(record("density_quadrature_lt", dg, val, None, oracle,
                              "pass" if abs(val - oracle) <= tol else "fail", None, 0, t=t,
                              tol=tol))
        form = linalg.lambda_factorial_decomposition(sigma)
        if opts["x"] and 2 * alpha > form.m - 1:
            xs = _x_points(opts, p)
            ests = density.factorial_pdf_mc(np.array(xs), alpha, form, n, RngSeed(seed, 0),
                                            workers=workers)
            for x, est in zip(xs, ests):
                val = verify.theorem1_rhs_pdf(x, alpha, part)
                out.append(record("density_vs_factorial_mc", dg, est.value, est.std_error, val,
                                  _within(est, val), [seed, 0], n, x=x))
    return out


def cmd_density(opts, sigma, dg):
    p = sigma.shape[0]
    alpha, n, seed, workers = opts["alpha"], opts["n"], opts["seed"], opts["workers"]
    form = linalg.lambda_factorial_decomposition(sigma)
    xs = _x_points(opts, p)
    ests = density.factorial_pdf_mc(np.array(xs), alpha, form, n, RngSeed(seed, 0),
                                    workers=workers)
    part = None
    if p in (2, 3):
        part = linalg.partition_blocks(sigma, 1)
        try:
            verify.check_partition_shape(alpha, part)
        except MVGammaError:
            part = None
    out = []
    for x, est in zip(xs, ests):
        oracle = verify.theorem1_rhs_pdf(x, alpha, part) if part is not None else None
        verdict = "n/a" if oracle is None else _within(est, oracle)
        out.append(record("factorial_pdf_mc", dg, est.value, est.std_error, oracle, verdict,
                          [seed, 0], n, x=x, m=form.m))
    if opts.get("csv"):
        table = np.column_stack([np.array(xs), [e.value for e in ests], [e.std_error for e in ests]])
        header = [f"x{j + 1}" for j in range(p)] + ["estimate", "std_error"]
        _write_csv(opts["csv"], header, table)
    return out


def cmd_sample(opts, sigma, dg):
    alpha, n, seed, workers = opts["alpha"], opts["n"], opts["seed"], opts["workers"]
    samples = density.sample_mvgamma(alpha, sigma, n, RngSeed(seed, 0), method=opts["method"],
                                     workers=workers)
    if opts.get("csv"):
        density.write_samples_csv(opts["csv"], samples)
    out = []
    for j in range(sigma.shape[0]):
        est = MCEstimate.from_values(samples[:, j])
        oracle = alpha * sigma[j, j]
        out.append(record(f"mean_x{j + 1}", dg, est.value, est.std_error, oracle,
                          _within(est, oracle), [seed, 0], n))
    return out


def cmd_inequality(opts, sigma, dg):
    p = sigma.shape[0]
    alpha, n, seed, workers = opts["alpha"], opts["n"], opts["seed"], opts["workers"]
    p1 = opts.get("p1") or (p + 1) // 2
    xs = _x_points(opts, p, default=[[1.0] * p])
    out = []
    for i, x in enumerate(xs):
        rep = verify.inequality_check(x, alpha, sigma, p1, n, RngSeed(seed, i), workers=workers)
        verdict = "fail" if rep.verdict == "violated" else "pass"
        out.append(record("inequality", dg, rep.difference.value, rep.difference.std_error, 0.0,
                          verdict, [seed, i], n, x=x, p1=p1, outcome=rep.verdict,
                          lhs=rep.lhs.value, rhs=rep.rhs.value,
                          paired_difference=rep.paired_difference.value,
                          paired_std_error=rep.paired_difference.std_error,
                          cross_rank=rep.cross_rank))
    return out


def cmd_admissibility(opts, dg):
    if opts.get("sigma") is not None or opts.get("random_p"):
        info = verify.classify_admissibility(load_sigma(opts))
    else:
        if not opts.get("p"):
            raise InputError("admissibility requires --p or a covariance matrix")
        info = verify.AdmissibilityInfo(opts["p"], opts["structure"], m=opts.get("m"),
                                        m0=opts.get("m0"), m12=opts.get("m12"), p2=opts.get("p2"))
    bound = verify.admissibility_bound(info)
    extra = {"p": info.p, "structure": info.structure, "m": info.m}
    return [record("admissibility_bound", dg, bound, None, None, "pass", None, 0, **extra)]


def cmd_probe(opts, sigma, dg):
    p = sigma.shape[0]
    alpha, n, seed, workers = opts["alpha"], opts["n"], opts["seed"], opts["workers"]
    form = linalg.lambda_factorial_decomposition(sigma)
    if opts["x"]:
        grid = np.array(_x_points(opts, p))
    else:
        gen = RngSeed(seed).generator(3)
        grid = gen.uniform(0.05, 3.0, size=(opts["grid_size"], p)) * sigma.diagonal() * alpha
    rep = verify.positivity_probe(alpha, form, grid, n, RngSeed(seed, 0), workers=workers)
    verdict = "pass" if rep.flagged.shape[0] == 0 else "fail"
    return [record("positivity_probe", dg, rep.min_estimate.value, rep.min_estimate.std_error,
                   None, verdict, [seed, 0], n, grid_points=int(grid.shape[0]),
                   flagged=rep.flagged.tolist(), m=form.m)]


def _write_csv(path, header, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in table:
            w.writerow([repr(float(v)) for v in row])


def _summary(rec) -> str:
    parts = [f"{rec['check']:<24}", f"{rec['verdict']:<5}"]
    if rec["estimate"] is not None:
        parts.append(f"estimate={rec['estimate']:.10g}")
    if rec["std_error"] is not None:
        parts.append(f"se={rec['std_error']:.3g}")
    if rec["oracle"] is not None:
        parts.append(f"oracle={rec['oracle']:.10g}")
    return " ".join(parts)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args)
        command = args.command
        sigma = None if command == "admissibility" else load_sigma(opts)
        inputs = {
            "command": command,
            "sigma": None if sigma is None else [[repr(float(v)) for v in r] for r in sigma],
        }
        inputs.update({k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(opts.items())
                       if k not in ("workers", "output", "csv", "config", "command", "sigma")})
        dg = digest(inputs)
        handler = {
            "identities": cmd_identities,
            "lt-check": cmd_lt_check,
            "theorem1": cmd_theorem1,
            "density": cmd_density,
            "sample": cmd_sample,
            "inequality": cmd_inequality,
            "probe": cmd_probe,
        }
        checks = cmd_admissibility(opts, dg) if command == "admissibility" else handler[command](
            opts, sigma, dg)
    except (MVGammaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    stochastic = [c for c in checks if c["std_error"] is not None and c["check"] != "inequality"]
    failed_hard = [c for c in checks if c["verdict"] == "fail" and c not in stochastic]
    failed_mc = [c for c in stochastic if c["verdict"] == "fail"]
    passed = not failed_hard and len(failed_mc) <= _allowed_exceedances(len(stochastic))
    report = {
        "command": command,
        "inputs_digest": dg,
        "passed": passed,
        "checks": checks,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False)
    summary = "\n".join(_summary(c) for c in checks)
    if command == "admissibility":
        bound = checks[0]["estimate"]
        summary = f"threshold {bound:g} (2α > {bound:g}; integer 2α always admissible)"
    if opts.get("output"):
        try:
            opts["output"].write_text(text + "\n")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(summary)
    else:
        print(summary, file=sys.stderr)
        print(text)
    return 0 if passed else 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
