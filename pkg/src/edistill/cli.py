"""Command-line front end.

Every command writes one JSON report to standard output and a short human
summary to standard error. Exit status: 0 on success, 1 when a verification
suite finds a violation, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from importlib import metadata

import numpy as np

from edistill import bounds, entropy, hashing, io, smooth, spectrum, verify
from edistill.errors import EdistillError
from edistill.states import DensityOp, Instrument

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

QUANTITIES = ("I", "I0", "I0tilde", "H2", "Hmin", "Dmax", "S", "S0", "Salpha")


class UsageError(Exception):
    pass


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _clean(obj):
    """Recursively convert to JSON-safe values (non-finite floats become strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _matrix(M) -> list | None:
    return None if M is None else io._pairs(np.asarray(M))


def _smoothing_spec(args, delta: float) -> smooth.SmoothingSpec:
    return smooth.SmoothingSpec(delta, strategy=args.strategy, seed=args.seed)


# --- entropy -----------------------------------------------------------------

def _need_sigma(args, q):
    if args.sigma is None:
        raise UsageError(f"--quantity {q} needs --sigma")
    return io.load_density(args.sigma)


def cmd_entropy(args) -> tuple[dict, str, int]:
    rho = io.load_density(args.state)
    q, delta = args.quantity, args.delta
    out = {"quantity": q, "delta": delta}
    if q == "I":
        v = entropy.coherent_info(rho)
    elif q == "I0":
        v = smooth.smooth_i0(rho, _smoothing_spec(args, delta)) if delta > 0 else entropy.zero_coherent_info(rho)
        out["side"] = "lower" if delta > 0 else "exact"
    elif q == "I0tilde":
        v = smooth.smooth_i0_tilde(rho, _smoothing_spec(args, delta))
        out["side"] = "lower" if delta > 0 else "exact"
    elif q == "H2":
        if delta > 0:
            s = smooth.smooth_i2(rho, _smoothing_spec(args, delta))
            v = entropy.EntropyValue(-s.value, witness=s.witness)
            out["side"] = "lower"
        else:
            v = entropy.cond_renyi2(rho)
            out["side"] = "exact"
    elif q == "Hmin":
        if args.sigma is not None:
            v = entropy.hmin_cond_fixed(rho, io.load_density(args.sigma).matrix)
        else:
            v = entropy.hmin_cond_opt(rho, seed=args.seed)
            out["converged"] = v.converged
    elif q == "Dmax":
        v = entropy.dmax(rho.matrix, _need_sigma(args, q).matrix)
    elif q == "S":
        if args.sigma is None:
            v = entropy.EntropyValue(entropy.von_neumann(rho))
        else:
            v = entropy.rel_entropy(rho, _need_sigma(args, q))
    elif q == "S0":
        v = entropy.renyi0(rho, _need_sigma(args, q))
    elif q == "Salpha":
        if args.alpha is None:
            raise UsageError("--quantity Salpha needs --alpha")
        v = entropy.renyi(rho, _need_sigma(args, q), args.alpha)
        out["alpha"] = args.alpha
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(q)
    witness = v.witness
    out.update(value=v.value, support_violated=v.support_violated, seed=args.seed,
               witness=_matrix(witness))
    return out, f"{q} = {v.value:.12g} bits", EXIT_OK


# --- bound -------------------------------------------------------------------

def _family(args, rho: DensityOp, kind: str) -> list | None:
    if args.family is None:
        return None
    members = io.load_family(args.family)
    if kind == "oneway" and not all(isinstance(m, Instrument) for m in members):
        raise UsageError("one-way family must contain instruments only")
    return members


def cmd_bound(args) -> tuple[dict, str, int]:
    rho = io.load_density(args.state)
    spec = smooth.SmoothingSpec(0.0, strategy=args.strategy, seed=args.seed)
    fam = _family(args, rho, args.kind)
    if args.kind == "hashing":
        rep = bounds.hashing_lower_bound(rho, args.eps, spec)
    elif args.kind == "preprocessed":
        if fam is None:
            raise UsageError("bound preprocessed needs --family DIR")
        rep = bounds.preprocessed_lower_bound(rho, args.eps, fam, spec)
    elif args.kind == "oneway":
        rep = bounds.one_way_upper_bound(rho, args.eps, fam, args.exhaustive, spec)
    else:
        rep = bounds.two_way_upper_bound(rho, args.eps, fam, args.exhaustive, spec)
    out = rep.to_dict()
    out["seed"] = args.seed
    out["family"] = args.family
    return out, f"{rep.quantity} ({rep.kind}) = {rep.value:.12g} bits, Delta = {rep.delta_remainder:.6g}", EXIT_OK


# --- simulate ----------------------------------------------------------------

def cmd_simulate(args) -> tuple[dict, str, int]:
    rho = io.load_density(args.state)
    branches = hashing.sample_branches(rho, args.m, args.samples, args.seed, args.threads)
    fids = np.array([b.env_fidelity for b in branches])
    weights = np.array([b.weight for b in branches])
    mean = float(fids.mean())
    stderr = float(fids.std(ddof=1) / math.sqrt(fids.size)) if fids.size > 1 else None
    cert = hashing.hashing_certificate(rho, args.m)
    out = {"protocol": "hashing", "m": args.m, "samples": args.samples, "seed": args.seed,
           "mean_fidelity": mean, "stderr": stderr, "stderr_available": stderr is not None,
           "mean_weight": float(weights.mean()), "certificate": cert}
    if args.figure:
        from edistill import plotting

        plotting.plot_hashing(fids, args.figure, mean, stderr if stderr is not None else math.nan, cert)
        out["figure"] = args.figure
    err = "n/a" if stderr is None else f"{stderr:.3g}"
    return out, f"hashing m={args.m}: mean fidelity {mean:.6f} +- {err}, certificate {cert:.6f}", EXIT_OK


# --- verify ------------------------------------------------------------------

def _parse_dims(text: str | None):
    if text is None:
        return None
    try:
        dims = tuple(int(x) for x in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--dims must look like 2x2, got {text!r}") from None
    if len(dims) not in (2, 3) or min(dims) < 1:
        raise UsageError(f"--dims must have two or three positive factors, got {text!r}")
    return dims


def cmd_verify(args) -> tuple[dict, str, int]:
    if args.suite not in verify.SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(verify.SUITES))}")
    res = verify.run_suite(args.suite, args.trials, _parse_dims(args.dims), args.seed, args.broken)
    status = "pass" if res.passed else "FAIL"
    summary = f"{args.suite}: {status}, {res.violations}/{res.trials} violations, worst margin {res.worst_margin:.3e}"
    return res.to_dict(), summary, EXIT_OK if res.passed else EXIT_VIOLATION


# --- spectrum ----------------------------------------------------------------

def cmd_spectrum(args) -> tuple[dict, str, int]:
    rho = io.load_density(args.rho)
    sigma = io.load_density(args.sigma)
    if args.gamma_step <= 0 or args.gamma_max < args.gamma_min:
        raise UsageError("need gamma-step > 0 and gamma-max >= gamma-min")
    n_pts = int(math.floor((args.gamma_max - args.gamma_min) / args.gamma_step + 1e-9)) + 1
    gammas = args.gamma_min + args.gamma_step * np.arange(n_pts)
    try:
        prof = spectrum.divergence_profile(rho, sigma, args.nmax, gammas, args.path)
    except EdistillError as exc:
        raise UsageError(f"refused: {exc}") from None
    br = spectrum.divergence_estimate(prof, args.upper_threshold, args.lower_threshold)
    out = {"path": prof.path, "nmax": args.nmax, "gammas": prof.gammas.tolist(),
           "values": prof.values.tolist(),
           "thresholds": {"upper": args.upper_threshold, "lower": args.lower_threshold},
           "sup_est": br.sup_est, "inf_est": br.inf_est,
           "sup_open": br.sup_open, "inf_open": br.inf_open}
    if spectrum.commuting(rho.matrix, sigma.matrix):
        out["relative_entropy"] = entropy.rel_entropy(rho, sigma).value
    if args.figure:
        from edistill import plotting

        plotting.plot_profile(prof, args.figure, br, out.get("relative_entropy"))
        out["figure"] = args.figure
    return out, f"n={args.nmax} brackets [{br.inf_est:.6g}, {br.sup_est:.6g}] ({prof.path} path)", EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--timing", action="store_true", help="add wall-clock runtime to the report")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sampling")

    p = argparse.ArgumentParser(prog="edistill", description="One-shot entanglement distillation bounds.")
    p.add_argument("--version", action="version", version=f"edistill {_version()}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("entropy", parents=[common], help="entropic quantities of a state")
    e.add_argument("--quantity", required=True, choices=QUANTITIES)
    e.add_argument("--state", required=True)
    e.add_argument("--sigma")
    e.add_argument("--alpha", type=float)
    e.add_argument("--delta", type=float, default=0.0)
    e.add_argument("--strategy", default="local_search", choices=("truncation", "local_search"))
    e.add_argument("--seed", type=int, default=0)
    e.set_defaults(func=cmd_entropy)

    b = sub.add_parser("bound", parents=[common], help="one-shot distillation bounds")
    b.add_argument("kind", choices=("hashing", "oneway", "twoway", "preprocessed"))
    b.add_argument("--state", required=True)
    b.add_argument("--eps", type=float, required=True)
    b.add_argument("--family", help="directory of instrument or local map files")
    b.add_argument("--exhaustive", action="store_true",
                   help="treat the family as exhaustive (report an upper bound, not a surrogate)")
    b.add_argument("--strategy", default="local_search", choices=("truncation", "local_search"))
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_bound)

    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo protocol simulation")
    s.add_argument("protocol", choices=("hashing",))
    s.add_argument("--state", required=True)
    s.add_argument("-m", type=int, required=True)
    s.add_argument("--samples", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--figure", help="write a histogram of branch fidelities to this file")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="run a seeded inequality suite")
    v.add_argument("--suite", required=True)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--dims")
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--broken", action="store_true", help="negate the predicate (harness self-test)")
    v.set_defaults(func=cmd_verify)

    sp = sub.add_parser("spectrum", parents=[common], help="finite-n information-spectrum profile")
    sp.add_argument("--rho", required=True)
    sp.add_argument("--sigma", required=True)
    sp.add_argument("--nmax", type=int, required=True)
    sp.add_argument("--gamma-min", type=float, required=True)
    sp.add_argument("--gamma-max", type=float, required=True)
    sp.add_argument("--gamma-step", type=float, required=True)
    sp.add_argument("--path", default="auto", choices=("auto", "dense", "classical"))
    sp.add_argument("--upper-threshold", type=float, default=0.1)
    sp.add_argument("--lower-threshold", type=float, default=0.9)
    sp.add_argument("--figure", help="write the profile plot to this file")
    sp.set_defaults(func=cmd_spectrum)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    t0 = time.perf_counter()
    try:
        body, summary, code = args.func(args)
    except UsageError as exc:
        print(f"edistill: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EdistillError, KeyError, ValueError) as exc:
        print(f"edistill: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = {"command": ["edistill"] + argv, "version": _version(), "result": body}
    if args.timing:
        report["runtime_ms"] = round(1000 * (time.perf_counter() - t0), 3)
    sys.stdout.write(json.dumps(_clean(report), indent=1, sort_keys=True) + "\n")
    print(summary, file=sys.stderr)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
