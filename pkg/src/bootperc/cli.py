"""Command-line interface: every operation behind reproducible flags.

Commands emit either JSON (with a config echo) or plot-ready CSV whose
first line is a '# config ...' comment carrying the same echo.  Numbers
are serialized with 17 significant digits and log-scale fields carry an
explicit base tag, so outputs round-trip and reruns with identical flags
are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import validate as validate_suites
from .core import (CLASSIFY_LADDER, ModelParams, SequenceSpec, classify_regime,
                   critical_quantities, regime_label)
from .errors import BootpercError, ParameterError
from .montecarlo import (estimate_tail, estimate_tail_splitting,
                         rate_convergence_study)
from .oracle import exact_pmf, exact_stop_cdf
from .process import SAMPLER_BATCHES, RngSpec, histogram
from .ratefun import family_from_string, minimize_rate, rate_J, tail_exponent

__all__ = ["main"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _echo(args: argparse.Namespace) -> dict:
    # `out` is where the echo itself lands; everything else reproduces the run
    skip = {"func", "config", "out"}
    return {k: v for k, v in sorted(vars(args).items())
            if k not in skip and v is not None}


def _write(args, text: str) -> None:
    out = getattr(args, "out", None) or "-"
    if out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _emit_json(args, result: dict) -> None:
    _write(args, json.dumps({"config": _echo(args), "result": result},
                            sort_keys=True, default=_fmt))


def _emit_csv(args, header: list, rows) -> None:
    lines = ["# config " + json.dumps(_echo(args), sort_keys=True, default=_fmt)]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    _write(args, "\n".join(lines))


def _parse_ladder(text: str) -> list:
    try:
        return [int(float(tok)) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ParameterError(f"bad ladder {text!r}") from exc


def _load_spec(path: str) -> SequenceSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParameterError(f"cannot read spec file {path}: {exc}") from exc
    return SequenceSpec.from_json(text)


def _params(args) -> ModelParams:
    return ModelParams(n=args.n, p=args.p, r=args.r, a=args.a)


# ---------------------------------------------------------------------------
# command bodies

def cmd_critical(args) -> int:
    params = ModelParams(n=args.n, p=args.p, r=args.r, a=args.a or 1)
    crit = critical_quantities(params)
    result = {"t_c": crit.t_c, "a_c": crit.a_c, "b_c": crit.b_c,
              "b_c_prime": crit.b_c_prime, "ln_b_c": crit.log_b_c,
              "ln_b_c_prime": crit.log_b_c_prime, "log_base": "e"}
    if args.format == "json":
        _emit_json(args, result)
    else:
        keys = ["t_c", "a_c", "b_c", "b_c_prime", "ln_b_c", "ln_b_c_prime"]
        _emit_csv(args, keys, [[result[k] for k in keys]])
    return 0


def cmd_regime(args) -> int:
    spec = _load_spec(args.spec)
    ladder = _parse_ladder(args.ladder) if args.ladder else list(CLASSIFY_LADDER)
    regime = classify_regime(spec, ladder)
    result = {"regime": regime_label(regime)}
    if hasattr(regime, "b"):
        result["b"] = regime.b
    if hasattr(regime, "sub") and hasattr(regime.sub, "gamma"):
        result["gamma"] = regime.sub.gamma
    _emit_json(args, result)
    return 0


def cmd_rate(args) -> int:
    x0, j0 = minimize_rate(args.alpha, args.r, args.tol)
    if args.curve_out:
        x_hi = args.curve_max if args.curve_max else 3.0 * args.alpha / args.r
        xs = np.linspace(0.0, x_hi, args.curve_points)
        rows = [(float(x), rate_J(float(x), args.alpha, args.r)[1]) for x in xs]
        lines = ["x,J"] + [f"{_fmt(x)},{_fmt(j)}" for x, j in rows]
        Path(args.curve_out).write_text("\n".join(lines) + "\n")
    _emit_json(args, {"x0": x0, "J_x0": j0})
    return 0


def cmd_simulate(args) -> int:
    params = _params(args)
    rng = RngSpec(seed=args.seed, stream=args.stream)
    sizes = SAMPLER_BATCHES[args.sampler](params, args.replicates, rng)
    if args.emit == "rows":
        rows = [(i, int(v), int(v)) for i, v in enumerate(sizes)]
        _emit_csv(args, ["replicate", "final_size", "stop_time"], rows)
        return 0
    hist = histogram(sizes)
    if args.format == "json":
        _emit_json(args, {"histogram": {str(k): v for k, v in hist.items()},
                          "replicates": args.replicates})
    else:
        _emit_csv(args, ["final_size", "count"], sorted(hist.items()))
    return 0


def cmd_exact(args) -> int:
    params = _params(args)
    if args.truncate is not None:
        value = exact_stop_cdf(params, args.truncate)
        _emit_json(args, {"tau": args.truncate, "prob": float(value),
                          "ln_prob": value.ln(), "log2_prob": value.log2(),
                          "log_base": "e_and_2"})
        return 0
    pmf = exact_pmf(params, cap=args.cap)
    if args.format == "json":
        result = {"probs": {str(k): p for k, p, _ in pmf.csv_rows()},
                  "log2_probs": {str(k): l2 for k, _, l2 in pmf.csv_rows()},
                  "truncation_bound": pmf.truncation_bound}
        _emit_json(args, result)
    else:
        _emit_csv(args, ["k", "prob", "log2_prob"], pmf.csv_rows())
    return 0


def _require(args, *names) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise ParameterError(f"tail {args.mode} requires {flags}")


def cmd_tail(args) -> int:
    if args.mode == "predict":
        _require(args, "spec", "n", "family", "eps")
        spec = _load_spec(args.spec)
        ladder = _parse_ladder(args.ladder) if args.ladder else list(CLASSIFY_LADDER)
        regime = classify_regime(spec, ladder)
        te = tail_exponent(spec, args.n, family_from_string(args.family),
                           args.eps, regime)
        _emit_json(args, json.loads(te.to_json()) | {"regime": regime_label(regime)})
        return 0
    if args.mode == "estimate":
        _require(args, "n", "p", "r", "a")
        params = _params(args)
        rng = RngSpec(seed=args.seed, stream=args.stream)
        if args.splitting:
            if args.tau is None:
                raise ParameterError("--tau is required with --splitting")
            est = estimate_tail_splitting(params, args.tau, args.levels,
                                          args.replicates, rng)
        else:
            _require(args, "family", "eps")
            est = estimate_tail(params, family_from_string(args.family),
                                args.eps, args.replicates, rng)
        result = est.to_dict()
        if est.p_hat == 0.0 and not args.splitting:
            result["note"] = "no hits; consider --splitting for rare events"
        _emit_json(args, result)
        return 0
    # study
    _require(args, "spec", "family", "eps", "ladder")
    spec = _load_spec(args.spec)
    rows = rate_convergence_study(
        spec, family_from_string(args.family), args.eps,
        _parse_ladder(args.ladder), method=args.method,
        replicates=args.replicates, rng=RngSpec(args.seed, args.stream),
        horizon_k=args.horizon_k)
    _emit_csv(args, ["n", "v_n", "p_hat", "log_p", "normalized", "target"],
              [(r.n, r.v_n, r.p_hat, r.log_p, r.normalized, r.target)
               for r in rows])
    return 0


def cmd_validate(args) -> int:
    if args.list:
        for name in validate_suites.SUITES:
            print(name)
        return 0
    if args.suite not in validate_suites.SUITES:
        raise ParameterError(
            f"unknown suite {args.suite!r}; --list shows the options")
    ok = validate_suites.run_suite(args.suite)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# parser assembly

def _add_common(sub, *, seed=False, fmt=None):
    sub.add_argument("--out", default="-", help="output path, '-' for stdout")
    if fmt:
        sub.add_argument("--format", choices=["csv", "json"], default=fmt)
    if seed:
        sub.add_argument("--seed", type=int, default=0)
        sub.add_argument("--stream", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bootperc",
        description="bootstrap percolation on G(n,p): exact law, samplers, "
                    "and tail-exponent predictions")
    parser.add_argument("--config", help="JSON file of flag defaults")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("critical", help="critical quantities t_c, a_c, b_c")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--a", type=int, default=None)
    _add_common(s, fmt="json")
    s.set_defaults(func=cmd_critical)

    s = subs.add_parser("regime", help="classify b_c regime of a spec file")
    s.add_argument("--spec", required=True)
    s.add_argument("--ladder", default=None, help="comma list of n values")
    _add_common(s, fmt="json")
    s.set_defaults(func=cmd_regime)

    s = subs.add_parser("rate", help="minimize the early-stop rate J")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--curve-out", default=None)
    s.add_argument("--curve-points", type=int, default=200)
    s.add_argument("--curve-max", type=float, default=None)
    _add_common(s, fmt="json")
    s.set_defaults(func=cmd_rate)

    s = subs.add_parser("simulate", help="replicate a sampler, emit histogram")
    s.add_argument("--sampler", choices=sorted(SAMPLER_BATCHES), required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--a", type=int, required=True)
    s.add_argument("--replicates", type=int, required=True)
    s.add_argument("--emit", choices=["histogram", "rows"], default="histogram")
    _add_common(s, seed=True, fmt="csv")
    s.set_defaults(func=cmd_simulate)

    s = subs.add_parser("exact", help="exact pmf of A*, or P(T <= tau)")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--a", type=int, required=True)
    s.add_argument("--truncate", type=int, default=None, metavar="TAU")
    s.add_argument("--cap", type=int, default=2000)
    _add_common(s, fmt="csv")
    s.set_defaults(func=cmd_exact)

    s = subs.add_parser("tail", help="tail exponents: predict/estimate/study")
    s.add_argument("mode", choices=["predict", "estimate", "study"])
    s.add_argument("--spec", default=None)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--r", type=int, default=None)
    s.add_argument("--a", type=int, default=None)
    s.add_argument("--family", default=None, help="e.g. const:1.0, asym_bc:1.0")
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--replicates", type=int, default=10_000)
    s.add_argument("--ladder", default=None)
    s.add_argument("--method", choices=["exact_dp", "naive", "splitting"],
                   default="exact_dp")
    s.add_argument("--splitting", action="store_true")
    s.add_argument("--tau", type=int, default=None)
    s.add_argument("--levels", type=int, default=4)
    s.add_argument("--horizon-k", dest="horizon_k", type=float, default=None)
    _add_common(s, seed=True, fmt="json")
    s.set_defaults(func=cmd_tail)

    s = subs.add_parser("validate", help="run a named validation suite")
    s.add_argument("--suite", default=None)
    s.add_argument("--list", action="store_true")
    s.set_defaults(func=cmd_validate)

    return parser


def _inject_config(argv: list) -> list:
    """Insert flags from a --config JSON file right after the subcommand,
    so explicit command-line flags still win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    path = argv[at + 1]
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ParameterError("config file must hold a JSON object")
    extra = []
    for key, value in sorted(doc.items()):
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                extra.append(flag)
        else:
            extra.extend([flag, str(value)])
    rest = argv[:at] + argv[at + 2:]
    if not rest:
        raise ParameterError("a subcommand is required")
    head = rest[:1]
    if head[0] == "tail" and len(rest) > 1 and not rest[1].startswith("-"):
        head = rest[:2]
    return head + extra + rest[len(head):]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _inject_config(argv)
        args = build_parser().parse_args(argv)
        return args.func(args)
    except BootpercError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
