"""Command-line front end: every computation as a reproducible subcommand.

All numeric output is in nats unless --bits is given on subcommands that
support it. JSON is the default format and the only one with a stability
guarantee; identical arguments and seed always produce byte-identical
output. The seed resolves as --seed, then the FREQCAP_SEED environment
variable, then 0.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import capacity_bounds as cb
from .channel import ChannelParams, CountVector, transmit, transmit_poissonized
from .coding_experiment import ExperimentConfig, run_experiment
from .diagnostics import run_suite
from .distributions import DiscretePmf, RngStream, truncated_rounded_input_pmf
from .mutual_info import PoissonChannelSpec, i_mmpe_integral, mutual_information, spectrum_mc
from .special_math import NATS_PER_BIT

__all__ = ["run", "main", "emit_figure2"]


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("FREQCAP_SEED")
    return int(env) if env else 0


def _to_bits(payload):
    """Copy a payload with every *_nats field divided by ln 2 and renamed *_bits."""
    if isinstance(payload, dict):
        out = {}
        for key, value in payload.items():
            if key.endswith("_nats") and isinstance(value, (int, float)):
                out[key[: -len("_nats")] + "_bits"] = value / NATS_PER_BIT
            else:
                out[key] = _to_bits(value)
        return out
    if isinstance(payload, list):
        return [_to_bits(v) for v in payload]
    return payload


def _emit(payload, args, stream=None):
    stream = stream if stream is not None else sys.stdout
    if getattr(args, "bits", False):
        payload = _to_bits(payload)
    fmt = getattr(args, "format", "json")
    if fmt == "json":
        print(json.dumps(payload, sort_keys=True, indent=2), file=stream)
    elif fmt == "csv":
        flat = {k: v for k, v in payload.items() if isinstance(v, (int, float, str, bool))}
        print(",".join(flat), file=stream)
        print(",".join(str(v) for v in flat.values()), file=stream)
    else:  # text: human courtesy, no stability guarantee
        for key in sorted(payload):
            print(f"{key}: {payload[key]}", file=stream)


def _parse_input_law(args):
    if args.input == "trunc-gamma":
        if args.g is None:
            raise ValueError("--input trunc-gamma needs --g")
        return truncated_rounded_input_pmf(args.g, args.rho)
    if args.input == "point":
        if args.value is None or args.value < 1:
            raise ValueError("--input point needs --value >= 1")
        return DiscretePmf(int(args.value), np.array([0.0]))
    if args.input == "two-point":
        pairs = []
        for item in (args.points or "1:0.5,3:0.5").split(","):
            point, _, weight = item.partition(":")
            pairs.append((int(point), float(weight)))
        pairs.sort()
        lo, hi = pairs[0][0], pairs[-1][0]
        weights = np.zeros(hi - lo + 1)
        for point, weight in pairs:
            weights[point - lo] = weight
        return DiscretePmf.from_weights(lo, weights)
    raise ValueError(f"unknown input law {args.input!r}")


def _cmd_bounds(args):
    report = cb.bound_report(args.g, args.r)
    payload = report.to_dict()
    payload["config"] = {"g": args.g, "r": args.r}
    _emit(payload, args)
    return 0


def _cmd_dna(args):
    if (args.beta is None) == (args.beta_log_a is None):
        raise ValueError("give exactly one beta form: --beta or --beta-log-a")
    beta = args.beta if args.beta is not None else args.beta_log_a / math.log(args.alphabet)
    scenario = cb.dna_log_cardinality_lower_bound(
        args.kl, beta, args.alphabet, use_optimized_ratio=args.optimized_ratio
    )
    payload = scenario.to_dict()
    payload["config"] = {
        "alphabet": args.alphabet,
        "beta": beta,
        "kl": args.kl,
        "optimized_ratio": args.optimized_ratio,
    }
    _emit(payload, args)
    return 0


def _cmd_mi(args):
    input_pmf = _parse_input_law(args)
    spec = PoissonChannelSpec(input_pmf, args.gain)
    payload = {
        "mi_nats": mutual_information(spec),
        "support_size": input_pmf.size,
        "support_offset": input_pmf.support_offset,
        "z_max": spec.z_max,
        "config": {
            "input": args.input,
            "gain": args.gain,
            "g": args.g,
            "rho": args.rho,
            "value": args.value,
            "points": args.points,
        },
    }
    if args.i_mmpe:
        payload["i_mmpe_nats"] = i_mmpe_integral(input_pmf, args.gain)
    if args.dump_input:
        payload["input_pmf"] = json.loads(input_pmf.to_json())
    _emit(payload, args)
    return 0


def _cmd_spectrum(args):
    seed = _resolve_seed(args)
    input_pmf = _parse_input_law(args)
    spec = PoissonChannelSpec(input_pmf, args.gain)
    thresholds = [float(t) for t in args.thresholds.split(",")] if args.thresholds else []
    estimate = spectrum_mc(
        spec, args.n, args.samples, RngStream(seed), thresholds, workers=args.threads
    )
    payload = json.loads(estimate.to_json())
    payload["config"] = {
        "input": args.input, "gain": args.gain, "g": args.g, "rho": args.rho,
        "n": args.n, "samples": args.samples, "seed": seed, "threads": args.threads,
        "thresholds": thresholds,
    }
    _emit(payload, args)
    return 0


def _cmd_simulate(args):
    seed = _resolve_seed(args)
    counts = CountVector([int(c) for c in args.codeword.split(",")])
    kernel = None
    if args.kernel:
        with open(args.kernel) as fh:
            kernel = np.asarray(json.load(fh), dtype=float)
    params = ChannelParams(counts.n, args.g, args.r, kernel)
    rng = RngStream(seed)
    if args.poissonized:
        out = transmit_poissonized(counts, params, rng)
    else:
        out = transmit(counts, params, rng)
    payload = {
        "output": out.counts.tolist(),
        "output_total": out.total,
        "config": {
            "n": counts.n, "g": args.g, "r": args.r, "codeword": args.codeword,
            "poissonized": args.poissonized, "seed": seed, "kernel": args.kernel,
        },
    }
    _emit(payload, args)
    return 0


def _cmd_experiment(args):
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        config = ExperimentConfig(**{**config.to_dict(), "seed": args.seed})
    report = run_experiment(config, trace_path=args.trace)
    print(report.to_json())
    return 0


def _cmd_verify(args):
    seed = _resolve_seed(args)
    results = run_suite(args.suite, seed)
    failed = 0
    for result in results:
        status = "PASS" if result.ok else "FAIL"
        print(f"{status} {result.name}: {result.detail}")
        failed += 0 if result.ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def emit_figure2(beta_list, kl_grid, out_path, alphabet_size=4):
    """Write the storage-bound table as CSV with a stable column order."""
    rows, warnings = cb.figure2_rows(beta_list, kl_grid, alphabet_size)
    text = cb.figure2_csv(rows, warnings)
    try:
        with open(out_path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write figure table to {out_path}: {exc}") from exc
    return rows, warnings


_DEFAULT_BETA_LOG_A = "0.6,0.7,0.76,0.9"
_DEFAULT_KL = "1e18,1e19,1e20,1e21,4e21,1e22,1e23,1e24"


def _cmd_figure2(args):
    ln_a = math.log(args.alphabet)
    betas = [float(b) / ln_a for b in args.beta_log_a.split(",")] if args.beta_log_a else []
    kls = [float(k) for k in args.kl.split(",")]
    rows, warnings = emit_figure2(betas, kls, args.out, args.alphabet)
    for warning in warnings:
        print(warning, file=sys.stderr)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="freqcap",
        description="Frequency-based channel: capacity bounds, information quantities, "
        "simulation, and random-coding experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, bits=False, seed=False, fmt=True):
        if fmt:
            p.add_argument("--format", choices=("json", "csv", "text"), default="json")
        if bits:
            p.add_argument("--bits", action="store_true", help="emit *_nats fields in bits")
        if seed:
            p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("bounds", help="converse/achievability rate bounds at (g, r)")
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    common(p, bits=True)
    p.set_defaults(handler=_cmd_bounds)

    p = sub.add_parser("dna", help="short-molecule DNA storage bound")
    p.add_argument("--alphabet", type=int, default=4)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--beta-log-a", type=float, default=None, dest="beta_log_a",
                   help="beta expressed as the product beta * ln|A|")
    p.add_argument("--kl", type=float, required=True, help="total symbol count K*L")
    p.add_argument("--optimized-ratio", action="store_true", dest="optimized_ratio")
    common(p, bits=True)
    p.set_defaults(handler=_cmd_dna)

    def input_flags(p):
        p.add_argument("--input", choices=("trunc-gamma", "point", "two-point"),
                       default="trunc-gamma")
        p.add_argument("--g", type=float, default=None)
        p.add_argument("--rho", type=float, default=0.1)
        p.add_argument("--value", type=int, default=None, help="point-mass location")
        p.add_argument("--points", type=str, default=None, help="two-point law 'x1:w1,x2:w2'")
        p.add_argument("--gain", type=float, required=True)

    p = sub.add_parser("mi", help="exact mutual information of the surrogate channel")
    input_flags(p)
    p.add_argument("--i-mmpe", action="store_true", dest="i_mmpe",
                   help="also evaluate the estimation-error integral form")
    p.add_argument("--dump-input", action="store_true", dest="dump_input",
                   help="include the input law as {offset, log_weights}")
    common(p, bits=True)
    p.set_defaults(handler=_cmd_mi)

    p = sub.add_parser("spectrum", help="Monte-Carlo information-spectrum estimate")
    input_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--thresholds", type=str, default=None)
    p.add_argument("--threads", type=int, default=1)
    common(p, seed=True)
    p.set_defaults(handler=_cmd_spectrum)

    p = sub.add_parser("simulate", help="one channel transmission")
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--codeword", type=str, required=True, help="comma-separated counts")
    p.add_argument("--poissonized", action="store_true")
    p.add_argument("--kernel", type=str, default=None, help="JSON file with an n x n kernel")
    common(p, seed=True)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("experiment", help="full random-coding experiment from a config file")
    p.add_argument("--config", type=str, required=True, help="flat key=value file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--trace", type=str, default=None, help="per-trial CSV trace path")
    p.set_defaults(handler=_cmd_experiment)

    p = sub.add_parser("verify", help="run the certified property checks")
    p.add_argument("--suite", type=str, default="appendix")
    common(p, seed=True, fmt=False)
    p.set_defaults(handler=_cmd_verify)

    p = sub.add_parser("figure2", help="emit the storage-bound CSV table")
    p.add_argument("--out", type=str, required=True)
    p.add_argument("--alphabet", type=int, default=4)
    p.add_argument("--beta-log-a", type=str, default=_DEFAULT_BETA_LOG_A, dest="beta_log_a",
                   help="comma-separated beta*ln|A| values")
    p.add_argument("--kl", type=str, default=_DEFAULT_KL, help="comma-separated KL values")
    p.set_defaults(handler=_cmd_figure2)

    return parser


def run(argv) -> int:
    """Dispatch argv; exit code 0 on success, 1 on domain error, 2 on usage error."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.handler(args)
    except (ValueError, ArithmeticError, RuntimeError, NotImplementedError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
