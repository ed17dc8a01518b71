"""Command-line front end.

Subcommands: simulate, filter, fit-bkt, bridge, experiment, irf, ising,
stationary. Structured single-object output is JSON, curves and traces are
CSV; every invocation that writes files also writes a run manifest (command
line, seeds, version, duration, output digests) next to its outputs.

Exit codes: 0 success, 1 domain error (printed as ``code: message``),
2 I/O or argument errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import secrets
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bridge import bkt_to_irt
from .chain import sample_trajectory, stationary_closed_form
from .errors import DomainError
from .experiment import (
    SimConfig,
    run_equilibrium_experiment,
    summarize_curves,
    write_curves_csv,
    write_summary_json,
)
from .irt import irf_4pl
from .ising import IsingNetwork, boltzmann_exact, empirical_state_frequencies, simulate_field
from .params import BktParams, Irf4pl, ResponsePanel
from .rng import DEFAULT_SEED, RngKey
from .tracing import fit_baum_welch, forward_filter

FORMAT_VERSION = 1


def _parse_seed(text: str) -> int:
    if text == "auto":
        return secrets.randbits(63)
    return int(text)


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=_parse_seed,
        default=DEFAULT_SEED,
        help=f"integer seed, or 'auto' for entropy (default: {DEFAULT_SEED})",
    )


def _bkt_flags(parser: argparse.ArgumentParser, *, with_init: bool = True) -> None:
    if with_init:
        parser.add_argument("--p-init", type=float, default=0.0,
                            help="initial mastery probability (default: 0.0)")
    parser.add_argument("--p-learn", type=float, required=True,
                        help="unmastered -> mastered transition probability")
    parser.add_argument("--p-forget", type=float, default=0.0,
                        help="mastered -> unmastered transition probability (default: 0.0)")
    if with_init:
        parser.add_argument("--p-slip", type=float, default=0.0,
                            help="incorrect-while-mastered probability (default: 0.0)")
        parser.add_argument("--p-guess", type=float, default=0.0,
                            help="correct-while-unmastered probability (default: 0.0)")


def _read_params(path: str) -> BktParams:
    return BktParams.from_json(Path(path).read_text(encoding="utf-8"))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_manifest(
    outputs: list[Path], argv: list[str], seeds: list[int], started: float
) -> Path:
    main = outputs[0]
    manifest_path = main.parent / (main.stem + ".manifest.json")
    payload = {
        "format_version": FORMAT_VERSION,
        "command": argv,
        "seeds": seeds,
        "version": __version__,
        "duration_s": time.time() - started,
        "outputs": [
            {"path": str(path), "sha256": _sha256(path)} for path in outputs
        ],
    }
    with open(manifest_path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")
    return manifest_path


def _emit_json(payload: dict, out: str | None, argv: list[str], seeds: list[int],
               started: float) -> None:
    text = json.dumps(payload, separators=(",", ":"))
    if out is None:
        print(text)
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")
        _write_manifest([Path(out)], argv, seeds, started)


def _cmd_stationary(args: argparse.Namespace) -> int:
    params = BktParams(
        p_init=0.0,
        p_learn=args.p_learn,
        p_forget=args.p_forget,
        p_slip=0.0,
        p_guess=0.0,
    )
    dist = stationary_closed_form(params)
    payload = {"lambda0": dist.lambda0, "lambda1": dist.lambda1}
    if dist.periodic:
        payload["periodic"] = True
    print(json.dumps(payload, separators=(",", ":")))
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    started = time.time()
    params = BktParams(
        p_init=args.p_init,
        p_learn=args.p_learn,
        p_forget=args.p_forget,
        p_slip=args.p_slip,
        p_guess=args.p_guess,
    )
    trajectory = sample_trajectory(params, args.steps, RngKey(args.seed))
    rows = zip(range(1, args.steps + 1), trajectory.latent, trajectory.emitted)
    if args.out is None:
        print("t,latent,emitted")
        for t, z, x in rows:
            print(f"{t},{z},{x}")
        return 0
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as handle:
        handle.write("# format_version=1\n")
        writer = csv.writer(handle)
        writer.writerow(["t", "latent", "emitted"])
        writer.writerows(rows)
    _write_manifest([out], args._argv, [args.seed], started)
    return 0


def _cmd_filter(args: argparse.Namespace) -> int:
    started = time.time()
    params = _read_params(args.params)
    responses = [int(tok) for tok in args.responses.split(",") if tok != ""]
    result = forward_filter(params, responses)
    payload = {
        "format_version": FORMAT_VERSION,
        "posterior": result.posterior.tolist(),
        "predictive": result.predictive.tolist(),
        "log_likelihood": result.log_likelihood,
    }
    _emit_json(payload, args.out, args._argv, [], started)
    return 0


def _cmd_fit_bkt(args: argparse.Namespace) -> int:
    started = time.time()
    panel = ResponsePanel.from_csv(args.panel)
    if args.init is not None:
        init = _read_params(args.init)
    else:
        init = BktParams(
            p_init=0.3,
            p_learn=0.2,
            p_forget=0.0 if args.classic else 0.1,
            p_slip=0.15,
            p_guess=0.15,
        )
    report = fit_baum_welch(
        panel,
        args.skill,
        init,
        classic=args.classic,
        identified=args.identified,
        tol=args.tol,
        max_iters=args.max_iters,
    )
    payload = json.loads(report.to_json())
    payload["format_version"] = FORMAT_VERSION
    _emit_json(payload, args.out, args._argv, [], started)
    return 0


def _cmd_bridge(args: argparse.Namespace) -> int:
    started = time.time()
    params = _read_params(args.params)
    eq = bkt_to_irt(params)
    payload = {
        "format_version": FORMAT_VERSION,
        "theta": eq.theta,
        "b": eq.b,
        "c": eq.c,
        "d": eq.d,
        "p_correct": eq.p_correct,
    }
    _emit_json(payload, args.out, args._argv, [], started)
    return 0


def _resolve_threads(value: int | None) -> int:
    env = os.environ.get("BKT_IRT_THREADS")
    if env is not None:
        return max(1, int(env))
    if value is not None:
        return max(1, value)
    return max(1, os.cpu_count() or 1)


def _cmd_experiment(args: argparse.Namespace) -> int:
    started = time.time()
    iters = tuple(int(tok) for tok in args.iters.split(",") if tok != "")
    fields = dict(
        iteration_counts=iters,
        p_slip=args.slip,
        p_guess=args.guess,
        seed=args.seed,
        bin_width=args.bin_width,
    )
    if args.desk:
        config = SimConfig.desk(**fields)
    else:
        config = SimConfig(
            n_people=args.people,
            n_items=args.items,
            replications=args.reps,
            **fields,
        )
    curves = run_equilibrium_experiment(config, threads=_resolve_threads(args.threads))
    item = config.irf()
    out = Path(args.out)
    write_curves_csv(curves, item, str(out))
    summary = summarize_curves(curves, item, args.min_count)
    summary_path = out.parent / (out.stem + ".summary.json")
    write_summary_json(summary, str(summary_path))
    _write_manifest([out, summary_path], args._argv, [config.seed], started)
    return 0


def _cmd_irf(args: argparse.Namespace) -> int:
    started = time.time()
    item = Irf4pl(a=args.a, b=args.b, c=args.c, d=args.d)
    thetas = np.linspace(args.theta_min, args.theta_max, args.points)
    values = irf_4pl(thetas, item)
    if args.out is None:
        print("theta,p")
        for theta, p in zip(thetas, values):
            print(f"{theta!r},{p!r}")
        return 0
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as handle:
        handle.write("# format_version=1\n")
        writer = csv.writer(handle)
        writer.writerow(["theta", "p"])
        for theta, p in zip(thetas, values):
            writer.writerow([repr(float(theta)), repr(float(p))])
    _write_manifest([out], args._argv, [], started)
    return 0


def _cmd_ising(args: argparse.Namespace) -> int:
    started = time.time()
    net = IsingNetwork.from_json_file(args.net)
    trace = simulate_field(
        net, args.sweeps, RngKey(args.seed), dynamics=args.dynamics, scan=args.scan
    )
    freqs = empirical_state_frequencies(trace, burn_in=args.burn_in)
    exact = boltzmann_exact(net) if args.exact else None
    out = Path(args.out)
    with open(out, "w", newline="", encoding="utf-8") as handle:
        handle.write("# format_version=1\n")
        writer = csv.writer(handle)
        header = ["state_index", "frequency"] + (["exact_prob"] if args.exact else [])
        writer.writerow(header)
        for idx, freq in enumerate(freqs):
            row = [idx, repr(float(freq))]
            if exact is not None:
                row.append(repr(float(exact[idx])))
            writer.writerow(row)
    _write_manifest([out], args._argv, [args.seed], started)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bktirt",
        description="Mastery-chain and item-response toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stationary", help="closed-form stationary distribution")
    _bkt_flags(p, with_init=False)
    p.set_defaults(handler=_cmd_stationary)

    p = sub.add_parser("simulate", help="sample a latent/response trajectory")
    _bkt_flags(p, with_init=True)
    p.add_argument("--steps", type=int, default=100, help="trajectory length (default: 100)")
    _add_seed(p)
    p.add_argument("--out", help="CSV path (default: print to stdout)")
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("filter", help="forward-filter a response sequence")
    p.add_argument("--params", required=True, help="BKT parameter JSON file")
    p.add_argument("--responses", required=True,
                   help="comma-separated 0/1 responses, e.g. 1,0,1")
    p.add_argument("--out", help="JSON path (default: print to stdout)")
    p.set_defaults(handler=_cmd_filter)

    p = sub.add_parser("fit-bkt", help="EM fit of one skill's parameters")
    p.add_argument("--panel", required=True, help="response panel CSV")
    p.add_argument("--skill", type=int, required=True, help="skill id to fit")
    p.add_argument("--init", help="starting-point JSON (default: built-in)")
    p.add_argument("--classic", action="store_true", help="pin p_forget to 0")
    p.add_argument("--identified", action="store_true",
                   help="constrain guess and slip below 0.5")
    p.add_argument("--tol", type=float, default=1e-6,
                   help="relative log-likelihood tolerance (default: 1e-6)")
    p.add_argument("--max-iters", type=int, default=500,
                   help="EM iteration cap (default: 500)")
    p.add_argument("--out", help="JSON path (default: print to stdout)")
    p.set_defaults(handler=_cmd_fit_bkt)

    p = sub.add_parser("bridge", help="equilibrium curve of a parameter set")
    p.add_argument("--params", required=True, help="BKT parameter JSON file")
    p.add_argument("--out", help="JSON path (default: print to stdout)")
    p.set_defaults(handler=_cmd_bridge)

    p = sub.add_parser("experiment", help="population convergence experiment")
    p.add_argument("--people", type=int, default=1000,
                   help="number of learners (default: 1000)")
    p.add_argument("--items", type=int, default=100,
                   help="number of items (default: 100)")
    p.add_argument("--reps", type=int, default=1000,
                   help="replications per pair (default: 1000)")
    p.add_argument("--iters", default="2,5,50",
                   help="comma-separated chain step counts (default: 2,5,50)")
    p.add_argument("--slip", type=float, default=0.1, help="slip probability (default: 0.1)")
    p.add_argument("--guess", type=float, default=0.1, help="guess probability (default: 0.1)")
    _add_seed(p)
    p.add_argument("--bin-width", type=float, default=0.25,
                   help="advantage bin width (default: 0.25)")
    p.add_argument("--desk", action="store_true",
                   help="reduced preset: 200 people, 50 items, 200 reps")
    p.add_argument("--min-count", type=int, default=200,
                   help="bin count threshold for the deviation summary (default: 200)")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: available cores; "
                        "BKT_IRT_THREADS overrides)")
    p.add_argument("--out", required=True, help="curve CSV path")
    p.set_defaults(handler=_cmd_experiment)

    p = sub.add_parser("irf", help="sample an item response curve")
    p.add_argument("--a", type=float, default=1.0, help="discrimination (default: 1.0)")
    p.add_argument("--b", type=float, default=0.0, help="difficulty (default: 0.0)")
    p.add_argument("--c", type=float, default=0.0, help="lower asymptote (default: 0.0)")
    p.add_argument("--d", type=float, default=1.0, help="upper asymptote (default: 1.0)")
    p.add_argument("--theta-min", type=float, default=-8.0,
                   help="curve start (default: -8.0)")
    p.add_argument("--theta-max", type=float, default=8.0,
                   help="curve end (default: 8.0)")
    p.add_argument("--points", type=int, default=161,
                   help="number of samples (default: 161)")
    p.add_argument("--out", help="CSV path (default: print to stdout)")
    p.set_defaults(handler=_cmd_irf)

    p = sub.add_parser("ising", help="sample an interacting mastery network")
    p.add_argument("--net", required=True, help="network JSON file")
    p.add_argument("--sweeps", type=int, default=10000,
                   help="full-network update sweeps (default: 10000)")
    p.add_argument("--dynamics", choices=["glauber", "metropolis"],
                   default="glauber", help="single-site dynamics (default: glauber)")
    p.add_argument("--scan", choices=["fixed", "random"], default="fixed",
                   help="site update order (default: fixed)")
    p.add_argument("--burn-in", type=int, default=0,
                   help="sweeps dropped before counting (default: 0)")
    _add_seed(p)
    p.add_argument("--exact", action="store_true",
                   help="add the exact Boltzmann column (n <= 20)")
    p.add_argument("--out", required=True, help="state-frequency CSV path")
    p.set_defaults(handler=_cmd_ising)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    args._argv = list(argv)
    try:
        return args.handler(args)
    except DomainError as exc:
        print(exc.render(), file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"io_error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
