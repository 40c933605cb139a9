"""Command-line entry point: ``qubitarrow {simulate,reverse,analyze,ensemble,janus}``.

Exit codes: 0 success, 2 usage error, 3 invalid input data, 4 numerical failure.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import io
from .algebra import QubitState
from .arrow import (
    exact_log_likelihood_ratio,
    integrated_signal,
    log_likelihood_ratio,
    mean_lnR_theory,
    p_err_theory,
    variance_lnR_theory,
)
from .ensemble import DEFAULT_BINS, empirical_p_err, histogram, run_ensemble
from .errors import (
    DomainError,
    InvalidInputError,
    InvalidParametersError,
    InvalidStateError,
    NotInvertibleError,
    NumericalError,
    ZeroProbabilityError,
)
from .measurement import discrete_log_ratio, janus_backward_sequence, janus_restoration_deficit
from .trajectory import residual_check, reverse_movie, simulate_forward

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_NUMERIC = 4

DEFAULT_EPSILON = 1e-3


def verdict(lnr, epsilon=DEFAULT_EPSILON):
    if abs(lnr) < epsilon:
        return "ambiguous"
    return "forward-likely" if lnr > 0 else "backward-likely"


def _load_config(args):
    cfg, opts = io.read_config(args.config)
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "dt", None) is not None:
        changes["dt"] = args.dt
    if changes:
        try:
            cfg = cfg.with_(**changes)
        except InvalidParametersError as exc:
            raise io.ConfigError(next(iter(changes)), str(exc)) from None
    return cfg, opts


def _emit(text, out):
    if out:
        io._write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    cfg, _ = _load_config(args)
    movie = simulate_forward(cfg, args.index)
    io.write_movie(args.out, movie)
    manifest = io.build_manifest("simulate", cfg, [args.out], extra={"trajectory_index": args.index})
    io.write_manifest(args.out + ".manifest.json", manifest)
    return EXIT_OK


def cmd_reverse(args):
    movie = io.read_movie(args.movie)
    _emit(io.format_movie(reverse_movie(movie, args.convention)), args.out)
    return EXIT_OK


def analyze_movie(movie, epsilon=DEFAULT_EPSILON):
    """Report items for a movie: ``ln R`` (both estimators), gamma, residual, verdict."""
    if movie.n_steps == 0:
        lnr, lnr_exact, gamma = 0.0, 0.0, 0.0
    else:
        lnr = log_likelihood_ratio(movie)
        lnr_exact = exact_log_likelihood_ratio(movie)
        gamma = integrated_signal(movie.record)
    residual = residual_check(movie) if movie.n_steps >= 2 else None
    return [
        ("direction", movie.direction),
        ("n_steps", movie.n_steps),
        ("duration", movie.duration),
        ("lnR", lnr),
        ("lnR_exact", lnr_exact),
        ("gamma", gamma),
        ("max_residual", residual),
        ("epsilon", float(epsilon)),
        ("verdict", verdict(lnr, epsilon)),
    ]


def cmd_analyze(args):
    movie = io.read_movie(args.movie)
    sys.stdout.write(io.format_summary(analyze_movie(movie, args.epsilon)))
    return EXIT_OK


def ensemble_summary(ens, bins):
    cfg = ens.config
    T = cfg.duration
    return [
        ("n", ens.n),
        ("duration", T),
        ("tau", cfg.tau),
        ("omega", cfg.omega),
        ("dt", cfg.dt),
        ("seed", cfg.seed),
        ("bins", bins),
        ("mean", ens.mean),
        ("variance", ens.variance),
        ("skewness", ens.skewness),
        ("skewness_se", ens.skewness_se),
        ("p_err_empirical", ens.p_err_empirical),
        ("estimator", ens.estimator),
        ("mean_midpoint", float(np.mean(ens.lnR_midpoint))),
        ("p_err_empirical_midpoint", empirical_p_err(ens.lnR_midpoint)),
        # Rabi-averaged predictions, <z^2> = 1/2
        ("mean_lnR_theory", mean_lnR_theory(T, cfg.tau, 0.5)),
        ("variance_lnR_theory", variance_lnR_theory(T, cfg.tau)),
        ("p_err_theory", p_err_theory(T, cfg.tau)),
    ]


def _tag(T):
    return ("%.6g" % T).replace(".", "p")


def cmd_ensemble(args):
    cfg, opts = _load_config(args)
    n = args.n if args.n is not None else opts.get("n")
    if n is None:
        raise io.ConfigError("ensemble.n", "missing (give --n)")
    if n < 1:
        raise io.ConfigError("ensemble.n", "must be at least 1")
    bins = args.bins if args.bins is not None else opts.get("bins", DEFAULT_BINS)
    workers = args.workers if args.workers is not None else opts.get("workers", 1)
    rng = opts.get("range")
    durations = args.duration or [cfg.duration]
    os.makedirs(args.out, exist_ok=True)
    written = []
    for T in durations:
        c = cfg.with_(duration=T)
        ens = run_ensemble(c, n, workers=workers, estimator=args.estimator)
        suffix = "" if len(durations) == 1 else f"_T{_tag(T)}"
        paths = {
            k: os.path.join(args.out, f"{k}{suffix}.txt") for k in ("histogram", "summary", "samples")
        }
        hist = histogram(ens.lnR, bins=bins, range=rng, density=True)
        io._write_text(paths["histogram"], io.format_histogram(hist))
        io._write_text(paths["summary"], io.format_summary(ensemble_summary(ens, bins)))
        io._write_text(paths["samples"], io.format_samples(ens.lnR))
        written += list(paths.values())
    run_opts = {"n": n, "bins": bins}
    if rng is not None:
        run_opts["range"] = rng
    manifest = io.build_manifest(
        "ensemble", cfg, written, opts=run_opts,
        extra={"durations": [float(T) for T in durations], "workers": workers,
               "estimator": args.estimator},
    )
    io.write_manifest(os.path.join(args.out, "manifest.json"), manifest)
    return EXIT_OK


def _parse_state(text):
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise InvalidInputError(f"cannot parse state {text!r}") from None
    if len(vals) != 3 or not all(math.isfinite(v) for v in vals):
        raise InvalidInputError("state must be a Bloch triple x,y,z")
    st = QubitState.from_bloch(*vals)
    if not st.is_pure():
        raise InvalidStateError("janus needs a pure initial state (|v| = 1)")
    return st


def cmd_janus(args):
    seq = io.read_sequence(args.sequence)
    if not seq:
        raise InvalidInputError("sequence file contains no operators")
    psi = _parse_state(args.state)
    back = janus_backward_sequence(seq)
    lines = [io.format_sequence(back).rstrip("\n")]
    lines.append(io.format_summary([
        ("n_operators", len(seq)),
        ("restoration_deficit", janus_restoration_deficit(seq, back, psi)),
        ("lnR", discrete_log_ratio(seq, back, psi)),
    ]))
    sys.stdout.write("\n".join(lines))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="qubitarrow", description="Arrow of time for a monitored qubit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate one trajectory and write its movie")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--index", type=int, default=0, help="trajectory stream index")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("reverse", help="play a movie backwards")
    s.add_argument("movie")
    s.add_argument("--convention", choices=("passive", "active"), default="passive")
    s.add_argument("--out")
    s.set_defaults(func=cmd_reverse)

    s = sub.add_parser("analyze", help="ln R, gamma, residual and verdict for a movie")
    s.add_argument("movie")
    s.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("ensemble", help="Monte Carlo histogram and summary of ln R")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--n", type=int)
    s.add_argument("--bins", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--dt", type=float)
    s.add_argument("--workers", type=int)
    s.add_argument("--duration", type=float, nargs="+", help="one or more run lengths T")
    s.add_argument("--estimator", choices=("exact", "midpoint"), default="exact")
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("janus", help="backward Janus sequence of a Kraus sequence file")
    s.add_argument("sequence")
    s.add_argument("--state", default="0,0,1", help="pure initial Bloch vector x,y,z")
    s.set_defaults(func=cmd_janus)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, InvalidParametersError, InvalidStateError, NotInvertibleError, OSError) as exc:
        print(f"qubitarrow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, ZeroProbabilityError, DomainError, ArithmeticError) as exc:
        print(f"qubitarrow {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
