"""``graphheat`` command line: generate, fit, eval, sweep.

Exit codes: 0 ok, 2 usage, 3 fit failure, 4 I/O or format error.
Every subcommand accepts ``--config FILE`` with ``key = value`` lines
(keys are long flag names without the leading dashes); explicit flags
override the file.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from graphheat import io
from graphheat.errors import AllRestartsFailed, FormatError, GraphHeatError
from graphheat.em import FitResult
from graphheat.metrics import DEFAULT_EDGE_THRESHOLD, evaluate
from graphheat.model import BETA_PER_TAU2, FistaConfig, FitConfig, ResponsibilityMatrix
from graphheat.sweep import DEFAULT_VALUES, METHODS, SweepConfig, fit_method, run_sweep
from graphheat.synth import SynthSpec, generate

EXIT_OK, EXIT_USAGE, EXIT_FIT, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("graphheat")


class UsageError(Exception):
    pass


def _positive(kind):
    def conv(text):
        v = kind(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
        return v

    return conv


def _nonneg(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return v


def _prob(text):
    v = float(text)
    if not 0 < v <= 1:
        raise argparse.ArgumentTypeError(f"must be in (0, 1], got {text}")
    return v


def _expand_values(tokens, kind):
    """Numbers or inclusive ranges ``start:stop:step``."""
    out = []
    for tok in tokens:
        for part in str(tok).replace(",", " ").split():
            if ":" in part:
                a, b, s = (float(x) for x in part.split(":"))
                n = int(round((b - a) / s)) + 1
                out.extend(kind(round(a + i * s, 10)) for i in range(n))
            else:
                out.append(kind(part))
    return tuple(out)


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        cfg[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    return cfg


def _add_fit_flags(p, restarts_default=5):
    p.add_argument("--beta", type=_nonneg, default=None,
                   help="L1 weight on edge weights (default %g * tau^2)" % BETA_PER_TAU2)
    p.add_argument("--restarts", type=_positive(int), default=restarts_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--em-max-iters", type=_positive(int), default=200)
    p.add_argument("--em-tol", type=_positive(float), default=1e-6)
    p.add_argument("--fista-max-iters", type=_positive(int), default=FistaConfig().max_iters)
    p.add_argument("--fista-tol", type=_positive(float), default=FistaConfig().tol)
    p.add_argument("--eig-floor", type=_positive(float), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphheat", description=__doc__.splitlines()[0])
    parser.add_argument("--verbose", "-v", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic heat-mixture dataset")
    g.add_argument("--config")
    g.add_argument("--nodes", type=_positive(int), default=20)
    g.add_argument("--edge-prob", type=_prob, default=0.7)
    g.add_argument("--k", type=_positive(int), default=2)
    g.add_argument("--tau", type=_positive(float), default=0.5)
    g.add_argument("--m", type=_positive(int), default=200)
    g.add_argument("--mean-std", type=float, default=float(np.sqrt(0.1)))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--random-counts", action="store_true", help="draw cluster sizes instead of alpha*M")
    g.add_argument("--out-dir", required=True)

    f = sub.add_parser("fit", help="fit a mixture to a signals CSV")
    f.add_argument("--config")
    f.add_argument("--signals", required=True)
    f.add_argument("--timestamps", action="store_true", help="first CSV column holds timestamps")
    f.add_argument("--k", type=_positive(int), required=True)
    f.add_argument("--tau", type=_positive(float), default=0.5)
    f.add_argument("--method", choices=METHODS, default="ghmm")
    f.add_argument("--out-dir", required=True)
    _add_fit_flags(f)

    e = sub.add_parser("eval", help="score a fitted bundle against ground truth")
    e.add_argument("--config")
    e.add_argument("--truth-dir", required=True)
    e.add_argument("--fit-dir", required=True)
    e.add_argument("--edge-threshold", type=float, default=DEFAULT_EDGE_THRESHOLD)
    e.add_argument("--format", choices=("json", "csv"), default="json")

    s = sub.add_parser("sweep", help="run the synthetic benchmark over M or tau")
    s.add_argument("--config")
    s.add_argument("--vary", choices=sorted(DEFAULT_VALUES), default="m")
    s.add_argument("--values", nargs="+", default=None, help="numbers or start:stop:step ranges")
    s.add_argument("--repeats", type=_positive(int), default=20)
    s.add_argument("--methods", nargs="+", choices=METHODS, default=list(METHODS))
    s.add_argument("--m", type=_positive(int), default=200, help="signals per trial when varying tau")
    s.add_argument("--tau", type=_positive(float), default=0.5, help="tau when varying M")
    s.add_argument("--nodes", type=_positive(int), default=20)
    s.add_argument("--edge-prob", type=_prob, default=0.7)
    s.add_argument("--k", type=_positive(int), default=2)
    s.add_argument("--edge-threshold", type=float, default=DEFAULT_EDGE_THRESHOLD)
    s.add_argument("--jobs", type=_positive(int), default=1)
    s.add_argument("--resume", action="store_true")
    s.add_argument("--out", required=True)
    _add_fit_flags(s)
    return parser


def _fit_config(args, K, tau) -> FitConfig:
    return FitConfig(
        K=K,
        tau=tau,
        em_max_iters=args.em_max_iters,
        em_tol=args.em_tol,
        n_restarts=args.restarts,
        seed=args.seed,
        fista=FistaConfig(beta=args.beta, max_iters=args.fista_max_iters, tol=args.fista_tol),
        eig_floor=args.eig_floor,
    )


def cmd_generate(args) -> int:
    spec = SynthSpec(
        tau=args.tau,
        M=args.m,
        n_nodes=args.nodes,
        edge_prob=args.edge_prob,
        K=args.k,
        mean_std=args.mean_std,
        seed=args.seed,
        exact_counts=not args.random_counts,
    )
    X, model = generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    io.write_signals(out / "signals.csv", X)
    io.write_labels(out / "labels.csv", X.labels)
    truth = FitResult(
        model=model,
        responsibilities=ResponsibilityMatrix.from_labels(X.labels, args.k),
        log_likelihood_history=np.zeros(0),
        n_iterations=0,
        converged=True,
        method="truth",
    )
    io.save_result(out, truth)
    log.info("wrote %d x %d signals to %s", X.n_nodes, X.n_signals, out)
    return EXIT_OK


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_fit(args) -> int:
    X = io.read_signals(args.signals, has_timestamps=args.timestamps)
    cfg = _fit_config(args, args.k, args.tau)
    try:
        res = fit_method(args.method, X, cfg)
    except AllRestartsFailed as err:
        print(f"graphheat fit: {err}", file=sys.stderr)
        return EXIT_FIT
    out = Path(args.out_dir)
    io.save_result(out, res)
    _write_rows(
        out / "restarts.csv",
        ["restart", "final_log_likelihood"],
        [[i, io.fmt(v)] for i, v in enumerate(res.restart_log_likelihoods)],
    )
    _write_rows(
        out / "convergence.csv",
        ["iteration", "log_likelihood"],
        [[i + 1, io.fmt(v)] for i, v in enumerate(res.log_likelihood_history)],
    )
    labels = res.labels()
    if X.timestamps is not None:
        rows = [[m, X.timestamps[m], int(k)] for m, k in enumerate(labels)]
        _write_rows(out / "timeline.csv", ["signal", "timestamp", "cluster"], rows)
    else:
        _write_rows(out / "timeline.csv", ["signal", "cluster"], [[m, int(k)] for m, k in enumerate(labels)])
    status = "converged" if res.converged else "not converged"
    log.info("%s fit: %s after %d iterations", args.method, status, res.n_iterations)
    print(json.dumps({"method": res.method, "converged": res.converged, "n_iterations": res.n_iterations,
                      "log_likelihood": res.final_log_likelihood}))
    return EXIT_OK


def _truth_labels(d: Path, res: FitResult) -> np.ndarray:
    p = d / "labels.csv"
    return io.read_labels(p) if p.is_file() else res.labels()


def cmd_eval(args) -> int:
    truth_dir = Path(args.truth_dir)
    truth = io.load_result(truth_dir)
    fitted = io.load_result(args.fit_dir)
    t = _truth_labels(truth_dir, truth)
    p = fitted.labels()
    if t.shape != p.shape:
        raise UsageError(f"truth has {t.size} signals, fit has {p.size}")
    if truth.model.n_components != fitted.model.n_components:
        raise UsageError("truth and fit have different K")
    report = evaluate(t, p, truth.model.graphs, fitted.model.graphs, args.edge_threshold)
    if args.format == "json":
        print(json.dumps(report.as_dict()))
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["cluster", "f_measure", "clustering_nmse_percent", "mean_f_measure"])
        for k, fk in enumerate(report.per_cluster_f_measure):
            w.writerow([k, io.fmt(fk), io.fmt(report.clustering_nmse_percent), io.fmt(report.mean_f_measure)])
    return EXIT_OK


def cmd_sweep(args) -> int:
    kind = int if args.vary == "m" else float
    values = _expand_values(args.values, kind) if args.values else DEFAULT_VALUES[args.vary]
    cfg = SweepConfig(
        vary=args.vary,
        values=values,
        repeats=args.repeats,
        methods=tuple(args.methods),
        M=args.m,
        tau=args.tau,
        n_nodes=args.nodes,
        edge_prob=args.edge_prob,
        K=args.k,
        n_restarts=args.restarts,
        seed=args.seed,
        fista=FistaConfig(beta=args.beta, max_iters=args.fista_max_iters, tol=args.fista_tol),
        em_max_iters=args.em_max_iters,
        em_tol=args.em_tol,
        eig_floor=args.eig_floor,
        edge_threshold=args.edge_threshold,
    )
    n = run_sweep(cfg, args.out, resume=args.resume, jobs=args.jobs)
    log.info("wrote %d rows to %s", n, args.out)
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "fit": cmd_fit, "eval": cmd_eval, "sweep": cmd_sweep}


def _config_argument(argv):
    """``(command, config path)`` found in ``argv`` without a full parse."""
    command = path = None
    it = iter(argv)
    for tok in it:
        if command is None and tok in COMMANDS:
            command = tok
        elif tok == "--config":
            path = next(it, None)
        elif tok.startswith("--config="):
            path = tok.split("=", 1)[1]
    return command, path


def _apply_config(parser, argv):
    """Parse ``argv`` with defaults taken from ``--config`` when given."""
    argv = list(sys.argv[1:] if argv is None else argv)
    command, path = _config_argument(argv)
    if command is None or path is None:
        return parser.parse_args(argv)
    subparser = parser._subparsers._group_actions[0].choices[command]
    known = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, text in read_config(path).items():
        if key not in known or key in ("config", "help"):
            raise UsageError(f"unknown config key {key!r} for '{command}'")
        action = known[key]
        if action.nargs in ("+", "*"):
            defaults[key] = [action.type(v) if action.type else v for v in text.split()]
        elif action.nargs == 0:
            defaults[key] = text.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(text) if action.type else text
        action.required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code) if exc.code is not None else EXIT_OK
    except (UsageError, ValueError, argparse.ArgumentTypeError) as err:
        print(f"graphheat: bad config: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"graphheat: {err}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as err:
        print(f"graphheat {args.command}: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as err:
        print(f"graphheat {args.command}: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"graphheat {args.command}: {err}", file=sys.stderr)
        return EXIT_USAGE
    except GraphHeatError as err:
        print(f"graphheat {args.command}: {err}", file=sys.stderr)
        return EXIT_FIT
    except KeyboardInterrupt:
        print("graphheat: interrupted; partial results kept", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
