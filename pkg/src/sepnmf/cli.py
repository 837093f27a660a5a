"""Command-line interface.

Exit codes:
    0  success
    1  unexpected internal error
    2  usage error (bad or missing flags)
    3  invalid input or unparsable file
    4  LP failure or LP too large for the backend
    5  solver finished without identifying a factorization
    6  thread-count equivalence violated
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time

import numpy as np

from . import __version__
from . import io as sio
from .agkm import AgkmConfig, agkm_factor
from .cleaning import CleanConfig
from .errors import (
    ConcurrencyError,
    DegenerateSolutionError,
    InvalidInputError,
    LPFailure,
    ScaleLimitError,
)
from .exact import MODES, PhiLpConfig, factor_exact
from .harness import (
    ALGORITHMS,
    METRICS,
    GridSpec,
    performance_profile,
    profile_svg,
    read_records,
    run_grid,
    speedup_run,
    write_profile_csv,
    write_records,
)
from .hottopixx import DIAG_SIGNS, PROJECTIONS, SgdConfig, hottopixx
from .synth import generate

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_INPUT, EXIT_LP, EXIT_DEGENERATE, EXIT_CONCURRENCY = range(7)
MANIFEST = "manifest.json"

log = logging.getLogger("sepnmf")


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers, got {text!r}")


def build_parser():
    p = argparse.ArgumentParser(prog="sepnmf", description="Separable NMF by factorization localization.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic separable instance")
    g.add_argument("--f", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--r", type=int, required=True)
    g.add_argument("--d", type=int, default=0)
    g.add_argument("--eta", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    fa = sub.add_parser("factor", help="factor a matrix or instance directory")
    fa.add_argument("input", metavar="IN", help="instance directory or .mtx/.csv matrix")
    fa.add_argument("--algo", choices=("hottopixx", "lp", "agkm"), required=True)
    fa.add_argument("--r", type=int, help="rank (defaults to the instance's r)")
    fa.add_argument("--tau", type=float, help="lp: residual budget (defaults to 2*epsilon of an instance)")
    fa.add_argument("--mode", choices=MODES, help="lp: diagonal selection rule")
    fa.add_argument("--alpha", type=float, help="agkm: robustness margin (required)")
    fa.add_argument("--eps", type=float, help="agkm: noise level (required)")
    fa.add_argument("--epochs", type=int, default=50)
    fa.add_argument("--sp", type=float, default=0.1, help="hottopixx primal step")
    fa.add_argument("--sd", type=float, default=0.01, help="hottopixx dual step")
    fa.add_argument("--projection", choices=PROJECTIONS, default="full-squish")
    fa.add_argument("--projection-period", type=int)
    fa.add_argument("--diag-sign", choices=DIAG_SIGNS, default="lagrangian")
    fa.add_argument("--threads", type=int, default=1)
    fa.add_argument("--block-size", type=int, default=256)
    fa.add_argument("--clean", choices=("exact-lp", "sgd"), default="exact-lp")
    fa.add_argument("--clean-epochs", type=int, default=2)
    fa.add_argument("--normalize", action="store_true", help="scale rows of a raw matrix to unit sum")
    fa.add_argument("--format", choices=sio.FORMATS, help="override format detection")
    fa.add_argument("--seed", type=int, default=0)
    fa.add_argument("--out", required=True)

    b = sub.add_parser("bench", help="run algorithms over a synthetic grid")
    b.add_argument("--grid", required=True, help="JSON file with lists f, n, r, d, eta")
    b.add_argument("--algos", default="lp,hottopixx,agkm")
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", required=True)

    pr = sub.add_parser("profile", help="performance profiles from a records CSV")
    pr.add_argument("--records", required=True)
    pr.add_argument("--metric", choices=sorted(METRICS), default="ionorm")
    pr.add_argument("--out", required=True)

    s = sub.add_parser("speedup", help="thread scaling of hottopixx training")
    s.add_argument("--instance", required=True)
    s.add_argument("--threads", type=_int_list, default=[1, 2, 4, 8])
    s.add_argument("--r", type=int)
    s.add_argument("--epochs", type=int, default=1)
    s.add_argument("--block-size", type=int, default=256)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    rr = sub.add_parser("rerun", help="repeat the run recorded in a manifest")
    rr.add_argument("manifest")
    rr.add_argument("--out", help="write outputs here instead of the recorded directory")
    return p


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, default=_json_default, allow_nan=True)
        fh.write("\n")


def write_manifest(out, argv, args, inputs, outputs, started):
    config = {k: v for k, v in vars(args).items() if k not in ("func",)}
    manifest = {
        "command": args.command,
        "argv": list(argv),
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": {p: sio.file_sha256(p) for p in inputs},
        "outputs": sorted(outputs),
        "wall_time": time.perf_counter() - started,
    }
    _dump(os.path.join(out, MANIFEST), manifest)


def _load_input(args):
    """Returns ``(X, instance or None, checksummed input files)``."""
    path = args.input
    if os.path.isdir(path):
        inst = sio.read_instance(path)
        files = [os.path.join(path, n) for n in ("X.mtx", "Y.mtx", "meta.json")]
        return inst.X, inst, files
    X, report = sio.ingest(path, args.format, args.normalize)
    if report.zero_rows:
        log.warning("%d zero row(s) in %s", len(report.zero_rows), path)
    return X, None, [path]


def cmd_generate(args):
    inst = generate(args.f, args.n, args.r, args.d, args.eta, args.seed)
    sio.write_instance(args.out, inst)
    return ["X.mtx", "Y.mtx", "meta.json"], [], {}


def cmd_factor(args):
    if args.algo == "agkm" and (args.alpha is None or args.eps is None):
        raise UsageError("--algo agkm needs both --alpha and --eps; AGKM requires the "
                         "robustness margin and noise level in advance")
    X, inst, inputs = _load_input(args)
    r = args.r if args.r is not None else (inst.rank if inst is not None else None)
    if r is None and args.algo != "agkm":
        raise UsageError("--r is required when the input is not an instance directory")
    clean = CleanConfig(method=args.clean, epochs=args.clean_epochs, seed=args.seed)
    diagnostics_lines = []
    if args.algo == "lp":
        tau = args.tau
        if tau is None:
            if inst is None:
                raise UsageError("--tau is required for --algo lp on a raw matrix")
            tau = 2 * inst.epsilon
        result = factor_exact(X, PhiLpConfig(tau=tau, rank=r, mode=args.mode, seed=args.seed), clean)
    elif args.algo == "agkm":
        result = agkm_factor(X, AgkmConfig(alpha=args.alpha, epsilon=args.eps, rank=r), clean)
    else:
        cfg = SgdConfig(rank=r, epochs=args.epochs, primal_step=args.sp, dual_step=args.sd,
                        projection=args.projection, projection_period=args.projection_period,
                        diag_sign=args.diag_sign, seed=args.seed, threads=args.threads,
                        block_size=args.block_size, clean=clean)
        result = hottopixx(X, cfg, on_epoch=lambda rec: diagnostics_lines.append(rec.to_json()))
    os.makedirs(args.out, exist_ok=True)
    sio.write_dense(os.path.join(args.out, "F.mtx"), result.F)
    sio.write_dense(os.path.join(args.out, "W.mtx"), result.W)
    rep = result.report
    metrics = {
        "algorithm": result.algorithm,
        "status": result.status,
        "hott": result.hott.tolist(),
        "rank": result.rank,
        "inf_one_error": rep.inf_one_error,
        "rmse": rep.rmse,
        "wall_time": rep.wall_time,
    }
    if inst is not None:
        metrics["hott_recall"] = inst.hott_recall(result.hott)
        metrics["exact_recovery"] = inst.exact_recovery(result.hott)
    outputs = ["F.mtx", "W.mtx", "metrics.json"]
    _dump(os.path.join(args.out, "metrics.json"), metrics)
    if diagnostics_lines:
        with open(os.path.join(args.out, "epochs.jsonl"), "w") as fh:
            fh.write("\n".join(diagnostics_lines) + "\n")
        outputs.append("epochs.jsonl")
    return outputs, inputs, metrics


def cmd_bench(args):
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"unknown algorithm(s) {bad}; choose from {list(ALGORITHMS)}")
    grid = GridSpec.load(args.grid)
    records = run_grid(grid, algos, args.reps, args.seed, workers=args.workers)
    os.makedirs(args.out, exist_ok=True)
    write_records(os.path.join(args.out, "records.csv"), records)
    return ["records.csv"], [args.grid], {}


def cmd_profile(args):
    records = read_records(args.records)
    curves = performance_profile(records, args.metric)
    os.makedirs(args.out, exist_ok=True)
    stem = f"profile_{args.metric}"
    write_profile_csv(os.path.join(args.out, stem + ".csv"), curves)
    with open(os.path.join(args.out, stem + ".svg"), "w") as fh:
        fh.write(profile_svg(curves, title=f"performance profile ({args.metric})"))
    return [stem + ".csv", stem + ".svg"], [args.records], {}


def cmd_speedup(args):
    inst = sio.read_instance(args.instance)
    r = args.r or inst.rank
    cfg = SgdConfig(rank=r, epochs=args.epochs, seed=args.seed, block_size=args.block_size)
    rows, hott = speedup_run(inst.X, args.threads, cfg)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "speedup.csv"), "w") as fh:
        fh.write("threads,wall_time,speedup\n")
        for row in rows:
            fh.write(f"{row.threads},{row.wall_time:.6f},{row.speedup:.6f}\n")
    inputs = [os.path.join(args.instance, "X.mtx")]
    return ["speedup.csv"], inputs, {"hott": hott.tolist()}


COMMANDS = {
    "generate": cmd_generate,
    "factor": cmd_factor,
    "bench": cmd_bench,
    "profile": cmd_profile,
    "speedup": cmd_speedup,
}


def _rerun(args, parser):
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    argv = list(manifest["argv"])
    if args.out:
        if "--out" not in argv:
            raise UsageError("manifest has no --out to replace")
        argv[argv.index("--out") + 1] = args.out
    return main(argv)


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.perf_counter()
    try:
        if args.command == "rerun":
            return _rerun(args, parser)
        outputs, inputs, _ = COMMANDS[args.command](args)
        os.makedirs(args.out, exist_ok=True)
        write_manifest(args.out, argv, args, inputs, outputs + [MANIFEST], started)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"sepnmf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ScaleLimitError, LPFailure) as exc:
        print(f"sepnmf: LP error: {exc}", file=sys.stderr)
        return EXIT_LP
    except DegenerateSolutionError as exc:
        print(f"sepnmf: no factorization found: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConcurrencyError as exc:
        print(f"sepnmf: {exc}", file=sys.stderr)
        return EXIT_CONCURRENCY
    except (InvalidInputError, OSError) as exc:
        print(f"sepnmf: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"sepnmf: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
