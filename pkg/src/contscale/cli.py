"""Command-line interface: generate, embed, detect, network, evaluate, rerun."""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import io, set_threads
from .embedding import EmbeddingParams, auto_embed, select_dimension_fnn, select_lag_mutual_information
from .errors import ContScaleError
from .generators import (
    LorenzPairSpec,
    generate_coupled_lorenz,
    generate_logistic_network,
    logistic_pair_spec,
    random_lorenz_initial,
    ring_spec,
    tree_spec,
)
from .inference import DetectionConfig, detect_pair, embed_series, infer_network, roc_auroc
from .scaling import NeighborhoodSpec
from .significance import SurrogateConfig

log = logging.getLogger("contscale")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    p.add_argument("--threads", type=int, help="worker threads for the numeric kernels")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _inputs() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", required=True, help="comma-separated file, one series per column")
    p.add_argument("--cols", help="comma-separated column names to use (default: all)")
    p.add_argument("--index-col", help="column to ignore, e.g. a time stamp")
    p.add_argument("--header", choices=["auto", "yes", "no"], default="auto")
    return p


def _embedding() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--embed-dim", type=int, help="embedding dimension (default: false nearest neighbours)")
    p.add_argument("--embed-lag", type=int, help="embedding lag (default: mutual information)")
    p.add_argument("--max-lag", type=int, default=20)
    p.add_argument("--max-dim", type=int, default=10)
    return p


def _detection() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--eps-count", type=int, default=33)
    p.add_argument("--eps-shrink", type=float, default=0.001)
    p.add_argument("--theiler", type=int, help="Theiler window (default: one embedding window)")
    p.add_argument("--segments", type=int, default=25)
    p.add_argument("--replicates", type=int, default=20)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--dd", action="store_true", help="also require the predecessor states to be close")
    p.add_argument("--curves", help="directory for per-direction curve CSVs")
    p.add_argument("--out", help="results JSON (default: stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contscale", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    common, inputs, emb, det = _common(), _inputs(), _embedding(), _detection()

    g = sub.add_parser("generate", parents=[common], help="write a benchmark system to CSV")
    g.add_argument("system", choices=["logistic-pair", "ring", "tree", "lorenz"])
    g.add_argument("--out", required=True)
    g.add_argument("--truth-out", help="also write the true edges")
    g.add_argument("--length", type=int, help="samples (default 5000 maps, 10000 flows)")
    g.add_argument("--transient", type=float, help="discarded steps / time (default 1000 / 100)")
    g.add_argument("--mu12", type=float, default=0.0)
    g.add_argument("--mu21", type=float, default=0.0)
    g.add_argument("--strength", type=float, default=0.2, help="network coupling")
    g.add_argument("--rate", type=float, default=3.8, help="network growth rate")
    g.add_argument("--dt", type=float, default=1e-3)
    g.add_argument("--omega", type=float, default=0.05, help="flow sampling interval")
    g.add_argument("--shift", type=float, default=0.0, help="flow time shift")
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("embed", parents=[common, inputs, emb], help="select embedding parameters")
    e.add_argument("--out", help="JSON output (default: stdout)")
    e.set_defaults(func=cmd_embed)

    d = sub.add_parser("detect", parents=[common, inputs, emb, det], help="test both directions of one pair")
    d.set_defaults(func=cmd_detect)

    n = sub.add_parser("network", parents=[common, inputs, emb, det], help="test every ordered pair")
    n.add_argument("--truth", help="true edges, one 'src->dst' per line")
    n.set_defaults(func=cmd_network)

    v = sub.add_parser("evaluate", parents=[common], help="ROC of scores against true edges")
    v.add_argument("--scores", required=True, help="network results JSON or cause,effect,score CSV")
    v.add_argument("--truth", required=True)
    v.add_argument("--out", help="JSON output")
    v.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("rerun", help="repeat a run from the manifest in its results file")
    r.add_argument("results")
    r.add_argument("--out", help="where to write the repeated results (default: stdout)")
    r.add_argument("--threads", type=int)
    r.set_defaults(func=cmd_rerun)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    path = getattr(args, "config", None)
    if not path:
        return args
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in io.read_config_file(path).items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            subparser.error(f"{path}: unknown setting {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
            if raw.lower() not in ("0", "1", "true", "false", "yes", "no", "on", "off"):
                subparser.error(f"{path}: {key} expects a boolean, got {raw!r}")
        else:
            try:
                value = action.type(raw) if action.type else raw
            except ValueError:
                subparser.error(f"{path}: bad value for {key}: {raw!r}")
            if action.choices and value not in action.choices:
                subparser.error(f"{path}: {key} must be one of {list(action.choices)}")
        defaults[key] = value
    # required flags satisfied by the file
    for a in subparser._actions:
        if a.dest in defaults:
            a.required = False
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


# ------------------------------------------------------------- helpers


def _config(args) -> DetectionConfig:
    if (args.embed_dim is None) != (args.embed_lag is None):
        raise UsageError("--embed-dim and --embed-lag must be given together")
    try:
        embedding = None if args.embed_dim is None else EmbeddingParams(args.embed_dim, args.embed_lag)
        return DetectionConfig(
            embedding=embedding,
            shrink=args.eps_shrink,
            n_eps=args.eps_count,
            neighborhood=NeighborhoodSpec(args.theiler, args.dd),
            surrogates=SurrogateConfig(args.segments, args.replicates, args.seed),
            alpha=args.alpha,
            max_lag=args.max_lag,
            max_dim=args.max_dim,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _options(args) -> dict:
    opts = {k: v for k, v in vars(args).items() if k not in ("func", "config", "verbose", "threads")}
    for key in ("input", "truth", "scores"):
        if opts.get(key):
            opts[key] = os.path.abspath(opts[key])
    return opts


def _read_input(args, manifest: io.RunManifest | None):
    cols = [c.strip() for c in args.cols.split(",")] if args.cols else None
    header = {"auto": None, "yes": True, "no": False}[args.header]
    series = io.read_series_csv(args.input, cols, args.index_col, header)
    if manifest is not None:
        manifest.add_input(args.input, [s.label for s in series], len(series[0]))
    return series


def _summary(r) -> str:
    verdict = "significant" if r.significant else "not significant"
    return f"{r.cause} -> {r.effect}: slope {r.slope:.6g}  p {r.p_value:.3g}  {verdict}"


def _dump_curves(args, results) -> None:
    if not args.curves:
        return
    out = Path(args.curves)
    out.mkdir(parents=True, exist_ok=True)
    for r in results:
        io.write_curve_dump(out / f"{r.cause}_to_{r.effect}.csv", r)


def _embeddings(series, cfg) -> dict:
    out = {}
    for s in series:
        try:
            p = embed_series(s, cfg).params
            out[s.label] = {"dimension": p.dimension, "lag": p.lag}
        except ContScaleError as exc:
            out[s.label] = {"error": str(exc)}
    return out


def _stamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ------------------------------------------------------------ commands


def cmd_generate(args) -> dict | None:
    seed = args.seed
    if args.system == "lorenz":
        spec = LorenzPairSpec(
            mu12=args.mu12,
            mu21=args.mu21,
            dt=args.dt,
            omega=args.omega,
            shift=args.shift,
            n_samples=args.length or 10_000,
            transient=100.0 if args.transient is None else args.transient,
            initial=random_lorenz_initial(seed),
        )
        series = list(generate_coupled_lorenz(spec))
        truth = {(a, b) for a, b, mu in (("y1", "y2", args.mu21), ("y2", "y1", args.mu12)) if mu != 0}
    else:
        kw = dict(length=args.length or 5000, transient=1000 if args.transient is None else int(args.transient))
        if args.system == "logistic-pair":
            spec = logistic_pair_spec(args.mu12, args.mu21, **kw)
        elif args.system == "ring":
            spec = ring_spec(strength=args.strength, rate=args.rate, **kw)
        else:
            spec = tree_spec(strength=args.strength, rate=args.rate, **kw)
        series = generate_logistic_network(spec, seed=seed)
        truth = spec.true_edges()
    io.write_series_csv(args.out, series)
    if args.truth_out:
        io.write_truth(args.truth_out, truth)
    print(f"wrote {len(series)} series x {len(series[0])} samples to {args.out}")
    return None


def cmd_embed(args) -> dict:
    manifest = io.RunManifest("embed", _options(args))
    series = _read_input(args, manifest)
    report = {}
    for s in series:
        try:
            if args.embed_lag is None:
                lag_sel = select_lag_mutual_information(s, args.max_lag)
                lag = lag_sel.lag
                lag_info = {"fallback": lag_sel.fallback, "mutual_information": lag_sel.mutual_information.tolist()}
            else:
                lag, lag_info = args.embed_lag, None
            if args.embed_dim is None:
                dim_sel = select_dimension_fnn(s, lag, args.max_dim)
                dim = dim_sel.dimension
                dim_info = {"fallback": dim_sel.fallback, "fnn_fraction": dim_sel.fnn_fraction.tolist()}
            else:
                dim, dim_info = args.embed_dim, None
        except ContScaleError as exc:
            raise type(exc)(f"[{s.label}] {exc}") from exc
        report[s.label] = {"lag": lag, "dimension": dim, "lag_selection": lag_info, "dimension_selection": dim_info}
        flags = [n for n, info in (("lag", lag_info), ("dimension", dim_info)) if info and info["fallback"]]
        note = f"  (fallback: {', '.join(flags)})" if flags else ""
        print(f"{s.label}: dimension {dim}  lag {lag}{note}", file=sys.stderr)
    return {"command": "embed", "embedding": report, "manifest": manifest.to_dict()}


def cmd_detect(args) -> dict:
    cfg = _config(args)
    manifest = io.RunManifest("detect", _options(args), cfg.to_dict())
    series = _read_input(args, manifest)
    if len(series) != 2:
        raise UsageError(f"detect needs exactly two columns, got {[s.label for s in series]}; use --cols")
    t0 = time.perf_counter()
    started = _stamp()
    results = detect_pair(series[0], series[1], cfg)
    manifest.timing = {"started": started, "seconds": time.perf_counter() - t0}
    for r in results:
        print(_summary(r), file=sys.stderr)
    _dump_curves(args, results)
    return {
        "command": "detect",
        "embedding": _embeddings(series, cfg),
        "results": [io.result_record(r) for r in results],
        "manifest": manifest.to_dict(),
    }


def cmd_network(args) -> dict:
    cfg = _config(args)
    manifest = io.RunManifest("network", _options(args), cfg.to_dict())
    series = _read_input(args, manifest)
    truth = io.read_truth(args.truth) if args.truth else None
    t0 = time.perf_counter()
    started = _stamp()
    net = infer_network(series, cfg)
    manifest.timing = {"started": started, "seconds": time.perf_counter() - t0}
    ordered = [net.results[k] for k in sorted(net.results)]
    for r in ordered:
        print(_summary(r), file=sys.stderr)
    for (a, b), msg in sorted(net.errors.items()):
        print(f"{a} -> {b}: failed: {msg}", file=sys.stderr)
    _dump_curves(args, ordered)
    payload = {
        "command": "network",
        "labels": list(net.labels),
        "embedding": _embeddings(series, cfg),
        "results": [io.result_record(r) for r in ordered],
        "errors": [{"cause": a, "effect": b, "message": m} for (a, b), m in sorted(net.errors.items())],
    }
    if truth is not None:
        roc = roc_auroc(net.scores(), truth)
        print(f"AUROC {roc.auroc:.4f} ({len(truth)} true of {len(net.scores())} directed pairs)")
        payload["auroc"] = roc.auroc
        payload["roc"] = {"fpr": roc.fpr.tolist(), "tpr": roc.tpr.tolist()}
    payload["manifest"] = manifest.to_dict()
    return payload


def _load_scores(path) -> dict:
    if str(path).endswith(".json"):
        data = io.read_json(path)
        scores = {(r["cause"], r["effect"]): r["slope"] for r in data.get("results", [])}
        scores.update({(e["cause"], e["effect"]): -np.inf for e in data.get("errors", [])})
        return scores
    return io.read_scores_csv(path)


def cmd_evaluate(args) -> dict:
    scores = _load_scores(args.scores)
    truth = io.read_truth(args.truth)
    roc = roc_auroc(scores, truth)
    print(f"AUROC {roc.auroc:.4f} ({len(truth)} true of {len(scores)} directed pairs)")
    if not args.out:
        return None
    return {
        "command": "evaluate",
        "auroc": roc.auroc,
        "roc": {"fpr": roc.fpr.tolist(), "tpr": roc.tpr.tolist()},
        "manifest": io.RunManifest("evaluate", _options(args)).to_dict(),
    }


def _strip_volatile(payload: dict) -> dict:
    out = dict(payload)
    out.pop("manifest", None)
    return out


def cmd_rerun(args) -> dict:
    original = io.read_json(args.results)
    if "manifest" not in original:
        raise UsageError(f"{args.results} has no manifest")
    manifest = io.RunManifest.from_dict(original["manifest"])
    for item in manifest.inputs:
        if io.file_digest(item["path"]) != item["sha256"]:
            raise ContScaleError(f"input {item['path']} changed since the original run")
    opts = dict(manifest.options)
    opts["out"] = args.out
    func = COMMANDS.get(manifest.command)
    if func is None:
        raise UsageError(f"cannot rerun command {manifest.command!r}")
    payload = func(argparse.Namespace(**opts))
    same = _strip_volatile(payload) == _strip_volatile(original)
    print("rerun matches original results" if same else "rerun DIFFERS from original results", file=sys.stderr)
    payload["rerun_matches"] = same
    return payload


COMMANDS = {"embed": cmd_embed, "detect": cmd_detect, "network": cmd_network, "evaluate": cmd_evaluate}


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config_file(parser, argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "threads", None):
            try:
                set_threads(args.threads)
            except ValueError as exc:
                raise UsageError(f"--threads: {exc}") from exc
        payload = args.func(args)
        if payload is not None:
            io.write_json(getattr(args, "out", None), payload)
        if args.command == "rerun" and payload is not None and not payload["rerun_matches"]:
            return 1
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"contscale: error: {exc}", file=sys.stderr)
        return 2
    except (ContScaleError, OSError, ValueError) as exc:
        print(f"contscale: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
