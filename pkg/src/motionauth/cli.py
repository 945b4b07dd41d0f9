"""``motionauth`` command-line entry point.

Exit codes: 0 success, 1 usage, 2 configuration, 3 data, 4 numeric failure.
Artifacts go under ``--out`` (default ``$MOTIONAUTH_OUT`` or ``./motionauth-out``);
every command writes ``manifests/<command>.json`` and appends to ``run.log``.
"""

import argparse
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .authenticator import (
    NO_FORECAST,
    WITH_FORECAST,
    AuthModel,
    read_scores,
    score_windows,
    train_classifier,
    write_scores,
)
from .config import (
    RunConfig,
    classifier_config,
    forecaster_config,
    forecaster_settings,
    load_config,
    loss_weights,
    sweep_config,
)
from .data import WindowSpec, build_split, generate_synthetic_dataset, load_sessions, save_sessions
from .errors import ConfigurationError, DataError, MotionAuthError, NonFiniteError
from .eval import EerSummary, SweepGrid, compute_eer, parse_window_table, write_window_table
from .eval.bench import LATENCY_CEILING_MS, kernel_benchmark, timing_benchmark
from .eval.report import emit_report, write_overlap_series
from .eval.sweep import run_overlap_sweep, run_sweep, sweep_manifest
from .forecaster import ForecasterModel, ForecastSpec, evaluate_forecaster_mse, fit_forecaster

OUT_ENV = "MOTIONAUTH_OUT"
DEFAULT_OUT = "motionauth-out"

log = logging.getLogger("motionauth")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# flag -> config key, for flags that simply override a config value
_FLAG_KEYS = {
    "data": "data_root", "users": "synthetic_users", "variant": "variant", "mode": "mode",
    "window_size": "window_size", "horizon": "horizon", "overlap": "l_overlap", "seed": "seed",
    "workers": "workers", "epochs": None, "scope": "forecaster_scope",
}


def build_parser():
    p = _Parser(prog="motionauth", description="Forecast-then-authenticate motion biometrics.")
    p.add_argument("--version", action="version", version=f"motionauth {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
        sp.add_argument("--print-config", action="store_true", help="print the effective config and exit")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        sp.add_argument("--seed", type=int)
        sp.add_argument("-v", "--verbose", action="store_true")
        return sp

    def data_flags(sp):
        sp.add_argument("--data", help="dataset root; omitted = synthetic corpus from the config")
        sp.add_argument("--variant", choices=["fcn", "tf"])
        sp.add_argument("--mode", choices=[NO_FORECAST, WITH_FORECAST])
        sp.add_argument("--window-size", type=int)
        sp.add_argument("--horizon", type=int)
        sp.add_argument("--overlap", type=int)
        sp.add_argument("--epochs", type=int, help="epochs for both forecaster and classifier")
        return sp

    sp = common(sub.add_parser("synth", help="write a synthetic corpus"))
    sp.add_argument("--users", type=int)
    sp.add_argument("--sessions", type=int, default=10)

    sp = common(sub.add_parser("validate-data", help="check a corpus against the session schema"))
    sp.add_argument("--data", required=True)

    sp = data_flags(common(sub.add_parser("train-forecaster", help="train forecaster(s)")))
    sp.add_argument("--user", action="append", help="user id (repeatable; default all)")
    sp.add_argument("--scope", choices=["per_user", "global"])

    sp = common(sub.add_parser("train-auth", help="train one user's classifier"))
    data_flags(sp)
    sp.add_argument("--user", required=True)
    sp.add_argument("--forecaster", help="forecaster checkpoint for with_forecast mode")

    sp = common(sub.add_parser("eval", help="score day-2 windows, or summarize a scores file"))
    data_flags(sp)
    sp.add_argument("--auth", action="append", default=[], help="authenticator checkpoint (repeatable)")
    sp.add_argument("--forecaster", help="forecaster checkpoint for with_forecast models")
    sp.add_argument("--scores", help="existing scores CSV to summarize")

    sp = common(sub.add_parser("sweep", help="run a window-size x horizon sweep"))
    data_flags(sp)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--overlap-sweep", action="store_true",
                    help="also sweep overlap lengths at --window-size/--horizon")

    sp = common(sub.add_parser("bench", help="latency and kernel benchmarks"))
    data_flags(sp)
    sp.add_argument("--repetitions", type=int)

    sp = common(sub.add_parser("report", help="collect sweep outputs into tables"))
    sp.add_argument("inputs", nargs="+", help="sweep output directories")
    sp.add_argument("--published", action="store_true", help="include published reduction statistics")
    return p


def resolve_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        cfg.set(key.strip(), value.strip())
    for flag, key in _FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if flag == "epochs":
            cfg.forecaster_epochs = cfg.classifier_epochs = value
        elif flag == "users" and args.command != "synth":
            continue
        else:
            setattr(cfg, key, value)
    if getattr(args, "out", None):
        cfg.out = args.out
    if cfg.out is None:
        cfg.out = os.environ.get(OUT_ENV, DEFAULT_OUT)
    return cfg.validate()


def load_corpus(cfg):
    if cfg.data_root:
        return load_sessions(cfg.data_root)
    return generate_synthetic_dataset(cfg.synthetic_users, seed=cfg.synthetic_seed)


def _write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _manifest(cfg, command, extra=None):
    return {
        "command": command,
        "tool_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": kernels.BACKEND,
        "config_hash": cfg.digest(),
        "seed": cfg.seed,
        "config": cfg.to_text(),
        **(extra or {}),
    }


def _log_line(out, text):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "run.log", "a") as fh:
        fh.write(f"{time.strftime('%Y-%m-%dT%H:%M:%S')} {text}\n")


# ------------------------------------------------------------------ commands
def cmd_synth(args, cfg):
    out = Path(cfg.out)
    sessions = generate_synthetic_dataset(cfg.synthetic_users, seed=cfg.seed, n_sessions=args.sessions)
    save_sessions(sessions, out, extra_manifest={"generator": "synthetic", "seed": str(cfg.seed)})
    print(f"wrote {len(sessions)} sessions for {cfg.synthetic_users} users to {out}")
    return {"sessions": len(sessions)}


def cmd_validate(args, cfg):
    sessions = load_sessions(args.data)
    users = sorted({s.user_id for s in sessions})
    print(f"ok: {len(sessions)} sessions, {len(users)} users")
    return {"sessions": len(sessions), "users": len(users)}


def _forecast_spec(cfg):
    return ForecastSpec.make(cfg.window_size, cfg.horizon, cfg.l_overlap)


def _split(sessions, cfg, user):
    return build_split(sessions, WindowSpec(cfg.window_size, cfg.stride), user, cfg.validation_fraction, cfg.seed)


def _epoch_logger(tag):
    def report(epoch, loss, val):
        log.info("%s epoch %d loss %.6f val %s", tag, epoch, loss, "n/a" if val is None else f"{val:.6f}")
    return report


def cmd_train_forecaster(args, cfg):
    sessions = load_corpus(cfg)
    users = args.user or sorted({s.user_id for s in sessions})
    spec = _forecast_spec(cfg)
    settings = forecaster_settings(cfg)
    out = Path(cfg.out)
    written = {}
    splits = {u: _split(sessions, cfg, u) for u in users}
    groups = [("global", users)] if cfg.forecaster_scope == "global" else [(u, [u]) for u in users]
    for name, members in groups:
        model = ForecasterModel(forecaster_config(cfg), seed=cfg.seed)
        train = [w for u in members for w in splits[u].train]
        val = [w for u in members for w in splits[u].validation]
        fit_forecaster(model, train, val, spec, settings, _epoch_logger(f"forecaster[{name}]"))
        test = [w for u in members for w in splits[u].test if w.label == 1]
        mse = evaluate_forecaster_mse(model, test, spec)
        path = out / f"forecaster_{name}_ws{spec.l_window}_h{spec.l_forecasting}.npz"
        model.save(path, {"users": ",".join(members), "test_mse": mse, "seed": cfg.seed})
        written[name] = {"path": str(path), "test_mse": mse}
        print(f"{name}: day-2 position MSE {mse:.6f} -> {path}")
    return {"forecasters": written}


def _load_forecaster(path):
    if path is None:
        raise ConfigurationError("with_forecast mode needs --forecaster CHECKPOINT")
    model, _ = ForecasterModel.load(path)
    return model


def cmd_train_auth(args, cfg):
    sessions = load_corpus(cfg)
    split = _split(sessions, cfg, args.user)
    forecasting = cfg.mode == WITH_FORECAST and cfg.horizon > 0
    fc = _load_forecaster(args.forecaster) if forecasting else None
    spec = _forecast_spec(cfg) if forecasting else None
    model = AuthModel(args.user, classifier_config(cfg, cfg.window_size + (cfg.horizon if forecasting else 0)),
                      seed=cfg.seed)
    res = train_classifier(model, split, cfg.mode, fc, spec, loss_weights(cfg), seed=cfg.seed,
                           joint=cfg.joint, forecast_impostors=cfg.forecast_impostors,
                           progress=_epoch_logger(f"auth[{args.user}]"))
    out = Path(cfg.out)
    tag = f"{cfg.variant}_{cfg.mode}_ws{cfg.window_size}_h{cfg.horizon if forecasting else 0}"
    path = out / f"auth_{args.user}_{tag}.npz"
    model.metadata.update({"window_size": cfg.window_size, "horizon": cfg.horizon if forecasting else 0,
                           "stride": cfg.stride, "forecaster": args.forecaster or ""})
    if forecasting and cfg.joint:
        fc.save(out / f"forecaster_{args.user}_joint_{tag}.npz")
    model.save(path)
    _write_json(out / f"metrics_{args.user}_{tag}.json", res.metrics)
    print(f"{args.user}: best epoch {res.best_epoch} -> {path}")
    return {"checkpoint": str(path), "best_epoch": res.best_epoch}


def cmd_eval(args, cfg):
    out = Path(cfg.out)
    if args.scores:
        sets = read_scores(args.scores)
    else:
        if not args.auth:
            raise UsageError("eval needs --auth CHECKPOINT or --scores FILE")
        sessions = load_corpus(cfg)
        fc = ForecasterModel.load(args.forecaster)[0] if args.forecaster else None
        sets = {}
        scores_path = out / "scores.csv"
        for i, ckpt in enumerate(args.auth):
            model = AuthModel.load(ckpt)
            md = model.metadata
            ws, h = int(md.get("window_size", cfg.window_size)), int(md.get("horizon", 0))
            split = build_split(sessions, WindowSpec(ws, int(md.get("stride", cfg.stride))), model.user_id,
                                cfg.validation_fraction, cfg.seed)
            mode = WITH_FORECAST if h > 0 else NO_FORECAST
            spec = ForecastSpec.make(ws, h, cfg.l_overlap) if h > 0 else None
            if h > 0 and fc is None:
                fc = _load_forecaster(md.get("forecaster") or None)
            scores = score_windows(model, split.test, mode, fc, spec)
            write_scores(scores_path, model.user_id, split.test, scores, append=i > 0)
            sets[model.user_id] = read_scores(scores_path)[model.user_id]
        print(f"scores -> {scores_path}")
    per_user = {u: compute_eer(s).eer for u, s in sets.items()}
    summary = EerSummary.from_subjects(per_user)
    for u in sorted(per_user):
        print(f"{u}: EER {per_user[u]:.4f}")
    print(f"mean EER {summary.mean_eer:.4f} over {len(per_user)} users")
    _write_json(out / "eval.json", {"per_user_eer": per_user, "mean_eer": summary.mean_eer})
    return {"mean_eer": summary.mean_eer}


def cmd_sweep(args, cfg):
    sessions = load_corpus(cfg)
    scfg = sweep_config(cfg)
    out = Path(cfg.out) / f"sweep_{cfg.mode}_{cfg.variant}"
    t0 = time.perf_counter()

    def progress(cell):
        log.info("cell ws=%d h=%d mean EER %.4f (%.1fs)", cell.ws, cell.h, cell.mean_eer, cell.seconds)

    result = run_sweep(sessions, scfg, cache_dir=out / "cache", workers=cfg.workers, progress=progress)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.mode == NO_FORECAST:
        write_window_table({cfg.variant: result.eer}, out / "eer.csv")
    else:
        result.eer.to_csv(out / "eer.csv")
        result.mse.to_csv(out / "mse.csv")
    extra = {}
    if args.overlap_sweep:
        series = run_overlap_sweep(sessions, cfg.window_size, cfg.horizon, scfg)
        write_overlap_series(series, out / f"overlap_ws{cfg.window_size}_h{cfg.horizon}.csv")
        extra["overlap"] = {str(k): v for k, v in series.items()}
    manifest = sweep_manifest(result, {"sweep_seconds": time.perf_counter() - t0})
    manifest.update({"mode": cfg.mode, "variant": cfg.variant, **extra})
    _write_json(out / "manifest.json", manifest)
    print(result.eer.render_text(f"mean EER ({cfg.variant}, {cfg.mode})"))
    return {"sweep_dir": str(out), "cells": len(result.cells)}


def cmd_bench(args, cfg):
    spec = _forecast_spec(cfg)
    reps = args.repetitions or cfg.bench_repetitions
    fc = ForecasterModel(forecaster_config(cfg), seed=cfg.seed)
    auth = AuthModel("bench", classifier_config(cfg, spec.l_window + spec.l_forecasting), seed=cfg.seed)
    stats = timing_benchmark(fc, auth, spec, repetitions=reps)
    kern = kernel_benchmark()
    result = {"latency": stats.to_dict(), "latency_ceiling_ms": LATENCY_CEILING_MS,
              "within_frame_budget": stats.within_budget(), "kernels": kern}
    _write_json(Path(cfg.out) / "bench.json", result)
    print(f"forecast+classify median {stats.median_ms:.2f} ms, p95 {stats.p95_ms:.2f} ms "
          f"(frame budget {stats.budget_ms:.2f} ms)")
    for name, times in kern.items():
        print(f"{name:>7}: " + ", ".join(f"{k} {v:.3f} ms" for k, v in times.items()))
    return {"median_ms": stats.median_ms}


def cmd_report(args, cfg):
    no_forecast, forecast_eer, mse, overlap = {}, {}, None, {}
    manifests = {}
    for d in map(Path, args.inputs):
        mpath = d / "manifest.json"
        if not mpath.exists():
            raise DataError(f"{d}: not a sweep output directory (no manifest.json)")
        m = json.loads(mpath.read_text())
        manifests[d.name] = {"config_hash": m.get("config_hash"), "master_seed": m.get("master_seed")}
        variant = m["variant"]
        if m["mode"] == NO_FORECAST:
            no_forecast.update(parse_window_table((d / "eer.csv").read_text()))
        else:
            forecast_eer[variant] = SweepGrid.from_csv(d / "eer.csv", "eer")
            if (d / "mse.csv").exists():
                mse = SweepGrid.from_csv(d / "mse.csv", "mse")
        for f in sorted(d.glob("overlap_ws*_h*.csv")):
            ws, h = f.stem[len("overlap_ws"):].split("_h")
            rows = [line.split(",") for line in f.read_text().splitlines()[1:]]
            overlap[(int(ws), int(h))] = {int(a): float(b) for a, b in rows}
    written = emit_report(cfg.out, no_forecast or None, forecast_eer or None, mse, overlap or None,
                          manifest={"inputs": manifests}, include_reference=args.published)
    print((Path(cfg.out) / "tables.txt").read_text())
    return {"written": {k: str(v) for k, v in written.items()}}


COMMANDS = {
    "synth": cmd_synth,
    "validate-data": cmd_validate,
    "train-forecaster": cmd_train_forecaster,
    "train-auth": cmd_train_auth,
    "eval": cmd_eval,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        cfg = resolve_config(args)
        if args.print_config:
            sys.stdout.write(cfg.to_text())
            return 0
        started = time.perf_counter()
        _log_line(cfg.out, f"start {args.command} config={cfg.digest()} argv={argv if argv is not None else sys.argv[1:]}")
        extra = COMMANDS[args.command](args, cfg)
        _write_json(Path(cfg.out) / "manifests" / f"{args.command}.json",
                    _manifest(cfg, args.command, {"result": extra, "seconds": time.perf_counter() - started}))
        _log_line(cfg.out, f"done {args.command}")
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except NonFiniteError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except MotionAuthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code in (2, 3) else 4
    except FloatingPointError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
