"""Command-line harness wiring generators, scorers, rules, and metrics.

Subcommands
-----------
simulate  generate a labeled synthetic p-value stream (CSV: t,p,label)
score     turn a raw time-series CSV into a p-value stream (rolling scorer)
detect    run one decision rule over a p-value CSV (CSV: t,p,alpha,reject[,label])
sweep     run a preset or config-file experiment grid (raw + aggregate CSVs)
verify    recompute oracle and surplus for a produced decision log
rerun     re-execute any command from its manifest, byte-identically

Every command writes a manifest JSON next to its outputs holding the fully
resolved configuration, input digests, and output digests; re-running from
the manifest reproduces the outputs bit for bit.  Exit codes: 0 success,
2 validation error, 3 I/O error, 4 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import __version__, controllers, forecaster, metrics, simulation
from .controllers import ControllerConfig

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_VERIFICATION = 4

OUTPUT_DIR_ENV = "STREAMFDR_OUTPUT_DIR"


class VerificationFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# formatting / file helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(path, command: str, resolved: dict, inputs: dict,
                   outputs: dict):
    _write_json(path, {
        "tool": "streamfdr",
        "tool_version": __version__,
        "command": command,
        "resolved": resolved,
        "inputs": {name: {"path": str(p), "sha256": _sha256(p)}
                   for name, p in inputs.items()},
        "outputs": {name: {"file": os.path.basename(str(p)),
                           "sha256": _sha256(p)}
                    for name, p in outputs.items()},
    })


def read_stream_csv(path):
    """Read a (t,p[,label]) CSV; label is 1 for anomalous rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if header[:2] != ["t", "p"]:
            raise ValueError(f"{path}: expected columns t,p[,label]")
        has_label = "label" in header
        label_idx = header.index("label") if has_label else None
        ps, labels = [], []
        for rowno, cells in enumerate(reader, start=1):
            if int(cells[0]) != rowno:
                raise ValueError(
                    f"{path}: row {rowno}: indices must be gapless from 1")
            ps.append(float(cells[1]))
            if has_label:
                labels.append(bool(int(float(cells[label_idx]))))
    p = np.asarray(ps, dtype=np.float64)
    is_null = ~np.asarray(labels, dtype=bool) if has_label else None
    return p, is_null


def read_decisions_csv(path) -> metrics.DecisionLog:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        header = [h.strip() for h in header]
        for col in ("t", "p", "alpha", "reject"):
            if col not in header:
                raise ValueError(f"{path}: missing column {col!r}")
        idx = {c: header.index(c) for c in header}
        has_label = "label" in header
        ps, alphas, rejects, labels = [], [], [], []
        for cells in reader:
            ps.append(float(cells[idx["p"]]))
            alphas.append(float(cells[idx["alpha"]]))
            rejects.append(bool(int(cells[idx["reject"]])))
            if has_label:
                labels.append(bool(int(float(cells[idx["label"]]))))
    return metrics.DecisionLog(
        p=np.asarray(ps, dtype=np.float64),
        alpha=np.asarray(alphas, dtype=np.float64),
        rejected=np.asarray(rejects, dtype=bool),
        is_null=None if not has_label else ~np.asarray(labels, dtype=bool),
    )


def _outpath(args, name: str) -> str:
    outdir = args.output_dir or os.environ.get(OUTPUT_DIR_ENV) or "."
    os.makedirs(outdir, exist_ok=True)
    return os.path.join(outdir, name)


def _print_warnings(caught):
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)


def config_from_resolved(resolved: dict) -> ControllerConfig:
    """Rebuild a controller config from manifest-resolved parameters."""
    from .gamma import GammaSequence
    gamma = None
    if resolved.get("gamma_file"):
        gamma = GammaSequence.from_file(resolved["gamma_file"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ControllerConfig(
            rule=resolved["method"],
            alpha=resolved["alpha"],
            delta=resolved["delta"],
            eta=resolved["eta"],
            w0=resolved["w0"],
            lam=resolved["lam"],
            tau=resolved["tau"],
            lag=resolved["lag"],
            gamma=gamma,
            dependence_correction=resolved["dependence_correction"],
            prune_epsilon=resolved["prune_epsilon"],
            lag_decay_exponent=resolved["lag_decay_exponent"],
            horizon=resolved["horizon"],
        )


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _run_simulate(resolved: dict, args) -> int:
    cfg = simulation.GeneratorConfig(
        length=resolved["length"], pi1=resolved["pi1"],
        alternative=resolved["alternative"], effect=resolved["effect"],
        sidedness=resolved["sidedness"], seed=resolved["seed"],
        ma_lag=resolved["ma_lag"])
    stream = simulation.generate_stream(cfg)
    prefix = resolved["out"]
    csv_path = _outpath(args, f"{prefix}.csv")
    rows = ((i + 1, float(stream.p[i]), int(not stream.is_null[i]))
            for i in range(len(stream)))
    _write_csv(csv_path, ["t", "p", "label"], rows)
    manifest = _outpath(args, f"{prefix}.manifest.json")
    write_manifest(manifest, "simulate", resolved, {}, {"stream": csv_path})
    print(f"wrote {csv_path} ({len(stream)} rows, "
          f"{stream.n_alternatives} anomalies)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    resolved = {
        "length": args.length, "pi1": args.pi1,
        "alternative": args.alternative, "effect": args.effect,
        "sidedness": args.sidedness, "seed": args.seed,
        "ma_lag": args.ma_lag, "out": args.out,
    }
    return _run_simulate(resolved, args)


# ---------------------------------------------------------------------------
# score
# ---------------------------------------------------------------------------

def _run_score(resolved: dict, args) -> int:
    frame = forecaster.ingest_csv(
        resolved["input"], value_columns=resolved["columns"],
        label_column=resolved["label_column"],
        forward_fill=resolved["forward_fill"])
    p = forecaster.score_frame(frame, resolved["window"], resolved["sidedness"])
    prefix = resolved["out"]
    csv_path = _outpath(args, f"{prefix}.csv")
    if frame.labels is not None:
        rows = ((i + 1, float(p[i]), int(frame.labels[i]))
                for i in range(frame.n_rows))
        _write_csv(csv_path, ["t", "p", "label"], rows)
        print(f"anomaly fraction: {frame.anomaly_fraction():.4%}")
    else:
        rows = ((i + 1, float(p[i])) for i in range(frame.n_rows))
        _write_csv(csv_path, ["t", "p"], rows)
    manifest = _outpath(args, f"{prefix}.manifest.json")
    write_manifest(manifest, "score", resolved,
                   {"series": resolved["input"]}, {"pvalues": csv_path})
    print(f"wrote {csv_path} ({frame.n_rows} rows, {frame.n_dims} dims)")
    return EXIT_OK


def cmd_score(args) -> int:
    resolved = {
        "input": args.input,
        "columns": args.columns.split(",") if args.columns else None,
        "label_column": args.label_column,
        "window": args.window,
        "sidedness": args.sidedness,
        "forward_fill": args.forward_fill,
        "out": args.out,
    }
    return _run_score(resolved, args)


# ---------------------------------------------------------------------------
# detect
# ---------------------------------------------------------------------------

def _detect_resolved(args) -> dict:
    from .gamma import GammaSequence
    gamma = GammaSequence.from_file(args.gamma_file) if args.gamma_file else None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        config = ControllerConfig(
            rule=args.method, alpha=args.alpha, delta=args.delta,
            eta=args.eta, w0=args.w0, lam=args.lam, tau=args.tau,
            lag=args.lag, gamma=gamma,
            dependence_correction=args.dependence_correction,
            prune_epsilon=args.prune_epsilon,
            lag_decay_exponent=args.lag_decay_exponent)
    _print_warnings(caught)
    resolved = {"method": config.rule, "input": args.input, "out": args.out,
                "resume_from": args.resume_from, "save_state": args.save_state,
                "gamma_file": args.gamma_file}
    params = config.scalar_params()
    params.pop("rule")
    params.pop("gamma_kind")
    params.pop("gamma_param")
    resolved.update(params)
    return resolved


def _run_detect(resolved: dict, args) -> int:
    config = config_from_resolved(resolved)
    p, is_null = read_stream_csv(resolved["input"])
    if resolved["resume_from"]:
        with open(resolved["resume_from"]) as fh:
            controller = controllers.restore_controller(config, fh.read())
        offset = controller.t
    else:
        controller = controllers.make_controller(config)
        offset = 0
    log = metrics.run_log(controller, p, is_null=is_null)
    floor = controllers.threshold_floor(config)
    if floor > 0.0 and config.rule != "fixed":
        print(f"threshold floor {floor!r} "
              f"(rescale factor {controllers.rescale_factor(config)!r})")

    prefix = resolved["out"]
    csv_path = _outpath(args, f"{prefix}.csv")
    header = ["t", "p", "alpha", "reject"]
    if is_null is not None:
        header.append("label")
        rows = ((offset + i + 1, float(p[i]), float(log.alpha[i]),
                 int(log.rejected[i]), int(not is_null[i]))
                for i in range(len(log)))
    else:
        rows = ((offset + i + 1, float(p[i]), float(log.alpha[i]),
                 int(log.rejected[i])) for i in range(len(log)))
    _write_csv(csv_path, header, rows)

    summary = metrics.summarize_log(log, config)
    footer_path = _outpath(args, f"{prefix}.metrics.json")
    _write_json(footer_path, summary)

    outputs = {"decisions": csv_path, "metrics": footer_path}
    if resolved["save_state"]:
        state_path = _outpath(args, resolved["save_state"])
        with open(state_path, "w") as fh:
            fh.write(controller.snapshot())
            fh.write("\n")
        outputs["state"] = state_path
    manifest = _outpath(args, f"{prefix}.manifest.json")
    inputs = {"pvalues": resolved["input"]}
    if resolved["resume_from"]:
        inputs["state"] = resolved["resume_from"]
    if resolved.get("gamma_file"):
        inputs["gamma"] = resolved["gamma_file"]
    write_manifest(manifest, "detect", resolved, inputs, outputs)
    print(f"wrote {csv_path} ({len(log)} rows, {int(log.rejected.sum())} "
          f"rejections)")
    return EXIT_OK


def cmd_detect(args) -> int:
    return _run_detect(_detect_resolved(args), args)


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

PRESETS = {
    "fig1": {
        "kind": "grid",
        "methods": ("lord", "saffron", "addis"),
        "pi1_grid": (1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.3, 0.5, 0.9),
    },
    "fig4": {
        "kind": "grid",
        "methods": ("lord", "saffron", "addis", "lord-decay", "saffron-decay"),
        "pi1_grid": (1e-4, 1e-3, 1e-2, 1e-1, 0.5, 0.9),
    },
    "fig3": {"kind": "burst"},
    "fig6": {"kind": "frontier"},
}

_GRID_KEYS = {"methods", "pi1_grid", "length", "reps", "alpha", "delta", "eta",
              "lag", "alternative", "effect", "sidedness", "ma_lag",
              "seed_base", "workers"}


def _parse_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            if "=" not in text:
                raise ValueError(f"{path}: line {lineno}: expected key=value")
            key, value = (part.strip() for part in text.split("=", 1))
            out[key] = value
    return out


def _coerce_sweep_settings(settings: dict) -> dict:
    coerced = {}
    for key, value in settings.items():
        if key == "preset":
            coerced[key] = value
        elif key == "methods":
            coerced[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key == "pi1_grid":
            coerced[key] = tuple(float(v) for v in value.split(","))
        elif key in ("length", "reps", "lag", "ma_lag", "seed_base", "workers"):
            coerced[key] = int(value)
        elif key in ("alpha", "delta", "eta", "effect"):
            coerced[key] = float(value)
        elif key in ("alternative", "sidedness"):
            coerced[key] = value
        else:
            raise ValueError(f"unknown sweep setting {key!r}")
    return coerced


def _run_sweep(resolved: dict, args) -> int:
    kind = resolved["kind"]
    prefix = resolved["out"]
    outputs = {}
    failed_cells = []
    if kind == "grid":
        cfg = simulation.SweepConfig(**{k: v for k, v in resolved.items()
                                        if k in _GRID_KEYS})
        result = simulation.run_sweep(cfg)
        for err in result.errors:
            failed_cells.append(err)
            print(f"error: sweep cell pi1={err['pi1']} seed={err['seed']}: "
                  f"{err['error']}", file=sys.stderr)
        raw_path = _outpath(args, f"{prefix}.raw.csv")
        _write_csv(raw_path, simulation._RAW_COLUMNS,
                   ([row[c] for c in simulation._RAW_COLUMNS]
                    for row in result.raw))
        agg_path = _outpath(args, f"{prefix}.agg.csv")
        _write_csv(agg_path, simulation._AGG_COLUMNS,
                   ([row[c] for c in simulation._AGG_COLUMNS]
                    for row in result.aggregate))
        outputs = {"raw": raw_path, "aggregate": agg_path}
        print(f"wrote {raw_path} ({len(result.raw)} rows) and {agg_path} "
              f"({len(result.aggregate)} rows)")
    elif kind == "burst":
        burst = simulation.BurstConfig(
            burst_length=resolved["burst_length"],
            burst_anomalies=resolved["burst_anomalies"],
            gap=resolved["gap"], effect=resolved["effect"],
            seed=resolved["seed_base"])
        stream = simulation.generate_burst_stream(burst)
        log_configs = {}
        for method in resolved["methods"]:
            config = simulation.method_config(
                method, alpha=resolved["alpha"], delta=resolved["delta"],
                eta=resolved["eta"])
            log = metrics.run_log(controllers.make_controller(config),
                                  stream.p, is_null=stream.is_null)
            path = _outpath(args, f"{prefix}.{method}.csv")
            rows = ((i + 1, float(stream.p[i]), float(log.alpha[i]),
                     int(log.rejected[i]), int(not stream.is_null[i]))
                    for i in range(len(log)))
            _write_csv(path, ["t", "p", "alpha", "reject", "label"], rows)
            outputs[method] = path
            params = config.scalar_params()
            params["method"] = params.pop("rule")
            params.update({"input": None, "out": None,
                           "resume_from": None, "save_state": None})
            params.pop("gamma_kind")
            params.pop("gamma_param")
            log_configs[os.path.basename(path)] = params
            print(f"wrote {path} ({int(log.rejected.sum())} rejections)")
        resolved = dict(resolved, logs=log_configs)
    elif kind == "frontier":
        cfg = simulation.FrontierConfig(
            burst=simulation.BurstConfig(
                burst_length=resolved["burst_length"],
                burst_anomalies=resolved["burst_anomalies"],
                gap=resolved["gap"], effect=resolved["effect"],
                seed=resolved["seed_base"]),
            method=resolved["frontier_method"],
            alpha_grid=resolved["alpha_grid"],
            threshold_grid=resolved["threshold_grid"],
            delta=resolved["delta"], eta=resolved["eta"],
            reps=resolved["reps"], workers=resolved["workers"])
        result = simulation.fixed_threshold_frontier(cfg)
        path = _outpath(args, f"{prefix}.frontier.csv")
        cols = list(result.aggregate[0].keys())
        _write_csv(path, cols, ([row[c] for c in cols]
                                for row in result.aggregate))
        outputs = {"frontier": path}
        print(f"wrote {path} ({len(result.aggregate)} rows)")
    else:
        raise ValueError(f"unknown sweep kind {kind!r}")
    manifest = _outpath(args, f"{prefix}.manifest.json")
    inputs = {}
    if resolved.get("config_file"):
        inputs["config"] = resolved["config_file"]
    write_manifest(manifest, "sweep", resolved, inputs, outputs)
    if failed_cells:
        print(f"error: {len(failed_cells)} sweep cell(s) failed",
              file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _sweep_resolved(args) -> dict:
    settings = {}
    if args.config:
        settings.update(_coerce_sweep_settings(_parse_config_file(args.config)))
    preset_name = args.preset or settings.pop("preset", None)
    if preset_name is None:
        raise ValueError("sweep needs --preset or a config file naming one")
    if preset_name not in PRESETS:
        raise ValueError(f"unknown preset {preset_name!r}; "
                         f"choose from {', '.join(sorted(PRESETS))}")
    preset = PRESETS[preset_name]
    resolved = {
        "preset": preset_name, "kind": preset["kind"],
        "alpha": 0.1, "delta": 0.99, "eta": 1.0, "lag": 0,
        "length": 20000, "reps": 20, "seed_base": 0, "workers": 1,
        "alternative": "mean", "effect": 3.0, "sidedness": "two", "ma_lag": 0,
        "burst_length": 1000, "burst_anomalies": 50, "gap": 10000,
        "methods": ("saffron", "saffron-decay"),
        "pi1_grid": (),
        "frontier_method": "lord-decay",
        "alpha_grid": (0.01, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5),
        "threshold_grid": tuple(float(x) for x in np.geomspace(3e-5, 0.5, 28)),
        "config_file": args.config,
        "out": args.out,
    }
    resolved.update({k: v for k, v in preset.items() if k != "kind"})
    resolved.update(settings)
    for flag in ("reps", "length", "workers", "alpha", "delta"):
        value = getattr(args, flag)
        if value is not None:
            resolved[flag] = value
    if args.seed is not None:
        resolved["seed_base"] = args.seed
    return resolved


def cmd_sweep(args) -> int:
    return _run_sweep(_sweep_resolved(args), args)


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    basename = os.path.basename(args.input)
    if manifest.get("command") == "detect":
        recorded = manifest["outputs"].get("decisions", {})
        resolved = manifest["resolved"]
    elif manifest.get("command") == "sweep" and "logs" in manifest.get("resolved", {}):
        recorded = manifest["outputs"].get(
            basename.split(".")[-2] if basename.count(".") >= 2 else "", {})
        by_name = manifest["resolved"]["logs"]
        if basename not in by_name:
            raise ValueError(
                f"manifest does not describe a decision log named {basename!r}")
        resolved = by_name[basename]
        recorded = {"file": basename,
                    "sha256": next((o["sha256"] for o in
                                    manifest["outputs"].values()
                                    if o["file"] == basename), None)}
    else:
        raise ValueError("manifest does not describe a decision log")
    if recorded.get("file") != basename:
        raise ValueError(
            f"manifest mismatch: it records {recorded.get('file')!r}, "
            f"not {basename!r}")
    actual = _sha256(args.input)
    if not args.allow_modified and recorded.get("sha256") != actual:
        raise ValueError(
            "manifest mismatch: decision log digest differs from the "
            "manifest record (pass --allow-modified to verify anyway)")
    config = config_from_resolved(resolved)
    log = read_decisions_csv(args.input)
    report = metrics.verify_oracle_and_surplus(log, config, tol=args.tol,
                                               method=args.method)
    print(report.summary())
    if args.out:
        payload = {k: getattr(report, k) for k in (
            "rule", "steps", "min_surplus", "min_surplus_at", "max_oracle",
            "max_oracle_at", "oracle_bound", "consistent",
            "first_violation_at", "passed")}
        _write_json(_outpath(args, args.out), payload)
    if not report.passed:
        raise VerificationFailure(report.summary())
    return EXIT_OK


# ---------------------------------------------------------------------------
# rerun
# ---------------------------------------------------------------------------

def cmd_rerun(args) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    command = manifest.get("command")
    resolved = manifest.get("resolved", {})
    runners = {"simulate": _run_simulate, "score": _run_score,
               "detect": _run_detect, "sweep": _run_sweep}
    if command not in runners:
        raise ValueError(f"cannot rerun command {command!r}")
    return runners[command](resolved, args)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamfdr",
        description="online FDR control for streaming anomaly detection")
    parser.add_argument("--output-dir", default=None,
                        help=f"directory for outputs (default: "
                             f"${OUTPUT_DIR_ENV} or the working directory)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic p-value stream")
    p.add_argument("--length", type=int, default=20000)
    p.add_argument("--pi1", type=float, required=True,
                   help="anomaly proportion in [0,1]")
    p.add_argument("--alternative", choices=simulation.ALTERNATIVES,
                   default="mean")
    p.add_argument("--effect", type=float, default=3.0,
                   help="mean shift, or scale factor for --alternative scale")
    p.add_argument("--sidedness", choices=simulation.SIDEDNESS, default="two")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ma-lag", type=int, default=0,
                   help="moving-average order for locally dependent streams")
    p.add_argument("--out", default="stream")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("score", help="rolling-Gaussian p-values from a series CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--columns", default=None,
                   help="comma-separated value columns (default: all non-label)")
    p.add_argument("--label-column", default=None)
    p.add_argument("--window", type=int, default=100)
    p.add_argument("--sidedness", choices=simulation.SIDEDNESS, default="two")
    p.add_argument("--forward-fill", action="store_true",
                   help="impute missing cells from the previous row")
    p.add_argument("--out", default="scores")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("detect", help="run one decision rule over a p-value CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--method", required=True, choices=controllers.RULES)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--w0", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--lag", type=int, default=0,
                   help="dependency lag for the lord-dep-* rules")
    p.add_argument("--dependence-correction", action="store_true",
                   help="divide thresholds by the harmonic number q(t)")
    p.add_argument("--lag-decay-exponent", action="store_true",
                   help="also delay the decay exponent by the lag "
                        "(larger thresholds, weaker certificate)")
    p.add_argument("--prune-epsilon", type=float, default=1e-12)
    p.add_argument("--gamma-file", default=None,
                   help="custom spending sequence, one weight per line")
    p.add_argument("--resume-from", default=None,
                   help="controller state snapshot to resume from")
    p.add_argument("--save-state", default=None,
                   help="write the final controller state to this file")
    p.add_argument("--out", default="decisions")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("sweep", help="run a preset or config-file experiment")
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    p.add_argument("--config", default=None, help="key=value settings file")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--out", default="sweep")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="recompute oracle/surplus for a log")
    p.add_argument("--input", required=True, help="decision CSV to verify")
    p.add_argument("--manifest", required=True)
    p.add_argument("--method", choices=("scratch", "recurrence"),
                   default="scratch")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--allow-modified", action="store_true",
                   help="skip the manifest digest check")
    p.add_argument("--out", default=None, help="also write a JSON report")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rerun", help="re-execute a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerificationFailure:
        return EXIT_VERIFICATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint():  # console-script shim
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
