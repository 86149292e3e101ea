"""Batch command-line front end.

Subcommands wire the pipeline end to end: ``synth`` writes a deterministic
cohort of patient CSVs, ``preprocess`` turns them into standardized sample
archives, ``train`` runs the two-phase adversarial transfer, ``evaluate``
produces RMSE/MAPE and the clinical error-grid report, and ``explain`` dumps
per-input contribution tables. Every command echoes its effective
configuration into the output directory, so a run is reproducible from the
echo plus the seed.

Exit codes: 0 ok, 2 usage/config, 3 missing input, 4 numeric failure,
5 capability mismatch.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .datapipe import (
    SplitSpec,
    preprocess_series,
    read_patient_archive,
    read_series_csv,
    write_patient_archive,
    write_series_csv,
)
from .errors import ConfigError, GlucastError, IngestionError, TrainingError
from .evalmetrics import (
    cg_ega_report,
    mape,
    reconstruct,
    report_to_dict,
    rmse,
    write_points_csv,
)
from .models import (
    LstmRegModel,
    RetainConfig,
    RetainModel,
    StdAttnModel,
    aggregate_attributions,
    contributions,
    event_conditioned_attributions,
    load_model,
    normalized_contributions,
    save_model,
)
from .models.attribution import event_mask_from_windows
from .synthdata import default_cohort, generate_patient
from .training import PatientSplits, TrainConfig, finetune, train_source, write_history_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_INPUT = 3
EXIT_NUMERIC = 4
EXIT_CAPABILITY = 5

# every tunable, with its type fixed by the default value
CONFIG_DEFAULTS = {
    "model": "retain",
    "seq_len": 37,
    "input_dim": 3,
    "embed_dim": 64,
    "alpha_hidden": 128,
    "beta_hidden": 128,
    "reverse_time": False,
    "stdattn_hidden": 128,
    "lstm_hidden1": 256,
    "lstm_hidden2": 256,
    "batch_size": 50,
    "lr_source": 1e-3,
    "lr_finetune": 1e-4,
    "patience_source": 100,
    "patience_finetune": 25,
    "lambda": 10.0 ** -2.5,
    "max_epochs": 500,
    "seed": 0,
    "test_days": 5,
    "valid_fraction": 0.2,
    "ph_steps": 6,
    "period_minutes": 5,
    "spike_threshold": 50.0,
    "patients": 6,
    "days": 21,
    "noise_std": 2.0,
    "missing_rate": 0.0,
}


def _coerce(key, text):
    default = CONFIG_DEFAULTS[key]
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"config key {key}: expected a boolean, got {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def load_config(path=None, overrides=None) -> dict:
    """Defaults, overlaid by a flat key=value file, overlaid by CLI flags."""
    cfg = dict(CONFIG_DEFAULTS)
    if path is not None:
        for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path} line {line_no}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in cfg:
                raise ConfigError(f"{path} line {line_no}: unknown config key {key!r}")
            cfg[key] = _coerce(key, value)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in cfg:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = _coerce(key, str(value)) if isinstance(value, str) else value
    return cfg


def echo_config(cfg, out_dir, command) -> None:
    lines = [f"# effective configuration for `glucast {command}`"]
    lines += [f"{key} = {cfg[key]}" for key in sorted(cfg)]
    (Path(out_dir) / "effective.cfg").write_text("\n".join(lines) + "\n",
                                                 encoding="utf-8")


def _ensure_out_dir(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc}") from exc
    return out


def _train_config(cfg) -> TrainConfig:
    return TrainConfig(batch_size=cfg["batch_size"], lr_source=cfg["lr_source"],
                       lr_finetune=cfg["lr_finetune"],
                       patience_source=cfg["patience_source"],
                       patience_finetune=cfg["patience_finetune"],
                       lam=cfg["lambda"], max_epochs=cfg["max_epochs"],
                       seed=cfg["seed"])


def _splits_from_archive(archive) -> PatientSplits:
    return PatientSplits(train_x=archive["train"].x, train_y=archive["train"].y,
                         valid_x=archive["valid"].x, valid_y=archive["valid"].y,
                         patient_id=archive["meta"]["patient_id"])


def _build_model(cfg, n_sources):
    kind = cfg["model"]
    if kind == "retain":
        model_cfg = RetainConfig(seq_len=cfg["seq_len"], input_dim=cfg["input_dim"],
                                 embed_dim=cfg["embed_dim"],
                                 alpha_hidden=cfg["alpha_hidden"],
                                 beta_hidden=cfg["beta_hidden"],
                                 n_sources=max(n_sources, 1),
                                 reverse_time=cfg["reverse_time"])
        return RetainModel.create(model_cfg, seed=cfg["seed"])
    if kind == "stdattn":
        return StdAttnModel.create(input_dim=cfg["input_dim"],
                                   hidden=cfg["stdattn_hidden"], seed=cfg["seed"])
    if kind == "lstm":
        return LstmRegModel.create(input_dim=cfg["input_dim"],
                                   n_sources=max(n_sources, 1), seed=cfg["seed"],
                                   hidden1=cfg["lstm_hidden1"],
                                   hidden2=cfg["lstm_hidden2"])
    raise ConfigError(f"unknown model {kind!r} (use retain, stdattn, or lstm)")


# --- subcommands -------------------------------------------------------------

def cmd_synth(args) -> int:
    cfg = load_config(args.config, {"patients": args.patients, "days": args.days,
                                    "seed": args.seed, "noise_std": args.noise_std,
                                    "missing_rate": args.missing_rate})
    if cfg["patients"] < 1 or cfg["days"] < 1:
        raise ConfigError("--patients and --days must be at least 1")
    out = _ensure_out_dir(args.out)
    profiles = default_cohort(cfg["patients"], cfg["seed"],
                              noise_std=cfg["noise_std"],
                              missing_rate=cfg["missing_rate"])
    manifest = []
    for profile in profiles:
        series = generate_patient(profile, cfg["days"])
        write_series_csv(series, out / f"{profile.patient_id}.csv")
        manifest.append({
            "patient_id": profile.patient_id, "basal": profile.basal,
            "cho_sensitivity": profile.cho_sensitivity,
            "insulin_sensitivity": profile.insulin_sensitivity,
            "meal_schedule": [list(m) for m in profile.meal_schedule],
            "bolus_schedule": [list(b) for b in profile.bolus_schedule],
            "noise_std": profile.noise_std, "seed": profile.seed,
            "missing_rate": profile.missing_rate,
        })
    with open(out / "profiles.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1)
    echo_config(cfg, out, "synth")
    print(f"wrote {len(profiles)} patient series to {out}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    cfg = load_config(args.config, {"seed": args.seed})
    data = Path(args.data)
    if not data.is_dir():
        raise FileNotFoundError(f"raw data directory {data} does not exist")
    csvs = sorted(p for p in data.glob("*.csv"))
    if not csvs:
        raise FileNotFoundError(f"no patient CSVs in {data}")
    out = _ensure_out_dir(args.out)
    spec = SplitSpec(test_days=cfg["test_days"], valid_fraction=cfg["valid_fraction"])
    for path in csvs:
        series = read_series_csv(path)
        train, valid, test, scaling = preprocess_series(
            series, spec, seq_len=cfg["seq_len"], ph_steps=cfg["ph_steps"],
            period_minutes=cfg["period_minutes"],
            spike_threshold=cfg["spike_threshold"])
        write_patient_archive(out, series.patient_id, train, valid, test, scaling,
                              seq_len=cfg["seq_len"], ph_steps=cfg["ph_steps"],
                              period_minutes=cfg["period_minutes"])
        print(f"{series.patient_id}: train={len(train)} valid={len(valid)} "
              f"test={len(test)}")
    echo_config(cfg, out, "preprocess")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args.config, {"model": args.model, "seed": args.seed,
                                    "max_epochs": args.max_epochs})
    data = Path(args.data)
    if not data.is_dir():
        raise FileNotFoundError(f"archive directory {data} does not exist")
    source_ids = [p for p in (args.sources or "").split(",") if p]
    try:
        sources = [_splits_from_archive(read_patient_archive(data, pid))
                   for pid in source_ids]
        target = _splits_from_archive(read_patient_archive(data, args.target))
    except FileNotFoundError as exc:
        raise FileNotFoundError(f"missing preprocessed archive: {exc}") from exc

    out = _ensure_out_dir(args.out)
    model = _build_model(cfg, n_sources=len(source_ids))
    train_cfg = _train_config(cfg)

    history = []
    if sources:
        history += train_source(model, sources, train_cfg)
    history += finetune(model, target, train_cfg)

    save_model(model, out / "model.json")
    write_history_csv(history, out / "history.csv")
    echo_config(cfg, out, "train")
    final = history[-1]["valid_mse"] if history else float("nan")
    print(f"trained {cfg['model']} on target {args.target} "
          f"({len(source_ids)} sources); final valid MSE {final:.6f}")
    return EXIT_OK


def _load_target_test(data_dir, target):
    archive = read_patient_archive(Path(data_dir), target)
    test = archive["test"]
    scaling = archive["scaling"]
    truth = {np.datetime64(t, "m"): float(v)
             for t, v in zip(test.target_t, scaling.invert_target(test.y))}
    return archive, test, scaling, truth


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config, {})
    model_path = Path(args.model)
    if not model_path.is_file():
        raise FileNotFoundError(f"model file {model_path} does not exist")
    model = load_model(model_path)
    archive, test, scaling, truth = _load_target_test(args.data, args.target)

    out = _ensure_out_dir(args.out)
    preds = model.predict(test.x)
    series = reconstruct(list(zip(test.target_t, preds)), scaling, truth)
    report = cg_ega_report(series)
    metrics = {"rmse_mgdl": rmse(series), "mape_pct": mape(series),
               "n_test": len(series), "overall_cg_ega": report.overall}
    with open(out / "metrics.json", "w", encoding="utf-8") as fh:
        json.dump(metrics, fh, indent=1)
    with open(out / "cgega.json", "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=1)
    write_points_csv(series, out / "points.csv")
    echo_config(cfg, out, "evaluate")
    print(f"RMSE {metrics['rmse_mgdl']:.2f} mg/dL, MAPE {metrics['mape_pct']:.2f}%, "
          f"AP {report.overall['AP']:.3f}")
    return EXIT_OK


VARIABLE_NAMES = ("glucose", "cho", "insulin")


def _write_matrix_csv(path, matrix, period_minutes):
    seq_len, n_vars = matrix.shape
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age_minutes"] + list(VARIABLE_NAMES[:n_vars]))
        for i in range(seq_len):
            age = (seq_len - 1 - i) * period_minutes
            writer.writerow([age] + [repr(float(v)) for v in matrix[i]])


def cmd_explain(args) -> int:
    cfg = load_config(args.config, {})
    model_path = Path(args.model)
    if not model_path.is_file():
        raise FileNotFoundError(f"model file {model_path} does not exist")
    model = load_model(model_path)
    if not getattr(model, "attributable", False):
        print("error: model is not attributable (per-input contributions need "
              "the two-level-attention model)", file=sys.stderr)
        return EXIT_CAPABILITY

    archive, test, scaling, _ = _load_target_test(args.data, args.target)
    period = archive["meta"]["period_minutes"]
    out = _ensure_out_dir(args.out)

    attributions = []
    for x in test.x:
        trace = model.forward(x)
        attributions.append(normalized_contributions(
            contributions(x, trace, model.params)))

    _write_matrix_csv(out / "attribution_mean.csv",
                      aggregate_attributions(attributions, "mean"), period)
    _write_matrix_csv(out / "attribution_max.csv",
                      aggregate_attributions(attributions, "max"), period)

    if args.sample is not None:
        if not 0 <= args.sample < len(test):
            raise ConfigError(f"--sample must be in [0, {len(test)})")
        x = test.x[args.sample]
        trace = model.forward(x)
        cmap = contributions(x, trace, model.params)
        with open(out / f"contributions_{args.sample}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["age_minutes"] + [f"{v}_contribution"
                                               for v in VARIABLE_NAMES])
            seq_len = cmap.contribution.shape[0]
            for i in range(seq_len):
                age = (seq_len - 1 - i) * period
                writer.writerow([age] + [repr(float(v))
                                         for v in cmap.contribution[i]])
            writer.writerow(["bias", repr(cmap.bias), "", ""])
            writer.writerow(["prediction", repr(trace.y_hat), "", ""])

    if args.event is not None:
        var_index = VARIABLE_NAMES.index(args.event)
        mask = event_mask_from_windows(test.x, scaling.input_mean,
                                       scaling.input_std, var_index)
        profile = event_conditioned_attributions(mask, attributions,
                                                 args.horizon, period)
        with open(out / f"event_{args.event}.csv", "w", newline="",
                  encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["offset_minutes", "count"]
                            + [f"{v}_share" for v in VARIABLE_NAMES])
            for offset, count, mean in zip(profile.offsets_minutes,
                                           profile.counts, profile.means):
                shares = ["" for _ in VARIABLE_NAMES] if mean is None else \
                    [repr(float(s)) for s in mean.sum(axis=0)]
                writer.writerow([offset, count] + shares)
        if profile.total_events == 0:
            warnings.warn(f"no {args.event} events in the test windows; "
                          "event table is empty")

    echo_config(cfg, out, "explain")
    print(f"explained {len(test)} test samples into {out}")
    return EXIT_OK


# --- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glucast",
        description="Interpretable attention-based glucose forecasting pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic cohort")
    p.add_argument("--patients", type=int, default=None)
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--noise-std", dest="noise_std", type=float, default=None)
    p.add_argument("--missing-rate", dest="missing_rate", type=float, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="raw patient CSVs -> sample archives")
    p.add_argument("--data", required=True, help="directory of patient CSVs")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="source training plus target finetuning")
    p.add_argument("--data", required=True, help="directory of sample archives")
    p.add_argument("--target", required=True)
    p.add_argument("--sources", default="", help="comma-separated patient ids")
    p.add_argument("--model", choices=("retain", "stdattn", "lstm"), default=None)
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="RMSE, MAPE, and CG-EGA on the test split")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="contribution tables for a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--sample", type=int, default=None)
    p.add_argument("--event", choices=("cho", "insulin"), default=None)
    p.add_argument("--horizon", type=int, default=60,
                   help="minutes after the event to profile")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_explain)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, IngestionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrainingError, FloatingPointError, GlucastError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:  # bad argument combinations from library checks
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
