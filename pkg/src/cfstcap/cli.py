"""Command-line pipeline: one YAML config, one master seed, per-stage
artifacts with manifests recording config hash and artifact digests.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .codes import CodeOptions, predict_all
from .data import Dataset, generate_synthetic, load_csv, save_csv, split
from .errors import ConfigError, DataError, NumericError
from .evaluation import (compute_metrics, interval_breakdown,
                         robustness_sweep, sensitivity)
from .features import (build_frame, correlation_matrix,
                       rank_by_abs_correlation, select_features)
from .network import (ConstraintSpec, TrainConfig, load_model, predict_rows,
                      predict_specimens, save_model, train, variant_spec)
from .seeding import named_seed
from .trees import (detect_anomalies, fit_gradient_boosting, fit_random_forest,
                    global_importance, mdi_importance, shapley_permutation)
from .explain import GaConfig, build_dependence_grid, optimal_alpha_curve

DEFAULT_CONFIG = {
    "master_seed": 42,
    "output_dir": "out",
    "data": {
        "source": "synthetic",          # 'synthetic' or a CSV path
        "range_mode": "warn",
        "synthetic": {"n": 500, "noise_cov": 0.10},
    },
    "split": {"fraction": 0.8},
    "features": {"selection_mode": "paper_fixed", "k": 10,
                 "shap_permutations": 20, "shap_rows": 40,
                 "gb_trees": 60, "rf_trees": 60, "max_depth": 6},
    "anomaly": {"contamination": 0.02, "n_trees": 100, "subsample": 256},
    "constraints": {"gamma": 0.1, "lower_factor": 0.7, "upper_factor": 2.2,
                    "pair_budget": 2000},
    "train": {"variant": "ANNWT", "epochs": 300, "batch_size": 64,
              "learning_rate": 1e-3, "patience": 50,
              "hidden_layers": 5, "hidden_units": 32},
    "codes": {"fck_mode": "cylinder", "ec4_slenderness": "standard"},
    "evaluation": {"paper_literal_mape": False, "grid_points": 21},
    "robustness": {"variants": ["ANN", "ANNWT"], "sweep": "vary_p",
                   "levels": None, "fixed_d": 0.2, "fixed_p": 0.3},
    "explain": {"target": None, "fc_points": 20, "alpha_points": 24,
                "population": 60, "generations": 100,
                "shap_background": 32},
}

STAGES = ["synth", "features", "select", "screen", "train", "codes",
          "evaluate", "robustness", "sensitivity", "explain"]


def deep_update(base: dict, extra: dict) -> dict:
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            deep_update(base[k], v)
        else:
            base[k] = v
    return base


def load_config(path: str | None, overrides) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        with open(path, encoding="utf-8") as fh:
            deep_update(cfg, yaml.safe_load(fh) or {})
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        value = yaml.safe_load(raw)
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = value
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(outdir: Path, stage: str, cfg: dict, artifacts: list[Path]) -> Path:
    doc = {
        "config_hash": config_hash(cfg),
        "master_seed": cfg["master_seed"],
        "stage": stage,
        "artifact_list": {p.name: _sha256(p) for p in artifacts},
        "versions": {"cfstcap": __version__, "model_format": 1},
    }
    path = outdir / f"manifest_{stage}.json"
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    return path


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for c in row:
            if isinstance(c, float):
                cells.append(repr(c))
            else:
                cells.append(str(c))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def _dataset(cfg: dict, outdir: Path) -> Dataset:
    src = cfg["data"]["source"]
    screened = outdir / "dataset_screened.csv"
    if screened.exists():
        return _with_split(load_csv(screened, cfg["data"]["range_mode"]), cfg)
    if src == "synthetic":
        path = outdir / "dataset.csv"
        if not path.exists():
            raise DataError("no dataset present; run the synth stage first")
        return _with_split(load_csv(path, cfg["data"]["range_mode"]), cfg)
    return _with_split(load_csv(src, cfg["data"]["range_mode"]), cfg)


def _with_split(ds: Dataset, cfg: dict) -> Dataset:
    return Dataset(specimens=ds.specimens,
                   split_seed=named_seed(cfg["master_seed"], "split") % 2**31,
                   split_fraction=cfg["split"]["fraction"])


def _selected_features(cfg: dict, outdir: Path) -> list[str]:
    path = outdir / "selected_features.json"
    if path.exists():
        return json.loads(path.read_text())["selected"]
    return select_features([], [], [], cfg["features"]["k"], mode="paper_fixed")


def _train_config(cfg: dict) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(epochs=t["epochs"], batch_size=t["batch_size"],
                       learning_rate=t["learning_rate"],
                       early_stop_patience=t["patience"],
                       seed=named_seed(cfg["master_seed"], "train") % 2**31,
                       hidden_layers=t["hidden_layers"],
                       hidden_units=t["hidden_units"])


def _constraint_spec(cfg: dict) -> ConstraintSpec:
    c = cfg["constraints"]
    upper = c["upper_factor"]
    return ConstraintSpec(gamma=c["gamma"], lower_factor=c["lower_factor"],
                          upper_factor=float("inf") if upper in ("inf", None) else upper,
                          pair_budget=c["pair_budget"])


# ---------------------------------------------------------------- stages

def stage_synth(cfg, outdir: Path) -> list[Path]:
    s = cfg["data"]["synthetic"]
    ds = generate_synthetic(s["n"], named_seed(cfg["master_seed"], "synth") % 2**31,
                            s["noise_cov"])
    path = outdir / "dataset.csv"
    save_csv(ds, path)
    return [path]


def stage_features(cfg, outdir: Path) -> list[Path]:
    ds = _dataset(cfg, outdir)
    frame = build_frame(ds.specimens)
    fpath = outdir / "features.csv"
    write_csv(fpath, list(frame.names) + ["N"],
              [list(frame.X[i]) + [float(frame.y[i])] for i in range(len(frame))])
    corr = correlation_matrix(frame)
    cpath = outdir / "correlations.csv"
    write_csv(cpath, ["feature"] + list(corr.names),
              [[corr.names[i]] + list(corr.values[i]) for i in range(len(corr.names))])
    return [fpath, cpath]


def stage_select(cfg, outdir: Path) -> list[Path]:
    ds = _dataset(cfg, outdir)
    fcfg = cfg["features"]
    frame = build_frame(ds.specimens)
    seed = named_seed(cfg["master_seed"], "select") % 2**31

    rank_pcc = rank_by_abs_correlation(frame)

    gb = fit_gradient_boosting(frame.X, frame.y, n_trees=fcfg["gb_trees"],
                               max_depth=fcfg["max_depth"], seed=seed)
    rng = np.random.default_rng(seed)
    rows = frame.X[rng.choice(len(frame), size=min(fcfg["shap_rows"], len(frame)),
                              replace=False)]
    bg = frame.X[rng.choice(len(frame), size=min(32, len(frame)), replace=False)]
    phi, _ = shapley_permutation(gb.predict, rows, bg,
                                 n_permutations=fcfg["shap_permutations"], seed=seed)
    shap_imp = global_importance(phi)
    rank_shap = [frame.names[i] for i in np.argsort(-shap_imp, kind="stable")]

    rf = fit_random_forest(frame.X, frame.y, n_trees=fcfg["rf_trees"],
                           max_depth=fcfg["max_depth"], seed=seed)
    mdi = mdi_importance(rf)
    rank_mdi = [frame.names[i] for i in np.argsort(-mdi, kind="stable")]

    selected = select_features(rank_pcc, rank_shap, rank_mdi, fcfg["k"],
                               mode=fcfg["selection_mode"])
    paths = []
    for name, ranking, scores in (
        ("importance_pcc.csv", rank_pcc, None),
        ("importance_shap.csv", rank_shap, dict(zip(frame.names, shap_imp))),
        ("importance_mdi.csv", rank_mdi, dict(zip(frame.names, mdi))),
    ):
        p = outdir / name
        write_csv(p, ["rank", "feature", "score"],
                  [[i, f, float(scores[f]) if scores else ""]
                   for i, f in enumerate(ranking)])
        paths.append(p)
    sel = outdir / "selected_features.json"
    sel.write_text(json.dumps({"mode": fcfg["selection_mode"], "selected": selected},
                              indent=1) + "\n")
    return paths + [sel]


def stage_screen(cfg, outdir: Path) -> list[Path]:
    ds = _dataset(cfg, outdir)
    a = cfg["anomaly"]
    frame = build_frame(ds.specimens, names=["D", "t", "L", "fy", "fc"])
    X = np.column_stack([frame.X, frame.y])
    n = len(ds)
    flags, scores = detect_anomalies(
        X, contamination=a["contamination"], n_trees=a["n_trees"],
        subsample=min(a["subsample"], n),
        seed=named_seed(cfg["master_seed"], "screen") % 2**31)
    spath = outdir / "anomaly_scores.csv"
    flagged = set(int(i) for i in flags)
    write_csv(spath, ["row", "source_id", "score", "flagged"],
              [[i, ds.specimens[i].source_id, float(scores[i]), int(i in flagged)]
               for i in range(n)])
    keep = [s for i, s in enumerate(ds.specimens) if i not in flagged]
    cleaned = outdir / "dataset_screened.csv"
    save_csv(Dataset(specimens=tuple(keep)), cleaned)
    return [spath, cleaned]


def stage_train(cfg, outdir: Path) -> list[Path]:
    ds = _dataset(cfg, outdir)
    features = _selected_features(cfg, outdir)
    spec = variant_spec(cfg["train"]["variant"], _constraint_spec(cfg))
    params, history = train(ds, features, spec, _train_config(cfg))
    mpath = outdir / "model.json"
    save_model(params, mpath)
    hpath = outdir / "history.csv"
    write_csv(hpath, ["epoch", "loss_supervised", "loss_approx",
                      "loss_monotone", "val_loss"],
              [list(r) for r in history.rows()])
    return [mpath, hpath]


def stage_codes(cfg, outdir: Path) -> list[Path]:
    ds = _dataset(cfg, outdir)
    opts = CodeOptions(fck_mode=cfg["codes"]["fck_mode"],
                       ec4_slenderness=cfg["codes"]["ec4_slenderness"])
    preds = predict_all(list(ds.specimens), opts)
    path = outdir / "code_predictions.csv"
    rows = []
    per_code = len(preds) // len(ds.specimens)
    for i, s in enumerate(ds.specimens):
        for p in preds[i * per_code:(i + 1) * per_code]:
            rows.append([s.source_id, p.code_id,
                         float(p.capacity_kn) if p.valid else "",
                         int(p.valid), json.dumps(p.intermediates, sort_keys=True)])
    write_csv(path, ["source_id", "code_id", "capacity_kN", "valid",
                     "intermediates_json"], rows)
    return [path]


def stage_evaluate(cfg, outdir: Path) -> list[Path]:
    mpath = outdir / "model.json"
    if not mpath.exists():
        raise DataError("evaluate requires a trained model artifact (model.json)")
    ds = _dataset(cfg, outdir)
    params = load_model(mpath)
    _, va = split(ds, ds.split_fraction, ds.split_seed)
    specimens = [ds.specimens[i] for i in va]
    preds = predict_specimens(params, specimens)
    targets = np.array([s.N for s in specimens])
    metrics = compute_metrics(targets, preds,
                              cfg["evaluation"]["paper_literal_mape"])
    mjson = outdir / "metrics.json"
    mjson.write_text(json.dumps(metrics.__dict__, sort_keys=True, indent=1) + "\n")
    grid = interval_breakdown(specimens, preds)
    gpath = outdir / "interval_grid.csv"
    write_csv(gpath, ["steel_class", "concrete_class", "n", "mape", "rmse", "r2"],
              [[c.steel_class, c.concrete_class, c.n,
                float(c.metrics.mape) if c.metrics else "",
                float(c.metrics.rmse) if c.metrics else "",
                float(c.metrics.r2) if c.metrics else ""] for c in grid.cells])
    return [mjson, gpath]


def stage_robustness(cfg, outdir: Path) -> list[Path]:
    ds = _dataset(cfg, outdir)
    r = cfg["robustness"]
    cells = robustness_sweep(ds, variants=r["variants"], sweep=r["sweep"],
                             levels=r["levels"], fixed_d=r["fixed_d"],
                             fixed_p=r["fixed_p"],
                             base_spec=_constraint_spec(cfg),
                             config=_train_config(cfg),
                             feature_order=_selected_features(cfg, outdir),
                             seed=named_seed(cfg["master_seed"], "robustness") % 2**31)
    path = outdir / "robustness.csv"
    write_csv(path, ["variant", "level", "mape", "error"],
              [[c.variant, float(c.level),
                float(c.mape) if c.mape is not None else "", c.error]
               for c in cells])
    return [path]


def stage_sensitivity(cfg, outdir: Path) -> list[Path]:
    mpath = outdir / "model.json"
    if not mpath.exists():
        raise DataError("sensitivity requires a trained model artifact (model.json)")
    ds = _dataset(cfg, outdir)
    params = load_model(mpath)
    frame = build_frame(ds.specimens).select(list(params.feature_order))
    values = sensitivity(lambda rows: predict_rows(params, rows), frame.X,
                         cfg["evaluation"]["grid_points"])
    path = outdir / "sensitivity.csv"
    write_csv(path, ["feature", "sensitivity_pct"],
              [[n, float(v)] for n, v in zip(params.feature_order, values)])
    return [path]


def stage_explain(cfg, outdir: Path) -> list[Path]:
    mpath = outdir / "model.json"
    if not mpath.exists():
        raise DataError("explain requires a trained model artifact (model.json)")
    ds = _dataset(cfg, outdir)
    params = load_model(mpath)
    e = cfg["explain"]
    target = e["target"]
    if target is None:
        target = float(np.median([s.N for s in ds.specimens]))
    ga = GaConfig(population=e["population"], generations=e["generations"],
                  seed=named_seed(cfg["master_seed"], "explain") % 2**31)
    fc_lo, fc_hi = ga.bounds["fc"]
    samples = build_dependence_grid(
        params, target,
        fc_grid=np.linspace(fc_lo, fc_hi, e["fc_points"]),
        alpha_grid=np.linspace(0.05, 0.5, e["alpha_points"]),
        config=ga, shap_background_size=e["shap_background"])
    dpath = outdir / "dependence.csv"
    write_csv(dpath, ["fc_MPa", "alpha_sc", "D_mm", "t_mm", "L_mm", "fy_MPa",
                      "pred_kN", "shap_fc", "shap_alpha", "valid"],
              [[float(s.fc), float(s.alpha_sc),
                float(s.specimen.D) if s.valid else "",
                float(s.specimen.t) if s.valid else "",
                float(s.specimen.L) if s.valid else "",
                float(s.specimen.fy) if s.valid else "",
                float(s.pred_kn) if s.valid else "",
                float(s.shap_fc) if s.shap_fc is not None else "",
                float(s.shap_alpha) if s.shap_alpha is not None else "",
                int(s.valid)] for s in samples])
    curve = optimal_alpha_curve(samples)
    gpath = outdir / "guidance.csv"
    write_csv(gpath, ["fc_MPa", "optimal_alpha_sc"],
              [[float(fc), float(a)] for fc, a in curve])
    return [dpath, gpath]


STAGE_FUNCS = {
    "synth": stage_synth,
    "features": stage_features,
    "select": stage_select,
    "screen": stage_screen,
    "train": stage_train,
    "codes": stage_codes,
    "evaluate": stage_evaluate,
    "robustness": stage_robustness,
    "sensitivity": stage_sensitivity,
    "explain": stage_explain,
}


def run_stage(name: str, cfg: dict) -> list[Path]:
    outdir = Path(cfg["output_dir"])
    outdir.mkdir(parents=True, exist_ok=True)
    artifacts = STAGE_FUNCS[name](cfg, outdir)
    manifest = write_manifest(outdir, name, cfg, artifacts)
    return artifacts + [manifest]


def run_pipeline(cfg: dict) -> list[Path]:
    order = STAGES if cfg["data"]["source"] == "synthetic" else STAGES[1:]
    out = []
    for name in order:
        out.extend(run_stage(name, cfg))
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cfstcap",
        description="CFST axial capacity pipeline: synthetic data, feature "
                    "selection, constrained network training, design-code "
                    "baselines, robustness and explanation harnesses.")
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--set", action="append", dest="overrides",
                        metavar="KEY=VALUE", help="override a config entry")
    parser.add_argument("stage", choices=STAGES + ["pipeline"],
                        help="pipeline stage to run")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config, args.overrides)
        if args.stage == "pipeline":
            artifacts = run_pipeline(cfg)
        else:
            artifacts = run_stage(args.stage, cfg)
        for p in artifacts:
            print(p)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
