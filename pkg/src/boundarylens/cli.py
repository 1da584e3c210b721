"""Experiment runner: dataset generation, training under the four
initialization schemes, Hessian/alignment analysis, margin estimation, and
multi-seed comparison tables.

Commands exchange plain CSV/JSON artifacts; every report embeds the sha256
fingerprint of its fully resolved configuration. Exit codes: 0 ok, 2
config/usage error, 3 data/IO error, 4 numeric failure.
"""

import argparse
import copy
import json
import os
import sys

import numpy as np

from . import alignment as alignment_mod
from . import analysis, curvature, datasets, linalg, losses, network, serialize, training
from .errors import (
    AuxTrainingFailedError,
    BadMagicError,
    DatasetParseError,
    DivergedError,
    NoProgressError,
    NotEnoughSamplesError,
    NotSymmetricError,
    TruncatedFileError,
    UnknownKindError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

CONFIG_ERRORS = (UnknownKindError, KeyError, TypeError)
DATA_ERRORS = (DatasetParseError, BadMagicError, TruncatedFileError, NotEnoughSamplesError)
NUMERIC_ERRORS = (DivergedError, NoProgressError, AuxTrainingFailedError, NotSymmetricError)

DEFAULT_CONFIG = {
    "dataset": {"kind": "gaussian", "n_per_class": 100, "seed": 7,
                "params": {}, "downsample": False},
    "model": {"hidden": [32, 32], "activation": "relu"},
    "training": {
        "scheme": "normal",
        "seed": 0,
        "seeds": [0],
        "checkpoint_at": [],
        "optimizer": {"kind": "sgd", "learning_rate": 0.2, "batch_size": 64,
                      "beta1": 0.9, "beta2": 0.999, "eps": 1e-8,
                      "weight_decay": 0.0, "rms_alpha": 0.99},
        "stop": {"max_epochs": 5000, "loss_window": 20, "loss_tol": 1e-5,
                 "require_full_train_accuracy": True},
        "loss": {"kind": "cross_entropy", "reduction": "mean"},
        "init": {"target_norm": 100.0, "pretrain_n_per_class": 100,
                 "pretrain_seed": 0,
                 "aux_optimizer": {"kind": "adam", "learning_rate": 0.01,
                                   "batch_size": 64},
                 "aux_max_epochs": 5000},
    },
    "analysis": {
        "k": 5,
        "grid": {"resolution": 100, "expand": 0.1},
        "epsilon": {"n_directions": 5, "seed": 1234, "aggregate": "mean_of_max"},
        "margin": {"max_iter": 500, "target": 0.999, "expand": 0.1},
    },
    "output": "out",
}


def _deep_merge(base, override):
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(path):
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    with open(path) as fh:
        user = json.load(fh)
    if not isinstance(user, dict):
        raise UnknownKindError("config root must be a JSON object")
    return _deep_merge(DEFAULT_CONFIG, user)


def load_dataset(cfg):
    block = cfg["dataset"]
    kind = block["kind"]
    if kind == "csv":
        data = datasets.dataset_from_csv(block["path"])
    elif kind == "mnist":
        data = datasets.load_mnist_subset(
            block["images"], block["labels"], block["digits"],
            block["per_class"], block["seed"],
        )
    elif kind in datasets.SYNTHETIC_KINDS:
        data = datasets.gen_synthetic(
            kind, block["n_per_class"], block["seed"], block.get("params") or None
        )
    else:
        raise UnknownKindError(
            f"unknown dataset kind {kind!r}; valid kinds: csv, mnist, "
            + ", ".join(datasets.SYNTHETIC_KINDS)
        )
    if block.get("downsample"):
        data = datasets.downsample_images(data)
    return data


def _loss_kind(cfg):
    block = cfg["training"]["loss"]
    return losses.LossKind(block["kind"], block["reduction"])


def _optimizer(cfg, seed):
    block = cfg["training"]["optimizer"]
    return training.OptimizerConfig(shuffle_seed=seed, **block)


def _stop(cfg):
    return training.StopCriteria(**cfg["training"]["stop"])


def _init_options(cfg, seed):
    block = cfg["training"]["init"]
    aux = dict(block["aux_optimizer"])
    aux.setdefault("shuffle_seed", seed)
    return training.InitOptions(
        target_norm=block["target_norm"],
        aux_optimizer=training.OptimizerConfig(**aux),
        aux_stop=training.StopCriteria(max_epochs=block["aux_max_epochs"]),
        pretrain_n_per_class=block["pretrain_n_per_class"],
        pretrain_seed=block["pretrain_seed"],
        loss=_loss_kind(cfg),
    )


def _model_spec(cfg, data):
    block = cfg["model"]
    return network.NetworkSpec(
        (data.d, *block["hidden"], data.C), block["activation"]
    )


def _grid_for(cfg, data):
    block = cfg["analysis"]["grid"]
    if all(k in block for k in ("x_min", "x_max", "y_min", "y_max")):
        return datasets.GridSpec(block["x_min"], block["x_max"],
                                 block["y_min"], block["y_max"],
                                 block["resolution"])
    lo, hi = analysis.data_bounds(data.X, expand=block.get("expand", 0.1))
    return datasets.GridSpec(lo[0], hi[0], lo[1], hi[1], block["resolution"])


def _train_once(cfg, data, scheme, seed, checkpoint_at=()):
    spec = _model_spec(cfg, data)
    loss = _loss_kind(cfg)
    theta0 = training.make_init(scheme, spec, data, seed, _init_options(cfg, seed))
    theta, report = training.train(
        spec, theta0, data, _optimizer(cfg, seed), _stop(cfg),
        checkpoint_at=checkpoint_at, loss=loss,
    )
    return spec, theta, report


def _analysis_measures(cfg, spec, theta, data):
    """Shared analysis core: Hessian spectrum, epsilon, G, classical measures."""
    loss = _loss_kind(cfg)
    eps_cfg = cfg["analysis"]["epsilon"]
    hessian = curvature.dense_hessian(spec, theta, data, loss)
    decomp = linalg.eigh_symmetric(hessian)
    outliers = curvature.spectrum_outliers(decomp.eigenvalues, data.C)
    epsilon = alignment_mod.random_direction_epsilon(
        spec, theta, data, n_directions=eps_cfg["n_directions"],
        seed=eps_cfg["seed"], aggregate=eps_cfg["aggregate"],
    )
    am = alignment_mod.alignment_matrix(spec, theta, data, decomp, k=decomp.dim)
    m, g_value = analysis.generalization_measure(am, epsilon)
    trace, lambda_max, param_norm = analysis.classical_measures(decomp, theta)
    return {
        "decomp": decomp, "outliers": outliers, "epsilon": epsilon,
        "am": am, "m": m, "G": g_value, "trace": trace,
        "lambda_max": lambda_max, "param_norm": param_norm,
    }


def _ensure_out(path):
    os.makedirs(path, exist_ok=True)
    return path


def cmd_gen_data(args):
    data = datasets.gen_synthetic(args.kind, args.n_per_class, args.seed)
    out_dir = _ensure_out(args.out)
    path = os.path.join(out_dir, f"{args.kind}.csv")
    datasets.dataset_to_csv(data, path)
    print(path)
    return EXIT_OK


def cmd_train(args):
    cfg = load_config(args.config)
    if args.out:
        cfg["output"] = args.out
    if args.scheme:
        cfg["training"]["scheme"] = args.scheme
    if args.seed is not None:
        cfg["training"]["seed"] = args.seed
    if args.checkpoint_at is not None:
        cfg["training"]["checkpoint_at"] = [int(v) for v in args.checkpoint_at.split(",") if v != ""]
    fingerprint = serialize.config_fingerprint(cfg)
    data = load_dataset(cfg)
    scheme = cfg["training"]["scheme"]
    seed = cfg["training"]["seed"]
    checkpoints = cfg["training"]["checkpoint_at"]
    spec, theta, report = _train_once(cfg, data, scheme, seed, checkpoints)
    out_dir = _ensure_out(cfg["output"])
    serialize.params_to_json(spec, theta, os.path.join(out_dir, "params.json"))
    serialize.train_report_to_json(
        report, os.path.join(out_dir, "train_report.json"), fingerprint=fingerprint
    )
    for epoch, params in zip(report.checkpoint_epochs, report.checkpoint_params):
        serialize.params_to_json(
            spec, params, os.path.join(out_dir, f"checkpoint_{epoch}.json")
        )
    print(os.path.join(out_dir, "params.json"))
    return EXIT_OK


def _read_params(path):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    return serialize.params_from_json(path)


def cmd_analyze(args):
    cfg = load_config(args.config)
    if args.out:
        cfg["output"] = args.out
    fingerprint = serialize.config_fingerprint(cfg)
    data = load_dataset(cfg)
    spec, theta = _read_params(args.params)
    out_dir = _ensure_out(cfg["output"])
    k = min(cfg["analysis"]["k"], network.param_count(spec))
    loss = _loss_kind(cfg)

    measures = _analysis_measures(cfg, spec, theta, data)
    decomp = measures["decomp"]
    serialize.spectrum_to_json(
        decomp.eigenvalues, measures["outliers"], os.path.join(out_dir, "spectrum.json")
    )
    serialize.write_matrix_csv(
        decomp.eigenvalues[:, None], os.path.join(out_dir, "spectrum.csv")
    )
    am_csv = alignment_mod.AlignmentMatrix(
        measures["am"].values[:, :k], np.arange(k), measures["am"].sample_ids
    )
    serialize.alignment_matrix_to_csv(
        am_csv, data.y, os.path.join(out_dir, "alignment_matrix.csv")
    )
    eps_cfg = cfg["analysis"]["epsilon"]
    report = analysis.GeneralizationReport(
        G=measures["G"], epsilon=measures["epsilon"],
        mean_abs_alignment=measures["m"], trace=measures["trace"],
        lambda_max=measures["lambda_max"], param_norm=measures["param_norm"],
        outlier_count=measures["outliers"],
        metadata={
            "config_fingerprint": fingerprint,
            "dataset": data.name,
            "n_samples": data.n,
            "n_parameters": network.param_count(spec),
            "epsilon_directions": eps_cfg["n_directions"],
            "epsilon_seed": eps_cfg["seed"],
            "epsilon_aggregate": eps_cfg["aggregate"],
        },
    )
    serialize.generalization_report_to_json(
        report, os.path.join(out_dir, "generalization_report.json")
    )
    if data.d == 2:
        grid = _grid_for(cfg, data)
        field = alignment_mod.grid_alignment_field(spec, theta, decomp, k, grid)
        serialize.grid_field_to_csvs(field, out_dir, prefix="grid")
    if args.per_class is not None:
        c = args.per_class
        class_data = data.take(np.flatnonzero(data.y == c), name=f"{data.name}_class{c}")
        class_hessian = curvature.dense_hessian(spec, theta, class_data, loss)
        class_decomp = linalg.eigh_symmetric(class_hessian)
        class_outliers = curvature.spectrum_outliers(class_decomp.eigenvalues, data.C)
        serialize.spectrum_to_json(
            class_decomp.eigenvalues, class_outliers,
            os.path.join(out_dir, f"class{c}_spectrum.json"),
        )
        if data.d == 2:
            grid = _grid_for(cfg, data)
            field = alignment_mod.grid_alignment_field(spec, theta, class_decomp, k, grid)
            serialize.grid_field_to_csvs(field, out_dir, prefix=f"class{c}_grid")
    print(os.path.join(out_dir, "generalization_report.json"))
    return EXIT_OK


def cmd_margin(args):
    cfg = load_config(args.config)
    if args.out:
        cfg["output"] = args.out
    fingerprint = serialize.config_fingerprint(cfg)
    data = load_dataset(cfg)
    spec, theta = _read_params(args.params)
    loss = _loss_kind(cfg)
    margin_cfg = cfg["analysis"]["margin"]
    hessian = curvature.dense_hessian(spec, theta, data, loss)
    decomp = linalg.eigh_symmetric(hessian)
    bounds = analysis.data_bounds(data.X, expand=margin_cfg["expand"])
    estimate = analysis.estimate_margin(
        spec, theta, decomp, data, bounds=bounds,
        max_iter=margin_cfg["max_iter"], target=margin_cfg["target"],
    )
    out_dir = _ensure_out(cfg["output"])
    path = os.path.join(out_dir, "margin_estimate.json")
    serialize.margin_estimate_to_json(estimate, path, fingerprint=fingerprint)
    print(path)
    return EXIT_OK


MEASURE_COLUMNS = ("G", "trace", "lambda_max", "param_norm")


def cmd_compare(args):
    cfg = load_config(args.config)
    if args.out:
        cfg["output"] = args.out
    if args.schemes:
        schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
    else:
        schemes = ["normal", "adversarial"]
    fingerprint = serialize.config_fingerprint(cfg)
    data = load_dataset(cfg)
    seeds = cfg["training"]["seeds"]
    out_dir = _ensure_out(cfg["output"])
    runs = []
    for scheme in schemes:
        for seed in seeds:
            spec, theta, report = _train_once(cfg, data, scheme, seed)
            measures = _analysis_measures(cfg, spec, theta, data)
            runs.append({
                "scheme": scheme,
                "seed": seed,
                "epochs_run": report.epochs_run,
                "final_train_accuracy": report.final_train_accuracy,
                "G": measures["G"],
                "epsilon": measures["epsilon"],
                "trace": measures["trace"],
                "lambda_max": measures["lambda_max"],
                "param_norm": measures["param_norm"],
                "outlier_count": measures["outliers"],
            })
    rows = []
    for scheme in schemes:
        values = [r for r in runs if r["scheme"] == scheme]
        stats = {}
        for measure in MEASURE_COLUMNS:
            samples = np.array([r[measure] for r in values])
            stats[f"{measure}_mean"] = float(np.mean(samples))
            stats[f"{measure}_std"] = float(np.std(samples))
        rows.append((scheme, stats))
    serialize.comparison_to_csv(rows, MEASURE_COLUMNS, os.path.join(out_dir, "comparison.csv"))
    serialize.write_json(
        {"config_fingerprint": fingerprint, "runs": runs},
        os.path.join(out_dir, "comparison_runs.json"),
    )
    if args.reparam_check:
        _reparam_check(cfg, data, seeds, fingerprint, out_dir)
    print(os.path.join(out_dir, "comparison.csv"))
    return EXIT_OK


def _reparam_check(cfg, data, seeds, fingerprint, out_dir, alpha=2.0):
    """Layer-rescaling invariance probe: identical predictions, shifted
    spectrum, unchanged alignment-count measure."""
    results = []
    for seed in seeds:
        spec, theta, _ = _train_once(cfg, data, "normal", seed)
        scaled = network.alpha_scale(theta, alpha, spec)
        rng = np.random.default_rng(seed)
        lo, hi = analysis.data_bounds(data.X)
        probes = rng.uniform(lo, hi, size=(1000, data.d))
        deviation = float(np.max(np.abs(
            network.forward(spec, theta, probes) - network.forward(spec, scaled, probes)
        )))
        base = _analysis_measures(cfg, spec, theta, data)
        moved = _analysis_measures(cfg, spec, scaled, data)
        results.append({
            "seed": seed,
            "max_logit_deviation": deviation,
            "trace_original": base["trace"],
            "trace_scaled": moved["trace"],
            "delta_trace_relative": abs(moved["trace"] - base["trace"]) / abs(base["trace"]),
            "G_original": base["G"],
            "G_scaled": moved["G"],
            "delta_G": abs(moved["G"] - base["G"]),
        })
    serialize.write_json(
        {"alpha": alpha, "config_fingerprint": fingerprint, "runs": results},
        os.path.join(out_dir, "reparam_check.json"),
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="boundarylens",
        description="Train small dense classifiers and analyze their loss "
                    "curvature and decision boundaries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-data", help="generate a synthetic dataset CSV")
    g.add_argument("--kind", required=True)
    g.add_argument("--n-per-class", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="out")
    g.set_defaults(func=cmd_gen_data)

    t = sub.add_parser("train", help="train a model per the config")
    t.add_argument("--config")
    t.add_argument("--out")
    t.add_argument("--scheme", choices=training.INIT_SCHEMES)
    t.add_argument("--seed", type=int)
    t.add_argument("--checkpoint-at", dest="checkpoint_at",
                   help="comma-separated epochs; 0 means the initialization")
    t.set_defaults(func=cmd_train)

    a = sub.add_parser("analyze", help="spectrum, alignments, and the G report")
    a.add_argument("--config")
    a.add_argument("--params", required=True)
    a.add_argument("--out")
    a.add_argument("--per-class", dest="per_class", type=int)
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("margin", help="estimate the decision-boundary margin")
    m.add_argument("--config")
    m.add_argument("--params", required=True)
    m.add_argument("--out")
    m.set_defaults(func=cmd_margin)

    c = sub.add_parser("compare", help="mean/std measure table over seeds and schemes")
    c.add_argument("--config")
    c.add_argument("--out")
    c.add_argument("--schemes")
    c.add_argument("--reparam-check", dest="reparam_check", action="store_true")
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        missing = str(exc)
        # missing config or params files are usage errors; missing data files are not
        for attr in ("config", "params"):
            value = getattr(args, attr, None)
            if value and value in missing:
                print(f"error: {attr} file not found: {value}", file=sys.stderr)
                return EXIT_CONFIG
        print(f"error: missing file: {missing}", file=sys.stderr)
        return EXIT_DATA
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
