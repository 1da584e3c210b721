"""CSV/JSON emission for matrices, parameters, spectra, alignments, and
reports. Floats carry 17 significant digits in CSV and repr precision in
JSON, so artifacts round-trip bit-exactly and identical runs produce
byte-identical files."""

import hashlib
import json

import numpy as np

from .network import NetworkSpec, param_count
from .errors import ShapeMismatchError


def canonical_json(obj):
    """Deterministic JSON text: sorted keys, fixed separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_fingerprint(config):
    """sha256 of the canonical JSON of a resolved configuration."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()


def write_json(obj, path):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, sort_keys=True, indent=2))
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def write_matrix_csv(matrix, path):
    """Row-major CSV, '.' decimal separator, newline-terminated rows."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w") as fh:
        for row in m:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_matrix_csv(path):
    with open(path) as fh:
        rows = [
            [float(v) for v in line.split(",")]
            for line in fh.read().splitlines() if line
        ]
    return np.asarray(rows, dtype=np.float64)


def params_to_json(spec, theta, path=None):
    """Parameter document {layer_widths, activation, values} in layout order."""
    theta = np.asarray(theta, dtype=np.float64)
    if theta.size != param_count(spec):
        raise ShapeMismatchError(
            f"theta has {theta.size} values, spec needs {param_count(spec)}"
        )
    doc = {
        "layer_widths": list(spec.layer_widths),
        "activation": spec.activation,
        "values": theta.tolist(),
    }
    if path is not None:
        write_json(doc, path)
    return doc


def params_from_json(source):
    """Accepts a parsed document or a path; returns (spec, theta)."""
    doc = read_json(source) if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__") else source
    spec = NetworkSpec(tuple(doc["layer_widths"]), doc["activation"])
    theta = np.asarray(doc["values"], dtype=np.float64)
    if theta.size != param_count(spec):
        raise ShapeMismatchError("values length does not match layer_widths")
    return spec, theta


def train_report_to_json(report, path=None, fingerprint=None):
    doc = {
        "epochs_run": report.epochs_run,
        "final_loss": report.final_loss,
        "final_train_accuracy": report.final_train_accuracy,
        "loss_history": list(report.loss_history),
        "checkpoint_epochs": list(report.checkpoint_epochs),
    }
    if fingerprint is not None:
        doc["config_fingerprint"] = fingerprint
    if path is not None:
        write_json(doc, path)
    return doc


def spectrum_to_json(eigenvalues, outlier_count, path=None, bins=50):
    """Histogram document {bin_edges, counts, outlier_count} plus the raw
    eigenvalues for exact downstream use."""
    lam = np.asarray(eigenvalues, dtype=np.float64)
    counts, edges = np.histogram(lam, bins=bins)
    doc = {
        "bin_edges": edges.tolist(),
        "counts": counts.tolist(),
        "outlier_count": int(outlier_count),
        "eigenvalues": lam.tolist(),
    }
    if path is not None:
        write_json(doc, path)
    return doc


def alignment_matrix_to_csv(am, labels, path):
    """Header sample_id,label,A1..Ak and one row per training sample."""
    k = am.values.shape[1]
    with open(path, "w") as fh:
        fh.write(",".join(["sample_id", "label"] + [f"A{i + 1}" for i in range(k)]) + "\n")
        for sid, label, row in zip(am.sample_ids, labels, am.values):
            fh.write(f"{sid},{label}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def grid_field_to_csvs(field, out_dir, prefix="grid"):
    """One resolution x resolution CSV per eigenvector plus a predictions CSV.

    Returns the list of written paths.
    """
    paths = []
    for i, idx in enumerate(field.eigen_indices):
        path = f"{out_dir}/{prefix}_alignment_v{int(idx) + 1}.csv"
        write_matrix_csv(field.values[i], path)
        paths.append(path)
    pred_path = f"{out_dir}/{prefix}_predictions.csv"
    with open(pred_path, "w") as fh:
        for row in field.predictions:
            fh.write(",".join(str(int(v)) for v in row) + "\n")
    paths.append(pred_path)
    return paths


def generalization_report_to_json(report, path=None):
    doc = {
        "G": report.G,
        "epsilon": report.epsilon,
        "mean_abs_alignment": np.asarray(report.mean_abs_alignment).tolist(),
        "trace": report.trace,
        "lambda_max": report.lambda_max,
        "param_norm": report.param_norm,
        "outlier_count": int(report.outlier_count),
        "metadata": report.metadata,
    }
    if path is not None:
        write_json(doc, path)
    return doc


def margin_estimate_to_json(estimate, path=None, fingerprint=None):
    doc = {
        "x_b": np.asarray(estimate.x_b).tolist(),
        "x_t_min": np.asarray(estimate.x_t_min).tolist(),
        "x_t_max": np.asarray(estimate.x_t_max).tolist(),
        "d_min": estimate.d_min,
        "d_max": estimate.d_max,
        "margin": estimate.margin,
        "achieved_alignment": estimate.achieved_alignment,
        "iterations": estimate.iterations,
        "low_confidence": bool(estimate.low_confidence),
    }
    if fingerprint is not None:
        doc["config_fingerprint"] = fingerprint
    if path is not None:
        write_json(doc, path)
    return doc


def comparison_to_csv(rows, measures, path):
    """Mean/std table: one row per scheme, two columns per measure."""
    header = ["scheme"]
    for m in measures:
        header += [f"{m}_mean", f"{m}_std"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for scheme, stats in rows:
            cells = [scheme]
            for m in measures:
                cells += [f"{stats[m + '_mean']:.17g}", f"{stats[m + '_std']:.17g}"]
            fh.write(",".join(cells) + "\n")
