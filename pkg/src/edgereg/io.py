"""File formats: CSV datasets with JSON sidecars, ground-truth bundles, the
binary draw archive, graph documents (JSON + DOT), diagnostics logs, and
evaluation CSVs.

All writers are deterministic functions of their inputs (no timestamps, no
locale-dependent formatting), so identical runs produce identical bytes.
The draw archive stores raw little-endian float64/int64 columns next to a
JSON manifest describing shapes, dtypes, levels, and the configuration hash.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .inference import GraphEstimate, PosteriorDraws
from .model import Dataset, edge_pairs
from .simulate import GroundTruth

__all__ = [
    "config_hash",
    "save_dataset",
    "load_dataset",
    "save_truth",
    "load_truth",
    "save_draws",
    "load_draws",
    "graph_to_json",
    "graph_to_dot",
    "write_diagnostics_log",
    "read_diagnostics_log",
    "write_eval_csv",
    "write_json",
    "ArchiveMismatch",
]

def _fmt(v: float) -> str:
    """Shortest decimal that round-trips to the same float64."""
    return repr(float(v))


class ArchiveMismatch(RuntimeError):
    """An existing archive was produced under a different configuration."""


def config_hash(config: dict) -> str:
    payload = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def write_json(path: Path, obj) -> None:
    """Sorted-key JSON with a trailing newline (deterministic bytes)."""
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_matrix_csv(path: Path, mat: np.ndarray, header: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in np.atleast_2d(mat):
            writer.writerow([_fmt(v) for v in row])


def _read_matrix_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    return header, np.asarray(rows, dtype=np.float64)


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


def save_dataset(data: Dataset, path: Path, meta: dict | None = None) -> None:
    """One CSV with observation and covariate columns plus a JSON sidecar
    carrying names, standardization metadata, and caller-supplied fields."""
    path = Path(path)
    header = [f"y:{n}" for n in data.node_names] + [f"x:{n}" for n in data.covariate_names]
    _write_matrix_csv(path, np.hstack([data.y, data.x]), header)
    sidecar = {
        "node_names": list(data.node_names),
        "covariate_names": list(data.covariate_names),
        "standardized": data.standardized,
        "y_means": None if data.y_means is None else list(map(float, data.y_means)),
        "y_sds": None if data.y_sds is None else list(map(float, data.y_sds)),
    }
    if meta:
        sidecar["meta"] = meta
    write_json(path.with_suffix(".json"), sidecar)


def load_dataset(path: Path) -> Dataset:
    path = Path(path)
    header, mat = _read_matrix_csv(path)
    sidecar = json.loads(path.with_suffix(".json").read_text())
    p = len(sidecar["node_names"])
    return Dataset(
        y=mat[:, :p],
        x=mat[:, p:],
        node_names=tuple(sidecar["node_names"]),
        covariate_names=tuple(sidecar["covariate_names"]),
        standardized=sidecar["standardized"],
        y_means=None if sidecar["y_means"] is None else np.array(sidecar["y_means"]),
        y_sds=None if sidecar["y_sds"] is None else np.array(sidecar["y_sds"]),
    )


def save_truth(truth: GroundTruth, stem: Path, meta: dict | None = None) -> None:
    """Component matrices as CSV plus a JSON sidecar with true edge lists."""
    stem = Path(stem)
    p = truth.p
    names = [f"node{k}" for k in range(p)]
    _write_matrix_csv(stem.with_name(stem.name + "_omega_normal.csv"), truth.omega_n, names)
    _write_matrix_csv(stem.with_name(stem.name + "_omega_tumor.csv"), truth.omega_t, names)
    pairs = edge_pairs(p)
    sidecar = {
        "p": p,
        "edges_normal": [[int(pairs[e, 0]), int(pairs[e, 1])]
                         for e in sorted(truth.edge_set("normal"))],
        "edges_tumor": [[int(pairs[e, 0]), int(pairs[e, 1])]
                        for e in sorted(truth.edge_set("tumor"))],
    }
    if meta:
        sidecar["meta"] = meta
    write_json(stem.with_name(stem.name + "_truth.json"), sidecar)


def load_truth(stem: Path) -> GroundTruth:
    stem = Path(stem)
    _, omega_n = _read_matrix_csv(stem.with_name(stem.name + "_omega_normal.csv"))
    _, omega_t = _read_matrix_csv(stem.with_name(stem.name + "_omega_tumor.csv"))
    return GroundTruth(omega_n=omega_n, omega_t=omega_t)


# ---------------------------------------------------------------------------
# Draw archive
# ---------------------------------------------------------------------------

_ARRAY_FIELDS = ("rho", "beta", "omega", "draw_iterations", "levels", "rho_subject")


def save_draws(draws: PosteriorDraws, directory: Path, config: dict) -> None:
    """Write the archive: one raw binary file per array plus manifest.json.

    Refuses to overwrite an archive produced under a different config hash.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest_path = directory / "manifest.json"
    new_hash = config_hash(config)
    if manifest_path.exists():
        old = json.loads(manifest_path.read_text())
        if old.get("config_hash") != new_hash:
            raise ArchiveMismatch(
                f"archive at {directory} was written with config hash "
                f"{old.get('config_hash')}, current is {new_hash}; "
                "choose a fresh output directory"
            )
    arrays = {}
    for name in _ARRAY_FIELDS:
        arr = getattr(draws, name)
        if arr is None:
            continue
        arr = np.ascontiguousarray(arr)
        dtype = "<i8" if arr.dtype.kind == "i" else "<f8"
        arr.astype(dtype).tofile(directory / f"{name}.bin")
        arrays[name] = {"shape": list(arr.shape), "dtype": dtype}
    manifest = {
        "format": "edgereg-draws-v1",
        "arrays": arrays,
        "config": config,
        "config_hash": new_hash,
    }
    write_json(manifest_path, manifest)


def load_draws(directory: Path) -> tuple[PosteriorDraws, dict]:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    if manifest.get("format") != "edgereg-draws-v1":
        raise ArchiveMismatch(f"unrecognized archive format in {directory}")
    fields = {}
    for name, info in manifest["arrays"].items():
        arr = np.fromfile(directory / f"{name}.bin", dtype=info["dtype"])
        fields[name] = arr.reshape(info["shape"])
    draws = PosteriorDraws(
        levels=fields["levels"],
        rho=fields["rho"],
        beta=fields["beta"],
        omega=fields["omega"],
        draw_iterations=fields["draw_iterations"].astype(np.int64),
        rho_subject=fields.get("rho_subject"),
    )
    return draws, manifest


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


def graph_to_json(est: GraphEstimate, node_names, p: int) -> dict:
    pairs = edge_pairs(p)
    edges = []
    for e in sorted(est.selected):
        i, j = int(pairs[e, 0]), int(pairs[e, 1])
        rho = float(est.rho_mean[e])
        edges.append({
            "i": i,
            "j": j,
            "node_i": node_names[i],
            "node_j": node_names[j],
            "rho_mean": rho,
            "ppi": float(est.ppi[e]),
            "sign": 1 if rho > 0 else (-1 if rho < 0 else 0),
        })
    return {
        "level": list(map(float, np.atleast_1d(est.level))),
        "kappa": est.kappa,
        "alpha": est.alpha,
        "fdr_threshold": est.fdr_threshold,
        "n_nodes": p,
        "edges": edges,
    }


def graph_to_dot(est: GraphEstimate, node_names, p: int) -> str:
    """DOT rendering: edge color encodes the sign of the posterior-mean
    strength, width is proportional to its magnitude."""
    pairs = edge_pairs(p)
    lines = ["graph edge_regression {", "  node [shape=circle];"]
    for name in node_names:
        lines.append(f'  "{name}";')
    for e in sorted(est.selected):
        i, j = int(pairs[e, 0]), int(pairs[e, 1])
        rho = float(est.rho_mean[e])
        color = "green" if rho > 0 else "red"
        width = 0.5 + 6.0 * abs(rho)
        lines.append(
            f'  "{node_names[i]}" -- "{node_names[j]}" '
            f'[color={color}, penwidth={width:.3f}];'
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Diagnostics log and evaluation tables
# ---------------------------------------------------------------------------


def write_diagnostics_log(records, path: Path) -> None:
    """Line-delimited JSON, one record per iteration."""
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")


def read_diagnostics_log(path: Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


EVAL_COLUMNS = ["method", "graph", "replicate", "seed", "tpr", "fpr",
                "auc1", "auc2", "bauc", "tpr_at_fpr10"]


def write_eval_csv(rows, path: Path) -> None:
    """Per-replicate metric rows in a fixed column layout."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=EVAL_COLUMNS)
        writer.writeheader()
        for row in rows:
            out = dict(row)
            for key in EVAL_COLUMNS:
                val = out.get(key, "")
                if isinstance(val, float):
                    out[key] = _fmt(val)
            writer.writerow({k: out.get(k, "") for k in EVAL_COLUMNS})
