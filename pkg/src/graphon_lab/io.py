"""File formats: CSV matrices and JSON sidecars.

Matrices travel as plain CSV (one row per line, comma-separated decimal
floats).  Structured results travel as JSON.  All floats are emitted with
17 significant digits so that values round-trip exactly.

Fixed field names
-----------------
``meta.json``    : n, m, noise_model, rho, seed, missing_p,
                   with_second_copy, graphon
``latents.json`` : U, V
``model.json``   : K, L, n, m, Q (row-major), row_labels, col_labels,
                   cost_trajectory, iterations, init, restart_index, seed
``ewa.json``     : beta, grid, weights, aggregate_path
``metrics.json`` : any of mse_theta, delta_tilde, oracle_mse, rate_bound
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .core import AssignmentMatrix, BlockModel, NoiseModel
from .estimation import FitReport

__all__ = [
    "save_matrix",
    "load_matrix",
    "dump_json",
    "load_json",
    "model_to_dict",
    "model_from_dict",
    "report_to_dict",
]

PathLike = Union[str, Path]

FLOAT_FMT = "%.17g"


def save_matrix(path: PathLike, M: np.ndarray) -> None:
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    np.savetxt(path, M, fmt=FLOAT_FMT, delimiter=",")


def load_matrix(path: PathLike) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)


def _render(obj, indent: int = 0) -> str:
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {_render(v, indent + 2)}'
            for k, v in obj.items()
        )
        return "{\n" + items + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        flat = all(not isinstance(v, (dict, list, tuple)) for v in seq)
        if flat:
            return "[" + ", ".join(_render(v) for v in seq) + "]"
        items = ",\n".join(f"{pad}  {_render(v, indent + 2)}" for v in seq)
        return "[\n" + items + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return FLOAT_FMT % float(obj)
    if isinstance(obj, np.ndarray):
        return _render(obj.tolist(), indent)
    return json.dumps(obj)


def dump_json(path: PathLike, obj) -> None:
    """Write JSON with floats at full (17 significant digit) precision."""
    Path(path).write_text(_render(obj) + "\n")


def load_json(path: PathLike):
    return json.loads(Path(path).read_text())


def model_to_dict(model: BlockModel) -> dict:
    return {
        "K": model.K,
        "L": model.L,
        "n": model.n,
        "m": model.m,
        "Q": [float(x) for x in model.Q.ravel()],
        "row_labels": model.z_rows.labels.tolist(),
        "col_labels": model.z_cols.labels.tolist(),
    }


def model_from_dict(d: dict) -> BlockModel:
    K, L = int(d["K"]), int(d["L"])
    Q = np.asarray(d["Q"], dtype=np.float64).reshape(K, L)
    zr = AssignmentMatrix(int(d["n"]), K, np.asarray(d["row_labels"]))
    zc = AssignmentMatrix(int(d["m"]), L, np.asarray(d["col_labels"]))
    return BlockModel(Q, zr, zc)


def report_to_dict(report: FitReport) -> dict:
    d = model_to_dict(report.model)
    d.update(
        {
            "cost_trajectory": [float(c) for c in report.cost_trajectory],
            "iterations": report.iterations,
            "init": report.init_used,
            "restart_index": report.restart_index,
            "seed": report.seed,
        }
    )
    return d


def noise_to_dict(noise: NoiseModel) -> dict:
    return noise.to_dict()


def noise_from_dict(d: dict) -> NoiseModel:
    return NoiseModel.from_dict(d)
