"""File formats: matrix/series/event CSV and partition/truth JSON."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .kernel_model import BlockPartition

MATRIX_SYMMETRY_TOL = 1e-9


def load_matrix_csv(path) -> np.ndarray:
    """Square symmetric matrix; one CSV row per matrix row, no header."""
    A = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    if A.shape[0] != A.shape[1]:
        raise ValueError(f"{path}: matrix is {A.shape[0]}x{A.shape[1]}, not square")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > MATRIX_SYMMETRY_TOL * scale:
        raise ValueError(f"{path}: matrix is not symmetric to {MATRIX_SYMMETRY_TOL}")
    return A


def save_matrix_csv(path, A) -> None:
    np.savetxt(path, np.asarray(A, dtype=np.float64), delimiter=",", fmt="%.17g")


def load_series_csv(path) -> np.ndarray:
    """(T, D) series; a single non-numeric first row is treated as a header."""
    path = Path(path)
    with path.open() as fh:
        first = fh.readline()
    skip = 0
    try:
        [float(x) for x in first.strip().split(",") if x != ""]
    except ValueError:
        skip = 1
    A = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=skip, dtype=np.float64)
    return A


def save_series_csv(path, X) -> None:
    np.savetxt(path, np.asarray(X, dtype=np.float64), delimiter=",", fmt="%.17g")


def load_events_csv(path) -> np.ndarray:
    e = np.loadtxt(path, delimiter=",", ndmin=1, dtype=np.float64)
    return e.ravel()


def save_events_csv(path, e) -> None:
    np.savetxt(path, np.asarray(e, dtype=np.float64).ravel(), fmt="%.17g")


def save_partition_json(path, P: BlockPartition) -> None:
    Path(path).write_text(json.dumps(P.to_json_dict(), indent=2) + "\n")


def load_partition_json(path) -> BlockPartition:
    return BlockPartition.from_json_dict(json.loads(Path(path).read_text()))


def save_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    return json.loads(Path(path).read_text())
