"""
Data Export Utilities
CSV and JSON readers and writers for paths, reports and grids
"""

import json
import os

import numpy as np
import pandas as pd

from models.errors import ConfigError

FLOAT_FORMAT = "%.17g"
SCHEMA_VERSION = "1.0"


def ensure_dir(out_dir: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    return out_dir


def csv_text(df: pd.DataFrame) -> str:
    """17 significant digits, no index, \\n line endings"""
    return df.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def write_csv(df: pd.DataFrame, path: str) -> str:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(csv_text(df))
    return path


def _json_default(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def to_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n"


def write_json(doc: dict, path: str) -> str:
    """Sorted keys, two-space indent, schema_version added when missing"""
    doc = {"schema_version": SCHEMA_VERSION, **doc}
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(to_json(doc))
    return path


# ----------------------------------------------------------------------
# paths
# ----------------------------------------------------------------------

def path_frame(values: np.ndarray, prefix: str = "x", d: int = None) -> pd.DataFrame:
    """Path (T, d) as a DataFrame with columns x1..xd (or u1..ud)"""
    values = np.asarray(values, dtype=float)
    d = values.shape[1] if d is None else d
    values = values.reshape(-1, d)
    return pd.DataFrame(values, columns=[f"{prefix}{k + 1}" for k in range(d)])


def read_path_csv(path: str, prefix: str = "x") -> np.ndarray:
    """Path CSV back to an array (T, d); the header must be x1..xd"""
    try:
        df = pd.read_csv(path, dtype=float)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Cannot read path file {path}: {e}") from e
    expected = [f"{prefix}{k + 1}" for k in range(len(df.columns))]
    if list(df.columns) != expected or not expected:
        raise ConfigError(f"Path file {path} must have columns {prefix}1..{prefix}d, got {list(df.columns)}")
    return df.to_numpy(dtype=float)


# ----------------------------------------------------------------------
# grids
# ----------------------------------------------------------------------

def gamma_frame(s_grid: np.ndarray, matrix: np.ndarray) -> pd.DataFrame:
    """Long format: i, j, s_i1..s_id, s_j1..s_jd, gamma"""
    m, d = s_grid.shape
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    i, j = i.reshape(-1), j.reshape(-1)
    columns = {"i": i, "j": j}
    for k in range(d):
        columns[f"s_i{k + 1}"] = s_grid[i, k]
    for k in range(d):
        columns[f"s_j{k + 1}"] = s_grid[j, k]
    columns["gamma"] = matrix[i, j]
    return pd.DataFrame(columns)


def covariance_frame(empirical: np.ndarray, theoretical: np.ndarray, stderr: np.ndarray) -> pd.DataFrame:
    """Entrywise comparison over flattened (s, t) pairs"""
    n = empirical.shape[0]
    a, b = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return pd.DataFrame({
        "a": a.reshape(-1),
        "b": b.reshape(-1),
        "empirical": empirical.reshape(-1),
        "theoretical": theoretical.reshape(-1),
        "stderr": stderr.reshape(-1)
    })
