"""
Dependence Coefficients
Exact alpha, beta and phi over block cylinder sigma-algebras for finite-state
ground truth and for its lift, Monte Carlo plug-in estimates, and Cesaro
correlation sequences for the ergodic / weak-mixing / mixing checks
"""

from __future__ import annotations

import logging

import numpy as np
import pandas as pd

from config.defaults import (
    MAX_BLOCK_CELLS, EXHAUSTIVE_CELLS, MIN_MC_WINDOWS, BOOTSTRAP_RESAMPLES
)
from models.chain import FiniteProcess, block_forward, block_backward, symbol_emissions, sample_paths
from models.errors import SizeCapError, InsufficientSamplesError, CylinderError
from models.lift import (
    IntervalCylinder, Partition, cylinder_measure, refined_partition, cell_emissions, lift_paths
)

logger = logging.getLogger(__name__)

REPORT_COLUMNS = [
    "n", "L", "r", "method", "alpha", "beta", "phi",
    "stderr_alpha", "stderr_beta", "stderr_phi"
]
COEFFICIENTS = ("alpha", "beta", "phi")

# Rows of the deviation matrix below this norm are treated as exact zeros
_ZERO_ROW = 1e-14
# Unit rows closer than this in every entry count as positively proportional
_MERGE_TOLERANCE = 1e-12
_CHUNK = 4096


# ----------------------------------------------------------------------
# joint tables
# ----------------------------------------------------------------------

def block_joint(proc: FiniteProcess, emissions: np.ndarray, n: int, L: int) -> np.ndarray:
    """
    Joint probabilities of the past L-block (times -L+1..0) and the
    future L-block (times n..n+L-1) over the given emission cells
    """
    if n < 1 or L < 1:
        raise SizeCapError("Lag and block length must be positive")
    cells = emissions.shape[0] ** L
    if cells > MAX_BLOCK_CELLS:
        raise SizeCapError(f"{cells} block cells exceed the cap of {MAX_BLOCK_CELLS}")
    fw = block_forward(proc, emissions, L)
    bw = block_backward(proc, emissions, L)
    return fw @ np.linalg.matrix_power(proc.transition, n) @ bw.T


# ----------------------------------------------------------------------
# coefficients of a joint table
# ----------------------------------------------------------------------

def _merge_rows(M: np.ndarray) -> np.ndarray:
    """Drop zero rows and sum rows that are positive multiples of each other"""
    norms = np.linalg.norm(M, axis=1)
    keep = norms > _ZERO_ROW
    if not np.any(keep):
        return np.zeros((0, M.shape[1]))
    rows = M[keep]
    unit = rows / norms[keep, None]
    # near-equal unit rows are neighbours in lexicographic order
    labels = np.empty(len(rows), dtype=int)
    label, representative = -1, None
    for i in np.lexsort(unit.T[::-1]):
        if representative is None or np.abs(unit[i] - representative).max() > _MERGE_TOLERANCE:
            label += 1
            representative = unit[i]
        labels[i] = label
    first = np.full(label + 1, len(rows))
    np.minimum.at(first, labels, np.arange(len(rows)))
    merged = np.zeros((label + 1, M.shape[1]))
    np.add.at(merged, labels, rows)
    # keep lexicographic cell order of the first member of each group
    return merged[np.argsort(first, kind="stable")]


def reduce_deviation(M: np.ndarray) -> np.ndarray:
    """
    Exact reduction for max |1_A' M 1_B|: for fixed B the optimal A never
    separates positively proportional rows, and the same holds for columns
    """
    M = np.asarray(M, dtype=float)
    while True:
        shape = M.shape
        M = _merge_rows(M)
        if M.size == 0:
            return M
        M = _merge_rows(M.T).T
        if M.size == 0 or M.shape == shape:
            return M


def _subset_masks(m: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m)) & 1).astype(float)


def _alpha_exhaustive(M: np.ndarray) -> float:
    m = M.shape[0]
    best = 0.0
    for start in range(0, 2**m, _CHUNK):
        sums = _subset_masks(m, start, min(start + _CHUNK, 2**m)) @ M
        value = max(np.clip(sums, 0, None).sum(axis=1).max(), np.clip(-sums, 0, None).sum(axis=1).max())
        best = max(best, float(value))
    return best


def _alpha_alternating(M: np.ndarray, max_rounds: int = 100) -> float:
    """Fix A, take the optimal B, then the optimal A for that B; seeds are singletons and complements"""
    m = M.shape[0]
    best = 0.0
    for sign in (1.0, -1.0):
        S = sign * M
        for seed in range(m):
            for complement in (False, True):
                A = np.zeros(m, dtype=bool)
                A[seed] = True
                if complement:
                    A = ~A
                for _ in range(max_rounds):
                    B = (A.astype(float) @ S) > 0
                    nxt = (S @ B.astype(float)) > 0
                    best = max(best, float((A.astype(float) @ S)[B].sum()))
                    if np.array_equal(nxt, A) or not nxt.any():
                        break
                    A = nxt
                if A.any():
                    best = max(best, float(np.clip(A.astype(float) @ S, 0, None).sum()))
    return best


def alpha_from_deviation(M: np.ndarray) -> float:
    """max over sets A, B of |sum_{a in A, b in B} M_ab|"""
    R = reduce_deviation(M)
    if R.size == 0:
        return 0.0
    if R.shape[0] > R.shape[1]:
        R = R.T
    if R.shape[0] <= EXHAUSTIVE_CELLS:
        return _alpha_exhaustive(R)
    logger.debug(f"Alternating alpha maximization on a reduced {R.shape} table")
    return _alpha_alternating(R)


def coefficients_from_joint(J: np.ndarray) -> dict:
    """alpha, beta and phi of a joint probability table of past and future cells"""
    J = np.asarray(J, dtype=float)
    p_past = J.sum(axis=1)
    p_future = J.sum(axis=0)
    M = J - np.outer(p_past, p_future)

    beta = 0.5 * float(np.abs(M).sum())
    positive = p_past > 0
    if np.any(positive):
        conditional = J[positive] / p_past[positive, None]
        phi = float((0.5 * np.abs(conditional - p_future[None, :]).sum(axis=1)).max())
    else:
        phi = 0.0
    alpha = alpha_from_deviation(M)
    return {name: float(np.clip(value, 0.0, 1.0)) for name, value in
            (("alpha", alpha), ("beta", beta), ("phi", phi))}


# ----------------------------------------------------------------------
# exact coefficients of the ground truth and of the lift
# ----------------------------------------------------------------------

def block_coefficients(proc: FiniteProcess, n: int, L: int) -> dict:
    """Coefficients of X over blocks of observed points"""
    return coefficients_from_joint(block_joint(proc, symbol_emissions(proc), n, L))


def alpha_block_exact(proc: FiniteProcess, n: int, L: int) -> float:
    return block_coefficients(proc, n, L)["alpha"]


def beta_block_exact(proc: FiniteProcess, n: int, L: int) -> float:
    return block_coefficients(proc, n, L)["beta"]


def phi_block_exact(proc: FiniteProcess, n: int, L: int) -> float:
    return block_coefficients(proc, n, L)["phi"]


def lifted_coefficients(marginals, proc: FiniteProcess, n: int, L: int, r: int) -> dict:
    """Coefficients of U over blocks of cells of the r-refined atom-interval partition"""
    partition = refined_partition(marginals, r)
    if partition.n_cells ** L > MAX_BLOCK_CELLS:
        raise SizeCapError(f"{partition.n_cells}^{L} lifted cells exceed the cap of {MAX_BLOCK_CELLS}")
    E = cell_emissions(marginals, proc, partition)
    return coefficients_from_joint(block_joint(proc, E, n, L))


def alpha_lifted(marginals, proc: FiniteProcess, n: int, L: int, r: int) -> float:
    return lifted_coefficients(marginals, proc, n, L, r)["alpha"]


def beta_lifted(marginals, proc: FiniteProcess, n: int, L: int, r: int) -> float:
    return lifted_coefficients(marginals, proc, n, L, r)["beta"]


def phi_lifted(marginals, proc: FiniteProcess, n: int, L: int, r: int) -> float:
    return lifted_coefficients(marginals, proc, n, L, r)["phi"]


# ----------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------

def window_length(n: int, L: int) -> int:
    """Past block at positions 0..L-1, future block at L-1+n..2L-2+n"""
    return 2 * L - 1 + n


def _block_index(cells: np.ndarray, base: int) -> np.ndarray:
    index = np.zeros(cells.shape[0], dtype=np.int64)
    for j in range(cells.shape[1]):
        index = index * base + cells[:, j]
    return index


def empirical_joint(u_paths: np.ndarray, n: int, L: int, partition: Partition) -> np.ndarray:
    u_paths = np.asarray(u_paths, dtype=float)
    if u_paths.ndim != 3 or u_paths.shape[1] < window_length(n, L):
        raise InsufficientSamplesError(f"Windows of length {window_length(n, L)} are needed")
    C = partition.n_cells
    cells = partition.locate(u_paths)
    past = _block_index(cells[:, :L], C)
    future = _block_index(cells[:, L - 1 + n: 2 * L - 1 + n], C)
    counts = np.bincount(past * C**L + future, minlength=C ** (2 * L))
    return counts.reshape(C**L, C**L) / len(u_paths)


def estimate_coefficients_mc(u_paths: np.ndarray, n: int, L: int, partition: Partition,
                             rng: np.random.Generator = None, resamples: int = BOOTSTRAP_RESAMPLES,
                             min_windows: int = MIN_MC_WINDOWS) -> dict:
    """
    Plug-in alpha, beta, phi over a finite partition from independent windows (N, T, d)
    Returns {name: (value, stderr)}; stderr is the multinomial bootstrap spread plus
    the bootstrap estimate of the upward bias of the plug-in value
    """
    if len(u_paths) < min_windows:
        raise InsufficientSamplesError(f"{len(u_paths)} windows, at least {min_windows} required")
    if partition.n_cells ** L > MAX_BLOCK_CELLS:
        raise SizeCapError("Monte Carlo partition has too many block cells")
    rng = np.random.default_rng(0) if rng is None else rng

    J = empirical_joint(u_paths, n, L, partition)
    values = coefficients_from_joint(J)
    boot = rng.multinomial(len(u_paths), J.reshape(-1), size=resamples) / len(u_paths)
    draws = [coefficients_from_joint(b.reshape(J.shape)) for b in boot]
    result = {}
    for name in COEFFICIENTS:
        spread = np.array([d[name] for d in draws])
        bias = max(float(spread.mean()) - values[name], 0.0)
        result[name] = (values[name], float(spread.std(ddof=1)) + bias)
    return result


def estimate_coefficient_mc(kind: str, u_paths: np.ndarray, n: int, L: int, partition: Partition,
                            rng: np.random.Generator = None, **kwargs) -> tuple:
    """(value, stderr) of one coefficient"""
    if kind not in COEFFICIENTS:
        raise ValueError(f"Unknown coefficient: {kind}")
    return estimate_coefficients_mc(u_paths, n, L, partition, rng, **kwargs)[kind]


def sample_lifted_windows(marginals, proc: FiniteProcess, rng: np.random.Generator,
                          n_windows: int, length: int) -> np.ndarray:
    _, x = sample_paths(proc, rng, n_windows, length)
    return lift_paths(marginals, x, rng)


# ----------------------------------------------------------------------
# decay and Cesaro sequences
# ----------------------------------------------------------------------

def fit_geometric_decay(values, floor: float = 1e-15, start: int = 1) -> tuple:
    """
    (C, rho) with |v_k| <= C rho^k (k = start, start + 1, ...) on the terms above floor
    rho comes from a log-linear least-squares fit
    """
    v = np.abs(np.asarray(values, dtype=float))
    k = np.arange(start, start + len(v))
    significant = v > floor
    if significant.sum() == 0:
        return 0.0, 0.0
    if significant.sum() == 1:
        return float(v[significant][0]), 0.0
    slope, _ = np.polyfit(k[significant], np.log(v[significant]), 1)
    rho = float(np.exp(slope))
    C = float((v[significant] / rho ** k[significant]).max())
    return C, rho


def cesaro_correlation(marginals, proc: FiniteProcess, f_cyl: IntervalCylinder,
                       g_cyl: IntervalCylinder, N: int) -> pd.DataFrame:
    """
    c_k = mu(f & S^k g) - mu(f) mu(g) for k = 1..N with running Cesaro means
    of c_k and |c_k|
    """
    if N < 1:
        raise CylinderError("N must be positive")
    mu_f = cylinder_measure(marginals, proc, f_cyl)
    mu_g = cylinder_measure(marginals, proc, g_cyl)
    c = np.array([
        cylinder_measure(marginals, proc, f_cyl.intersect(g_cyl.shift(k))) - mu_f * mu_g
        for k in range(1, N + 1)
    ])
    k = np.arange(1, N + 1)
    return pd.DataFrame({
        "k": k,
        "c_k": c,
        "cesaro_mean": np.cumsum(c) / k,
        "cesaro_abs_mean": np.cumsum(np.abs(c)) / k
    })


# ----------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------

def mixing_report(marginals, proc: FiniteProcess, lags, block_lengths, refinements,
                  mc_partition: Partition = None, mc_windows: int = 0,
                  rng: np.random.Generator = None) -> pd.DataFrame:
    """Exact, lifted-exact and (optionally) Monte Carlo coefficients per (n, L, r)"""
    rows = []
    for L in block_lengths:
        for n in lags:
            exact = block_coefficients(proc, n, L)
            rows.append({"n": n, "L": L, "r": 0, "method": "exact", **exact})
            for r in refinements:
                lifted = lifted_coefficients(marginals, proc, n, L, r)
                rows.append({"n": n, "L": L, "r": r, "method": "lifted-exact", **lifted})
            if mc_partition is not None and mc_windows > 0:
                u = sample_lifted_windows(marginals, proc, rng, mc_windows, window_length(n, L))
                estimates = estimate_coefficients_mc(u, n, L, mc_partition, rng)
                row = {"n": n, "L": L, "r": 0, "method": "monte-carlo"}
                for name, (value, stderr) in estimates.items():
                    row[name] = value
                    row[f"stderr_{name}"] = stderr
                rows.append(row)
            logger.info(f"Coefficients for n={n}, L={L}: alpha={exact['alpha']:.6g}")

    report = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    return report.sort_values(["n", "L", "r", "method"], kind="stable").reset_index(drop=True)


def check_report(report: pd.DataFrame, tol: float = 1e-12, monotone_in_n: bool = True) -> list:
    """
    Invariant violations of a mixing report (empty list when valid)
    monotone_in_n only holds when observed blocks determine the Markov state
    """
    problems = []
    values = report[list(COEFFICIENTS)]
    if ((values < -tol) | (values > 1 + tol)).any().any():
        problems.append("coefficient outside [0, 1]")
    if (report["alpha"] > report["beta"] + tol).any():
        problems.append("alpha exceeds beta")
    if (report["beta"] > report["phi"] + tol).any():
        problems.append("beta exceeds phi")
    if not monotone_in_n:
        return problems
    exact = report[report["method"] == "exact"]
    for L, group in exact.groupby("L"):
        ordered = group.sort_values("n")
        for name in COEFFICIENTS:
            if (np.diff(ordered[name].to_numpy()) > tol).any():
                problems.append(f"{name} increases with n at L={L}")
    return problems
