"""
Empirical Process Application
Centered EDF, the sequential empirical process R(s,t), the covariance series
Gamma for finite-state ground truth and Kiefer process simulation on grids
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from config.defaults import (
    PSD_JITTER, GAMMA_TAIL_TOLERANCE, DEFAULT_NTRUNC, MAX_NTRUNC
)
from models.chain import FiniteProcess, observed_cdf
from models.errors import GridError, DecayError
from models.mixing import fit_geometric_decay

logger = logging.getLogger(__name__)

_SYMMETRY_TOL = 1e-12
_CHUNK_ROWS = 100
# Gamma terms below this size are rounding noise and stay out of the decay fit
_TERM_FLOOR = 1e-13


@dataclass(frozen=True, eq=False)
class GridCovariance:
    """Gamma(s_i, s_j) on a grid of points of R^d"""
    s_grid: np.ndarray
    matrix: np.ndarray
    n_trunc: int
    tail_bound: float

    def __post_init__(self):
        s_grid = np.atleast_2d(np.asarray(self.s_grid, dtype=float))
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.shape != (len(s_grid), len(s_grid)):
            raise GridError(f"Covariance shape {matrix.shape} does not match {len(s_grid)} grid points")
        if np.abs(matrix - matrix.T).max(initial=0.0) > _SYMMETRY_TOL:
            raise GridError("Covariance matrix is not symmetric")
        object.__setattr__(self, "s_grid", s_grid)
        object.__setattr__(self, "matrix", matrix)

    @property
    def min_eigenvalue(self) -> float:
        return float(linalg.eigh(self.matrix, eigvals_only=True)[0])


@dataclass(frozen=True, eq=False)
class KieferSample:
    """values[i, j] = K(s_i, t_j)"""
    s_grid: np.ndarray
    t_grid: np.ndarray
    values: np.ndarray


# ----------------------------------------------------------------------
# grids
# ----------------------------------------------------------------------

def product_grid(per_coordinate_grids) -> np.ndarray:
    """Points of the product of sorted per-coordinate grids, coordinate 0 slowest"""
    axes = [np.sort(np.asarray(g, dtype=float).reshape(-1)) for g in per_coordinate_grids]
    if not axes or any(len(a) == 0 for a in axes):
        raise GridError("Every coordinate needs at least one grid point")
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=1)


def _as_points(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x[:, None]
    return x


def _check_t_grid(t_grid) -> np.ndarray:
    t = np.asarray(t_grid, dtype=float).reshape(-1)
    if len(t) == 0 or np.any(t < 0) or np.any(np.diff(t) < 0):
        raise GridError("Time grid must be nonempty, nonnegative and sorted")
    return t


# ----------------------------------------------------------------------
# empirical distribution and process
# ----------------------------------------------------------------------

def _below(x_samples: np.ndarray, s_points: np.ndarray) -> np.ndarray:
    """Indicator matrix (n, m) of X_i <= s_j in the coordinatewise order"""
    if x_samples.shape[1] != s_points.shape[1]:
        raise GridError("Samples and grid points have different dimensions")
    return np.all(x_samples[:, None, :] <= s_points[None, :, :], axis=2)


def centered_edf(x_samples, t, cdf) -> float:
    """(1/n) #{X_i <= t} - F(t); cdf maps points (m, d) to (m,)"""
    x = _as_points(x_samples)
    point = np.asarray(t, dtype=float).reshape(1, -1)
    if len(x) == 0:
        raise GridError("Centered EDF needs at least one sample")
    return float(_below(x, point).mean() - np.asarray(cdf(point)).reshape(-1)[0])


def empirical_process(x_samples, s, t: float, cdf) -> float:
    """R(s,t) = sum over i <= floor(t) of 1{X_i <= s} - F(s)"""
    return float(empirical_process_grid(x_samples, np.asarray(s, dtype=float).reshape(1, -1), [t], cdf)[0, 0])


def empirical_process_grid(x_samples, s_grid, t_grid, cdf) -> np.ndarray:
    """R on a grid: array (len(s_grid), len(t_grid))"""
    x = _as_points(x_samples)
    s_points = _as_points(s_grid)
    t = _check_t_grid(t_grid)
    counts = np.floor(t).astype(int)
    if counts.max() > len(x):
        raise GridError(f"floor(t) = {counts.max()} exceeds the {len(x)} available samples")

    cumulative = np.vstack([np.zeros((1, len(s_points))), np.cumsum(_below(x, s_points), axis=0)])
    F = np.asarray(cdf(s_points), dtype=float).reshape(-1)
    return (cumulative[counts] - counts[:, None] * F[None, :]).T


def sup_distance(R_grid, K_grid) -> float:
    R = np.asarray(R_grid, dtype=float)
    K = np.asarray(K_grid, dtype=float)
    if R.shape != K.shape:
        raise GridError(f"Grid shapes differ: {R.shape} vs {K.shape}")
    return float(np.abs(R - K).max(initial=0.0))


# ----------------------------------------------------------------------
# the covariance series Gamma
# ----------------------------------------------------------------------

def _state_indicators(proc: FiniteProcess, s_points: np.ndarray) -> np.ndarray:
    """(m, S) indicators of observe(state) <= s_j"""
    if s_points.shape[1] != proc.dimension:
        raise GridError(f"Grid points must be {proc.dimension}-dimensional")
    return np.all(proc.observe[None, :, :] <= s_points[:, None, :], axis=2).astype(float)


def _gamma_series(proc: FiniteProcess, Ia: np.ndarray, Ib: np.ndarray, n_trunc: int) -> tuple:
    """
    Truncated Gamma between two point sets and the geometric tail bound
    term_n(a, b) = P(X_1 <= a, X_n <= b) - F(a) F(b)
    """
    if n_trunc < 2:
        raise GridError("Truncation must be at least 2")
    q = proc.stationary
    Fa, Fb = Ia @ q, Ib @ q
    centering = np.outer(Fa, Fb)

    gamma = (Ia * q) @ Ib.T - centering
    forward_a = Ia * q
    forward_b = Ib * q
    sizes = []
    for _ in range(2, n_trunc + 1):
        forward_a = forward_a @ proc.transition
        forward_b = forward_b @ proc.transition
        term = (forward_a @ Ib.T - centering) + (forward_b @ Ia.T).T - centering
        gamma += term
        sizes.append(np.abs(term).max(initial=0.0))

    C, rho = fit_geometric_decay(sizes, floor=_TERM_FLOOR, start=2)
    if not np.isfinite(rho) or rho >= 1.0 - 1e-9:
        raise DecayError(f"Gamma terms do not decay (fitted rate {rho:.6g})")
    tail = 0.0 if rho == 0.0 else C * rho ** (n_trunc + 1) / (1.0 - rho)
    return gamma, float(tail)


def gamma_exact(proc: FiniteProcess, s, s_prime, n_trunc: int = DEFAULT_NTRUNC) -> tuple:
    """(Gamma(s, s'), tail_bound) for a single pair of points"""
    Ia = _state_indicators(proc, np.asarray(s, dtype=float).reshape(1, -1))
    Ib = _state_indicators(proc, np.asarray(s_prime, dtype=float).reshape(1, -1))
    gamma, tail = _gamma_series(proc, Ia, Ib, n_trunc)
    return float(gamma[0, 0]), tail


def gamma_matrix(proc: FiniteProcess, s_grid, n_trunc: int = None,
                 tail_tolerance: float = GAMMA_TAIL_TOLERANCE) -> GridCovariance:
    """
    Gamma on a whole grid
    Without n_trunc the truncation doubles from the default until the tail
    bound is within tail_tolerance
    """
    s_points = _as_points(s_grid)
    I = _state_indicators(proc, s_points)

    if n_trunc is not None:
        gamma, tail = _gamma_series(proc, I, I, int(n_trunc))
        N = int(n_trunc)
    else:
        N = DEFAULT_NTRUNC
        while True:
            gamma, tail = _gamma_series(proc, I, I, N)
            if tail <= tail_tolerance:
                break
            if N >= MAX_NTRUNC:
                raise DecayError(f"Tail bound {tail:.3e} still above {tail_tolerance:.0e} at N = {N}")
            N = min(2 * N, MAX_NTRUNC)

    gamma = 0.5 * (gamma + gamma.T)
    logger.info(f"Gamma on {len(s_points)} grid points: N_trunc={N}, tail bound {tail:.3e}")
    return GridCovariance(s_grid=s_points, matrix=gamma, n_trunc=N, tail_bound=tail)


# ----------------------------------------------------------------------
# Kiefer process
# ----------------------------------------------------------------------

def psd_root(matrix: np.ndarray, jitter: float = PSD_JITTER) -> np.ndarray:
    """R with R R' = matrix; eigenvalues in [-jitter, 0) are clipped to zero"""
    w, V = linalg.eigh(np.asarray(matrix, dtype=float))
    if len(w) and w[0] < -jitter:
        raise GridError(f"Covariance is indefinite: eigenvalue {w[0]:.3e} below -{jitter:.0e}")
    if len(w) and w[0] < 0:
        logger.warning(f"Clipping eigenvalue {w[0]:.3e} to zero")
    return V * np.sqrt(np.clip(w, 0.0, None))[None, :]


def kiefer_replicates(gamma: GridCovariance, t_grid, rng: np.random.Generator, m: int) -> np.ndarray:
    """m independent Kiefer samples: array (m, len(s_grid), len(t_grid))"""
    t = _check_t_grid(t_grid)
    root = psd_root(gamma.matrix)
    steps = np.sqrt(np.diff(np.concatenate([[0.0], t])))
    xi = rng.standard_normal((m, len(t), root.shape[1]))
    increments = steps[None, :, None] * (xi @ root.T)
    return np.transpose(np.cumsum(increments, axis=1), (0, 2, 1))


def kiefer_sample(gamma: GridCovariance, t_grid, rng: np.random.Generator) -> KieferSample:
    values = kiefer_replicates(gamma, t_grid, rng, 1)[0]
    return KieferSample(s_grid=gamma.s_grid, t_grid=_check_t_grid(t_grid), values=values)


def kiefer_covariance(gamma: GridCovariance, t_grid) -> np.ndarray:
    """Theoretical min(t, t') Gamma(s, s') over flattened (s, t) pairs, s slowest"""
    t = _check_t_grid(t_grid)
    return np.kron(gamma.matrix, np.minimum.outer(t, t))


def kiefer_covariance_estimate(samples: np.ndarray, gamma: GridCovariance, t_grid) -> tuple:
    """
    (empirical, theoretical, stderr) covariance over flattened (s, t) pairs
    The mean is known to be zero; stderr is the Gaussian sqrt((S_aa S_bb + S_ab^2) / M)
    """
    M = len(samples)
    flat = np.asarray(samples, dtype=float).reshape(M, -1)
    empirical = flat.T @ flat / M
    theoretical = kiefer_covariance(gamma, t_grid)
    diag = np.diag(theoretical)
    stderr = np.sqrt((np.outer(diag, diag) + theoretical**2) / M)
    return empirical, theoretical, stderr


# ----------------------------------------------------------------------
# distributional checks
# ----------------------------------------------------------------------

def sup_statistic_uniform(x) -> float:
    """sup_s |R(s,n)| / sqrt(n) for a one-dimensional sample against the uniform law"""
    x = np.sort(np.asarray(x, dtype=float).reshape(-1))
    n = len(x)
    if n == 0:
        raise GridError("Sup statistic needs at least one sample")
    i = np.arange(1, n + 1)
    D = max((i / n - x).max(), (x - (i - 1) / n).max())
    return float(np.sqrt(n) * D)


def kolmogorov_check(rng: np.random.Generator, n: int, replicates: int) -> tuple:
    """
    KS distance between the law of sup_s |R(s,n)| / sqrt(n) over i.i.d. uniform
    samples and the Kolmogorov distribution; returns (distance, statistics)
    """
    values = np.empty(replicates)
    for start in range(0, replicates, _CHUNK_ROWS):
        rows = min(_CHUNK_ROWS, replicates - start)
        x = np.sort(rng.random((rows, n)), axis=1)
        i = np.arange(1, n + 1)[None, :]
        D = np.maximum((i / n - x).max(axis=1), (x - (i - 1) / n).max(axis=1))
        values[start:start + rows] = np.sqrt(n) * D
    distance = float(stats.kstest(values, stats.kstwobign.cdf).statistic)
    logger.info(f"Kolmogorov check: n={n}, {replicates} replicates, KS distance {distance:.4f}")
    return distance, values


def observed_cdf_function(proc: FiniteProcess):
    """F for grid helpers: points (m, d) -> (m,)"""
    return lambda points: observed_cdf(proc, points)
