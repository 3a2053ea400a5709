"""
Finite-State Ground-Truth Processes
Stationary i.i.d. sequences and Markov chains observed through a map into R^d,
with exact finite-dimensional distributions and path sampling
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from math import gcd
from functools import reduce

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from config.defaults import (
    STOCHASTIC_TOLERANCE, MAX_STATES, MAX_DIMENSION, DIRECT_SOLVE_STATES,
    POWER_ITERATION_TOL, POWER_ITERATION_MAX
)
from models.errors import ProcessError, ReducibleChainError, PeriodicChainError
from models.marginal import MixedMarginal

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# transition matrix utilities
# ----------------------------------------------------------------------

def check_stochastic(P) -> np.ndarray:
    """Return P as a float matrix or raise if it is not row-stochastic"""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ProcessError(f"Transition matrix must be square, got shape {P.shape}")
    if np.any(P < 0) or not np.all(np.isfinite(P)):
        raise ProcessError("Transition probabilities must be finite and nonnegative")
    row_error = np.abs(P.sum(axis=1) - 1.0)
    if np.any(row_error > STOCHASTIC_TOLERANCE):
        bad = int(np.argmax(row_error))
        raise ProcessError(f"Row {bad} of the transition matrix sums to {P[bad].sum()!r}")
    return P


def is_irreducible(P) -> bool:
    graph = csr_matrix(np.asarray(P) > 0)
    n_components, _ = connected_components(graph, directed=True, connection="strong")
    return n_components == 1


def period(P) -> int:
    """gcd of cycle lengths of an irreducible chain (1 means aperiodic)"""
    adjacency = np.asarray(P) > 0
    level = shortest_path(csr_matrix(adjacency.astype(float)), unweighted=True, indices=0)
    if np.any(np.isinf(level)):
        raise ReducibleChainError("Period is only defined for irreducible chains")
    level = level.astype(int)
    u, v = np.nonzero(adjacency)
    return int(reduce(gcd, np.abs(level[u] + 1 - level[v]).tolist(), 0))


def stationary_distribution(P) -> np.ndarray:
    """
    Solve qP = q, sum(q) = 1
    Direct solve for small chains, power iteration on the lazy chain otherwise
    """
    P = check_stochastic(P)
    if not is_irreducible(P):
        raise ReducibleChainError("Stationary distribution requires an irreducible chain")

    S = P.shape[0]
    if S <= DIRECT_SOLVE_STATES:
        A = P.T - np.eye(S)
        A[-1, :] = 1.0
        b = np.zeros(S)
        b[-1] = 1.0
        q = np.linalg.solve(A, b)
    else:
        lazy = 0.5 * (P + np.eye(S))
        q = np.full(S, 1.0 / S)
        for iteration in range(POWER_ITERATION_MAX):
            nxt = q @ lazy
            if np.abs(nxt - q).max() < POWER_ITERATION_TOL:
                q = nxt
                break
            q = nxt
        else:
            logger.warning(f"Power iteration stopped after {POWER_ITERATION_MAX} iterations")

    q = np.clip(q, 0.0, None)
    q /= q.sum()
    residual = float(np.abs(q @ P - q).max())
    if residual >= STOCHASTIC_TOLERANCE:
        raise ProcessError(f"Stationary residual {residual:.3e} exceeds tolerance")
    logger.debug(f"Stationary distribution for {S} states, residual {residual:.2e}")
    return q


def second_eigenvalue_modulus(P) -> float:
    moduli = np.sort(np.abs(np.linalg.eigvals(np.asarray(P, dtype=float))))
    return float(moduli[-2]) if len(moduli) > 1 else 0.0


# ----------------------------------------------------------------------
# process and cylinder types
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class StateCylinder:
    """Event {state_{offset+j} in factors[j] for every j}"""
    offset: int
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(frozenset(int(s) for s in f) for f in self.factors))

    @property
    def length(self) -> int:
        return len(self.factors)

    def shift(self, k: int) -> "StateCylinder":
        return StateCylinder(self.offset + k, self.factors)


@dataclass(frozen=True, eq=False)
class FiniteProcess:
    """
    Stationary finite-state process with an observation map
    kind is "iid" (transition rows all equal the weights) or "markov"
    """
    transition: np.ndarray
    stationary: np.ndarray
    observe: np.ndarray
    kind: str = "markov"

    def __post_init__(self):
        for name in ("transition", "stationary", "observe"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        S = self.transition.shape[0]
        if self.observe.ndim != 2 or self.observe.shape[0] != S:
            raise ProcessError("observe must hold one d-vector per state")
        if S > MAX_STATES:
            raise ProcessError(f"{S} states exceed the configured cap of {MAX_STATES}")
        if self.observe.shape[1] > MAX_DIMENSION:
            raise ProcessError(f"Dimension {self.observe.shape[1]} exceeds the cap of {MAX_DIMENSION}")
        if self.kind not in ("iid", "markov"):
            raise ProcessError(f"Unknown process kind: {self.kind}")

    @classmethod
    def markov(cls, P, observe=None) -> "FiniteProcess":
        P = check_stochastic(P)
        q = stationary_distribution(P)
        observe = np.arange(len(P), dtype=float)[:, None] if observe is None else observe
        return cls(P, q, observe, "markov")

    @classmethod
    def iid(cls, weights, observe=None) -> "FiniteProcess":
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or np.any(w < 0) or abs(w.sum() - 1.0) > STOCHASTIC_TOLERANCE:
            raise ProcessError("IID weights must be a probability vector")
        P = np.tile(w, (len(w), 1))
        observe = np.arange(len(w), dtype=float)[:, None] if observe is None else observe
        return cls(P, w, observe, "iid")

    @classmethod
    def from_dict(cls, doc: dict) -> "FiniteProcess":
        unknown = set(doc) - {"states", "P", "weights", "observe"}
        if unknown:
            raise ProcessError(f"Unknown process fields: {sorted(unknown)}")
        if ("P" in doc) == ("weights" in doc):
            raise ProcessError("Process needs exactly one of 'P' or 'weights'")
        observe = doc.get("observe")
        proc = cls.iid(doc["weights"], observe) if "weights" in doc else cls.markov(doc["P"], observe)
        if "states" in doc and int(doc["states"]) != proc.n_states:
            raise ProcessError(f"'states' is {doc['states']} but the matrix has {proc.n_states} states")
        return proc

    def to_dict(self) -> dict:
        doc = {"states": self.n_states, "observe": self.observe.tolist()}
        if self.kind == "iid":
            doc["weights"] = self.stationary.tolist()
        else:
            doc["P"] = self.transition.tolist()
        return doc

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def dimension(self) -> int:
        return self.observe.shape[1]

    @property
    def symbols(self) -> np.ndarray:
        """Distinct observed points, lexicographic"""
        return np.unique(self.observe, axis=0)

    @property
    def symbol_of_state(self) -> np.ndarray:
        _, inverse = np.unique(self.observe, axis=0, return_inverse=True)
        return inverse.reshape(-1).astype(int)


def validate_mixing(proc: FiniteProcess):
    """Raise unless the chain is irreducible and aperiodic"""
    if not is_irreducible(proc.transition):
        raise ReducibleChainError("Mixing checks require an irreducible chain")
    p = period(proc.transition)
    if p != 1:
        raise PeriodicChainError(f"Chain has period {p}")


# ----------------------------------------------------------------------
# exact probabilities
# ----------------------------------------------------------------------

def path_probability(proc: FiniteProcess, emissions) -> float:
    """
    Forward recursion with per-time emission weights over states
    emissions: sequence of length-S vectors (indicators give cylinder probabilities)
    """
    if len(emissions) == 0:
        return 1.0
    v = proc.stationary * np.asarray(emissions[0], dtype=float)
    for e in emissions[1:]:
        v = (v @ proc.transition) * np.asarray(e, dtype=float)
    return float(v.sum())


def fdd_probability(proc: FiniteProcess, cyl: StateCylinder) -> float:
    """Exact probability of a state cylinder (independent of the offset by stationarity)"""
    masks = []
    for factor in cyl.factors:
        mask = np.zeros(proc.n_states)
        idx = [s for s in factor if 0 <= s < proc.n_states]
        mask[idx] = 1.0
        masks.append(mask)
    return path_probability(proc, masks)


def symbol_emissions(proc: FiniteProcess) -> np.ndarray:
    """Indicator matrix (symbols x states) of the observation map"""
    sym = proc.symbol_of_state
    E = np.zeros((len(proc.symbols), proc.n_states))
    E[sym, np.arange(proc.n_states)] = 1.0
    return E


def block_forward(proc: FiniteProcess, emissions: np.ndarray, L: int) -> np.ndarray:
    """
    Forward vectors of every L-block of cells, lexicographic (first time slowest)
    Row b gives P(block b, state at the last time = s)
    """
    E = np.asarray(emissions, dtype=float)
    fw = proc.stationary[None, :] * E
    for _ in range(L - 1):
        fw = ((fw @ proc.transition)[:, None, :] * E[None, :, :]).reshape(-1, proc.n_states)
    return fw


def block_backward(proc: FiniteProcess, emissions: np.ndarray, L: int) -> np.ndarray:
    """Row b gives P(block b | state at the first time = s)"""
    E = np.asarray(emissions, dtype=float)
    bw = E.copy()
    for _ in range(L - 1):
        ahead = bw @ proc.transition.T
        bw = (E[:, None, :] * ahead[None, :, :]).reshape(-1, proc.n_states)
    return bw


def observed_marginal(proc: FiniteProcess, k: int) -> MixedMarginal:
    """Purely discrete distribution of the k-th observed coordinate"""
    return MixedMarginal.discrete(proc.observe[:, k], proc.stationary)


def observed_marginals(proc: FiniteProcess) -> list:
    return [observed_marginal(proc, k) for k in range(proc.dimension)]


def observed_cdf(proc: FiniteProcess, s) -> np.ndarray:
    """Joint F(s) = P(X_1 <= s) in the coordinatewise order; s has shape (d,) or (m, d)"""
    s = np.atleast_2d(np.asarray(s, dtype=float))
    below = np.all(proc.observe[None, :, :] <= s[:, None, :], axis=2)
    return below.astype(float) @ proc.stationary


# ----------------------------------------------------------------------
# sampling
# ----------------------------------------------------------------------

def sample_paths(proc: FiniteProcess, rng: np.random.Generator, n_paths: int, length: int):
    """
    Independent stationary windows
    Returns (states (n_paths, length), values (n_paths, length, d))
    """
    if length < 0 or n_paths < 0:
        raise ProcessError("Path length and count must be nonnegative")
    S = proc.n_states
    states = np.zeros((n_paths, length), dtype=int)
    if length > 0:
        cum_q = np.cumsum(proc.stationary)
        cum_P = np.cumsum(proc.transition, axis=1)
        states[:, 0] = np.minimum(np.searchsorted(cum_q, rng.random(n_paths), side="right"), S - 1)
        for t in range(1, length):
            u = rng.random(n_paths)
            rows = cum_P[states[:, t - 1]]
            states[:, t] = np.minimum((u[:, None] >= rows).sum(axis=1), S - 1)
    return states, proc.observe[states]


def sample_path(proc: FiniteProcess, rng: np.random.Generator, length: int):
    """Single stationary path: (states (length,), values (length, d))"""
    if length < 1:
        raise ProcessError("Path length must be at least 1")
    states, values = sample_paths(proc, rng, 1, length)
    return states[0], values[0]


def observed_symbols(proc: FiniteProcess) -> tuple:
    """(distinct observed points, symbol index of every state)"""
    return proc.symbols, proc.symbol_of_state
