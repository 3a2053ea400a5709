"""
Uniform Lift
Sample U-paths over X-paths through the canonical product measures, project
them back with the coordinatewise quantile map, and compute exact lifted
measures of interval cylinders for finite-state ground truth
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from models.chain import FiniteProcess, path_probability, sample_paths
from models.errors import CylinderError, SupportError

logger = logging.getLogger(__name__)

# Containment slack for subinterval endpoints against computed atom intervals
_EDGE_TOL = 1e-12

DRAW_LOG_COLUMNS = ["n", "k", "u"]


# ----------------------------------------------------------------------
# interval unions
# ----------------------------------------------------------------------

def _normalize_union(union) -> tuple:
    pieces = sorted((float(lo), float(hi)) for lo, hi in union)
    for lo, hi in pieces:
        if not 0.0 <= lo < hi <= 1.0:
            raise CylinderError(f"Subinterval [{lo}, {hi}) is not a nonempty part of (0, 1)")
    for (_, hi), (lo, _) in zip(pieces, pieces[1:]):
        if lo < hi:
            raise CylinderError("Subintervals within a factor must be disjoint")
    return tuple(pieces)


def _intersect_unions(a: tuple, b: tuple) -> tuple:
    out = []
    for lo_a, hi_a in a:
        for lo_b, hi_b in b:
            lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
            if lo < hi:
                out.append((lo, hi))
    return tuple(sorted(out))


def _union_contains(union: tuple, u: np.ndarray) -> np.ndarray:
    hit = np.zeros(np.shape(u), dtype=bool)
    for lo, hi in union:
        hit |= (u >= lo) & (u < hi)
    return hit


FULL = ((0.0, 1.0),)


@dataclass(frozen=True)
class IntervalCylinder:
    """
    Event {u_{offset+j}^{(k)} in factors[j][k] for every j, k}
    Each factor entry is a finite union of half-open subintervals of (0, 1)
    """
    offset: int
    factors: tuple

    def __post_init__(self):
        factors = tuple(tuple(_normalize_union(union) for union in step) for step in self.factors)
        if len({len(step) for step in factors}) > 1:
            raise CylinderError("Every time step needs one union per coordinate")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def full(cls, d: int, length: int = 1, offset: int = 0) -> "IntervalCylinder":
        return cls(offset, tuple(tuple(FULL for _ in range(d)) for _ in range(length)))

    @classmethod
    def single(cls, d: int, k: int, union, offset: int = 0) -> "IntervalCylinder":
        """Constrain coordinate k at one time, leave everything else free"""
        step = tuple(tuple(union) if j == k else FULL for j in range(d))
        return cls(offset, (step,))

    @property
    def length(self) -> int:
        return len(self.factors)

    @property
    def dimension(self) -> int:
        return len(self.factors[0]) if self.factors else 0

    @property
    def window(self) -> range:
        return range(self.offset, self.offset + self.length)

    def shift(self, k: int) -> "IntervalCylinder":
        return IntervalCylinder(self.offset + k, self.factors)

    def factor_at(self, t: int) -> tuple:
        if t in self.window:
            return self.factors[t - self.offset]
        return tuple(FULL for _ in range(self.dimension))

    def intersect(self, other: "IntervalCylinder") -> "IntervalCylinder":
        d = max(self.dimension, other.dimension)
        if self.length and other.length and self.dimension != other.dimension:
            raise CylinderError("Cannot intersect cylinders of different dimension")
        if not self.length:
            return other
        if not other.length:
            return self
        start = min(self.offset, other.offset)
        stop = max(self.window.stop, other.window.stop)
        steps = []
        for t in range(start, stop):
            a, b = self.factor_at(t), other.factor_at(t)
            steps.append(tuple(_intersect_unions(a[k], b[k]) for k in range(d)))
        return IntervalCylinder(start, tuple(steps))

    def contains(self, u_windows: np.ndarray) -> np.ndarray:
        """Membership of windows (N, length, d) aligned with self.window"""
        u_windows = np.asarray(u_windows, dtype=float)
        hit = np.ones(u_windows.shape[0], dtype=bool)
        for j, step in enumerate(self.factors):
            for k, union in enumerate(step):
                hit &= _union_contains(union, u_windows[:, j, k])
        return hit


# ----------------------------------------------------------------------
# atom-interval bookkeeping
# ----------------------------------------------------------------------

def _factor_fractions(marginal, union: tuple) -> np.ndarray:
    """
    lambda(U & A_i) / lambda(A_i) for every atom interval A_i
    Each subinterval must lie inside or cover every atom interval it meets;
    a partial overlap that extends past the boundary raises
    """
    intervals = marginal.atom_intervals()
    fractions = np.zeros(len(intervals))
    for lo, hi in union:
        for iv in intervals:
            overlap = min(hi, iv.hi) - max(lo, iv.lo)
            if overlap <= 0:
                continue
            inside = lo >= iv.lo - _EDGE_TOL and hi <= iv.hi + _EDGE_TOL
            covers = lo <= iv.lo + _EDGE_TOL and hi >= iv.hi - _EDGE_TOL
            if not (inside or covers):
                raise CylinderError(
                    f"Subinterval [{lo}, {hi}) straddles atom interval ({iv.lo}, {iv.hi})"
                )
            fractions[iv.atom_index] += overlap / iv.length
    return np.minimum(fractions, 1.0)


def _state_atoms(marginals, proc: FiniteProcess) -> np.ndarray:
    """Atom index (states x d) of every observed coordinate"""
    if len(marginals) != proc.dimension:
        raise CylinderError(f"{len(marginals)} marginals for a {proc.dimension}-dimensional process")
    table = np.empty((proc.n_states, proc.dimension), dtype=int)
    for k, m in enumerate(marginals):
        if not m.is_discrete:
            raise CylinderError("Exact lifted measures need purely atomic marginals")
        table[:, k] = m.atom_lookup(proc.observe[:, k])
        if np.any(table[:, k] < 0):
            raise CylinderError(f"Observed values of coordinate {k} are not atoms of its marginal")
    return table


def _step_emission(marginals, state_atoms: np.ndarray, step: tuple) -> np.ndarray:
    e = np.ones(state_atoms.shape[0])
    for k, union in enumerate(step):
        e *= _factor_fractions(marginals[k], union)[state_atoms[:, k]]
    return e


def cylinder_measure(marginals, proc: FiniteProcess, D: IntervalCylinder) -> float:
    """
    Exact mu(D) = sum over state windows w of nu(w) * prod_{j,k} lambda(D_j^k & A_i) / lambda(A_i)
    """
    if D.length and D.dimension != proc.dimension:
        raise CylinderError("Cylinder and process dimensions differ")
    state_atoms = _state_atoms(marginals, proc)
    emissions = [_step_emission(marginals, state_atoms, step) for step in D.factors]
    return path_probability(proc, emissions)


def canonical_measure(marginals, x_window, D: IntervalCylinder) -> float:
    """
    Integral of 1_D against mu_omega for a fixed X-window aligned with D.window
    Atom coordinates contribute lambda(D & A_i) / lambda(A_i), continuity
    coordinates the indicator of F(x) in D
    """
    x_window = np.atleast_2d(np.asarray(x_window, dtype=float))
    if x_window.shape[0] != D.length:
        raise CylinderError("X-window length differs from the cylinder length")
    value = 1.0
    for j, step in enumerate(D.factors):
        for k, union in enumerate(step):
            m, x = marginals[k], x_window[j, k]
            idx = m.atom_index(x)
            if idx is not None:
                value *= _factor_fractions(m, union)[idx]
            elif m.is_support(x):
                value *= float(_union_contains(union, np.array(m.cdf(x))))
            else:
                raise SupportError(f"Value {x} is not a support point", index=j, coordinate=k, value=x)
            if value == 0.0:
                return 0.0
    return value


def _merge_pieces(pieces: list) -> tuple:
    merged = []
    for lo, hi in sorted(pieces):
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return tuple(merged)


def saturate(marginals, D: IntervalCylinder) -> IntervalCylinder:
    """pi^{-1} pi (D): every subinterval grows to include each atom interval it meets"""
    steps = []
    for step in D.factors:
        new_step = []
        for k, union in enumerate(step):
            intervals = marginals[k].atom_intervals()
            _factor_fractions(marginals[k], union)
            pieces = []
            for lo, hi in union:
                met = [iv for iv in intervals if min(hi, iv.hi) - max(lo, iv.lo) > 0]
                pieces.append((min([lo] + [iv.lo for iv in met]), max([hi] + [iv.hi for iv in met])))
            new_step.append(_merge_pieces(pieces))
        steps.append(tuple(new_step))
    return IntervalCylinder(D.offset, tuple(steps))


# ----------------------------------------------------------------------
# lifting and projection
# ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PathPair:
    """An X-path, its lift and the atom-coordinate draws that realized mu_omega"""
    x_path: np.ndarray
    u_path: np.ndarray
    draw_log: pd.DataFrame

    def __post_init__(self):
        if self.x_path.shape != self.u_path.shape:
            raise SupportError("X-path and U-path must have the same shape")


def _lift_array(marginals, x: np.ndarray, rng: np.random.Generator):
    """
    Lift an array (..., d); returns (u, atom_mask)
    Atom draws are consumed in row-major order of the atom entries
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    if len(marginals) != d:
        raise SupportError(f"{len(marginals)} marginals for {d}-dimensional values")

    atom_idx = np.stack([m.atom_lookup(x[..., k]) for k, m in enumerate(marginals)], axis=-1)
    atom_mask = atom_idx >= 0

    for k, m in enumerate(marginals):
        free = ~atom_mask[..., k]
        if not np.any(free):
            continue
        ok = np.asarray(m.is_support(np.where(free, x[..., k], m.quantile(0.5))), dtype=bool)
        bad = np.argwhere(free & ~ok)
        if len(bad):
            where = tuple(int(i) for i in bad[0])
            n = where[-1] if len(where) else 0
            value = float(x[where + (k,)])
            raise SupportError(
                f"Value {value} at index {n}, coordinate {k} is not a support point of its marginal",
                index=n, coordinate=k, value=value
            )

    u = np.empty(x.shape)
    v = rng.random(int(atom_mask.sum()))
    draws = np.zeros(x.shape)
    draws[atom_mask] = v

    for k, m in enumerate(marginals):
        cont = ~atom_mask[..., k]
        u[..., k] = np.where(cont, m.cdf(x[..., k]), 0.0)
        intervals = m.atom_intervals()
        if not intervals:
            continue
        lo = np.array([iv.lo for iv in intervals])
        hi = np.array([iv.hi for iv in intervals])
        idx = np.maximum(atom_idx[..., k], 0)
        a, b = lo[idx], hi[idx]
        drawn = a + draws[..., k] * (b - a)
        # open interval: endpoints are never produced
        drawn = np.clip(drawn, np.nextafter(a, np.inf), np.nextafter(b, -np.inf))
        u[..., k] = np.where(atom_mask[..., k], drawn, u[..., k])
    return u, atom_mask


def lift_point(marginals, x, rng: np.random.Generator) -> np.ndarray:
    """Lift one point of R^d to (0,1)^d"""
    u, _ = _lift_array(marginals, np.asarray(x, dtype=float)[None, :], rng)
    return u[0]


def lift_path(marginals, x_path, rng: np.random.Generator) -> PathPair:
    """Coordinatewise lift with a fresh independent draw for every atom entry"""
    x_path = np.atleast_2d(np.asarray(x_path, dtype=float))
    u_path, atom_mask = _lift_array(marginals, x_path, rng)
    n_idx, k_idx = np.nonzero(atom_mask)
    draw_log = pd.DataFrame({"n": n_idx, "k": k_idx, "u": u_path[n_idx, k_idx]}, columns=DRAW_LOG_COLUMNS)
    logger.debug(f"Lifted path of length {len(x_path)} with {len(draw_log)} atom draws")
    return PathPair(x_path=x_path, u_path=u_path, draw_log=draw_log)


def lift_paths(marginals, x_paths, rng: np.random.Generator) -> np.ndarray:
    """Vectorized lift of a batch (N, T, d)"""
    u, _ = _lift_array(marginals, x_paths, rng)
    return u


def project(marginals, u_path) -> np.ndarray:
    """pi: apply F^{-1} coordinatewise"""
    u_path = np.asarray(u_path, dtype=float)
    x = np.empty(u_path.shape)
    for k, m in enumerate(marginals):
        x[..., k] = m.quantile(u_path[..., k])
    return x


# ----------------------------------------------------------------------
# partitions of (0,1)^d
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Partition:
    """Product partition of (0,1)^d from sorted interior cut points per coordinate"""
    cuts: tuple

    def __post_init__(self):
        cuts = tuple(tuple(sorted(float(c) for c in cs)) for cs in self.cuts)
        for cs in cuts:
            if any(not 0.0 < c < 1.0 for c in cs) or len(set(cs)) != len(cs):
                raise CylinderError("Cut points must be distinct and inside (0, 1)")
        object.__setattr__(self, "cuts", cuts)

    @property
    def dimension(self) -> int:
        return len(self.cuts)

    def intervals(self, k: int) -> list:
        edges = (0.0,) + self.cuts[k] + (1.0,)
        return list(zip(edges[:-1], edges[1:]))

    @property
    def n_cells(self) -> int:
        return int(np.prod([len(cs) + 1 for cs in self.cuts]))

    def cells(self) -> list:
        """Cells as tuples of one subinterval per coordinate, coordinate 0 slowest"""
        return list(itertools.product(*(self.intervals(k) for k in range(self.dimension))))

    def locate(self, u: np.ndarray) -> np.ndarray:
        """Cell index of each point of an array (..., d)"""
        u = np.asarray(u, dtype=float)
        index = np.zeros(u.shape[:-1], dtype=np.int64)
        for k, cs in enumerate(self.cuts):
            index = index * (len(cs) + 1) + np.searchsorted(np.array(cs), u[..., k], side="right")
        return index


def refined_partition(marginals, r: int) -> Partition:
    """Split every atom interval into r equal half-open parts (refines gamma)"""
    if r < 1:
        raise CylinderError("Refinement must be a positive integer")
    cuts = []
    for m in marginals:
        if not m.is_discrete:
            raise CylinderError("Refined partitions need purely atomic marginals")
        points = set()
        for iv in m.atom_intervals():
            points.update((iv.lo, iv.hi))
            points.update(iv.lo + j * (iv.hi - iv.lo) / r for j in range(1, r))
        cuts.append(tuple(p for p in points if 0.0 < p < 1.0))
    return Partition(tuple(cuts))


def partition_cells(partition: Partition) -> list:
    """Product cells of (0,1)^d in the order used by cell emissions and locate"""
    return partition.cells()


def cell_emissions(marginals, proc: FiniteProcess, partition: Partition) -> np.ndarray:
    """Emission matrix (cells x states): the one-step lifted measure of each cell given the state"""
    state_atoms = _state_atoms(marginals, proc)
    per_coordinate = [
        np.array([_factor_fractions(marginals[k], (iv,))[state_atoms[:, k]] for iv in partition.intervals(k)])
        for k in range(partition.dimension)
    ]
    E = per_coordinate[0]
    for F in per_coordinate[1:]:
        E = (E[:, None, :] * F[None, :, :]).reshape(-1, proc.n_states)
    return E


def estimate_cylinder_measure(marginals, proc: FiniteProcess, D: IntervalCylinder,
                              rng: np.random.Generator, n_samples: int) -> tuple:
    """Monte Carlo mu(D) from lifted stationary windows; returns (estimate, stderr)"""
    _, x = sample_paths(proc, rng, n_samples, D.length)
    u = lift_paths(marginals, x, rng)
    hit = D.contains(u)
    p = float(hit.mean())
    return p, float(np.sqrt(max(p * (1.0 - p), 0.0) / n_samples))
