"""
Mixed Marginal Distributions
One-dimensional distribution functions with point masses and a
piecewise-linear continuous part, their generalized inverses and atom intervals
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from config.defaults import MASS_TOLERANCE, SUPPORT_TOLERANCE
from models.errors import MarginalError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


@dataclass(frozen=True)
class AtomInterval:
    """Quantile levels (lo, hi) = (F(a_i-), F(a_i)) that map to atom i"""
    atom_index: int
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, s: float) -> bool:
        return self.lo < s < self.hi


@dataclass(frozen=True)
class AtomIndex:
    index: int


@dataclass(frozen=True)
class ContinuityPoint:
    pass


@dataclass(frozen=True)
class MixedMarginal:
    """
    Distribution function F = sum of atoms + piecewise-linear sub-distribution

    atoms: ((a_1, p_1), ...) with strictly increasing locations
    continuous_knots: ((t_0, 0), (t_1, c_1), ...) cumulative continuous mass,
    nondecreasing, ending at 1 - sum(p_i)
    """
    atoms: tuple = ()
    continuous_knots: tuple = ()
    _bp: np.ndarray = field(init=False, repr=False, compare=False)
    _left: np.ndarray = field(init=False, repr=False, compare=False)
    _right: np.ndarray = field(init=False, repr=False, compare=False)
    _atom_bp: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = tuple((float(a), float(p)) for a, p in self.atoms)
        knots = tuple((float(t), float(c)) for t, c in self.continuous_knots)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "continuous_knots", knots)
        self._validate()
        self._build_tables()

    # ------------------------------------------------------------------
    # construction
    # ------------------------------------------------------------------

    def _validate(self):
        if not self.atoms and not self.continuous_knots:
            raise MarginalError("Marginal needs atoms or a continuous part")

        locations = np.array([a for a, _ in self.atoms])
        masses = np.array([p for _, p in self.atoms])
        if len(locations) and not np.all(np.isfinite(locations)):
            raise MarginalError("Atom locations must be finite")
        if len(locations) > 1 and np.any(np.diff(locations) <= 0):
            raise MarginalError("Atom locations must be strictly increasing")
        if np.any(masses <= 0) or np.any(masses > 1):
            raise MarginalError("Atom masses must lie in (0, 1]")

        continuous_mass = 0.0
        if self.continuous_knots:
            if len(self.continuous_knots) < 2:
                raise MarginalError("Continuous part needs at least two knots")
            t = np.array([k for k, _ in self.continuous_knots])
            c = np.array([v for _, v in self.continuous_knots])
            if np.any(np.diff(t) <= 0):
                raise MarginalError("Knot locations must be strictly increasing")
            if np.any(np.diff(c) < 0):
                raise MarginalError("Continuous part must be nondecreasing")
            if abs(c[0]) > MASS_TOLERANCE:
                raise MarginalError("Continuous part must start at 0")
            continuous_mass = float(c[-1])

        total = float(masses.sum()) + continuous_mass
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise MarginalError(f"Total mass is {total!r}, expected 1")

    def _build_tables(self):
        # F is linear between consecutive breakpoints; jumps only at atoms
        locations = [a for a, _ in self.atoms]
        knot_t = [t for t, _ in self.continuous_knots]
        bp = np.unique(np.array(locations + knot_t, dtype=float))

        if self.continuous_knots:
            kt = np.array(knot_t)
            kc = np.array([c for _, c in self.continuous_knots])
            kc[0] = 0.0
            cont = np.interp(bp, kt, kc)
        else:
            cont = np.zeros(len(bp))

        jump = np.zeros(len(bp))
        atom_bp = np.searchsorted(bp, np.array(locations, dtype=float))
        for (_, p), j in zip(self.atoms, atom_bp):
            jump[j] = p

        left = np.empty(len(bp))
        right = np.empty(len(bp))
        previous_right, previous_cont = 0.0, 0.0
        for j in range(len(bp)):
            left[j] = previous_right + (cont[j] - previous_cont)
            right[j] = left[j] + jump[j]
            previous_right, previous_cont = right[j], cont[j]

        np.minimum(left, 1.0, out=left)
        np.minimum(right, 1.0, out=right)
        right[-1] = 1.0

        object.__setattr__(self, "_bp", bp)
        object.__setattr__(self, "_left", left)
        object.__setattr__(self, "_right", right)
        object.__setattr__(self, "_atom_bp", atom_bp.astype(int))

    @classmethod
    def point_mass(cls, a: float) -> "MixedMarginal":
        return cls(atoms=((a, 1.0),))

    @classmethod
    def bernoulli(cls, p: float) -> "MixedMarginal":
        """Atoms at 0 (mass 1-p) and 1 (mass p)"""
        if not 0 < p < 1:
            raise MarginalError("Bernoulli parameter must lie in (0, 1)")
        return cls(atoms=((0.0, 1.0 - p), (1.0, p)))

    @classmethod
    def uniform(cls, lo: float = 0.0, hi: float = 1.0) -> "MixedMarginal":
        return cls(continuous_knots=((lo, 0.0), (hi, 1.0)))

    @classmethod
    def discrete(cls, values, weights) -> "MixedMarginal":
        """Purely atomic marginal; repeated values are aggregated"""
        values = np.asarray(values, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if values.shape != weights.shape:
            raise MarginalError("values and weights must have the same length")
        keep = weights > 0
        locations, inverse = np.unique(values[keep], return_inverse=True)
        masses = np.zeros(len(locations))
        np.add.at(masses, inverse, weights[keep])
        return cls(atoms=tuple(zip(locations.tolist(), masses.tolist())))

    @classmethod
    def from_dict(cls, doc: dict) -> "MixedMarginal":
        unknown = set(doc) - {"atoms", "continuous"}
        if unknown:
            raise MarginalError(f"Unknown marginal fields: {sorted(unknown)}")
        atoms = tuple((entry["a"], entry["p"]) for entry in doc.get("atoms", []))
        knots = tuple((t, c) for t, c in doc.get("continuous", []))
        return cls(atoms=atoms, continuous_knots=knots)

    def to_dict(self) -> dict:
        return {
            "atoms": [{"a": a, "p": p} for a, p in self.atoms],
            "continuous": [[t, c] for t, c in self.continuous_knots]
        }

    # ------------------------------------------------------------------
    # properties
    # ------------------------------------------------------------------

    @property
    def atom_locations(self) -> np.ndarray:
        return np.array([a for a, _ in self.atoms], dtype=float)

    @property
    def atom_masses(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms], dtype=float)

    @property
    def continuous_mass(self) -> float:
        return self.continuous_knots[-1][1] if self.continuous_knots else 0.0

    @property
    def is_discrete(self) -> bool:
        return not self.continuous_knots or self.continuous_mass == 0.0

    # ------------------------------------------------------------------
    # distribution function and inverse
    # ------------------------------------------------------------------

    def cdf(self, t: ArrayLike) -> ArrayLike:
        """F(t), right-continuous"""
        t_arr = np.asarray(t, dtype=float)
        bp, left, right = self._bp, self._left, self._right
        n = len(bp)

        j = np.searchsorted(bp, t_arr, side="right") - 1
        inner = np.clip(j, 0, max(n - 2, 0))
        nxt = np.minimum(inner + 1, n - 1)
        width = bp[nxt] - bp[inner]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(width > 0, (t_arr - bp[inner]) / width, 0.0)
        linear = right[inner] + frac * (left[nxt] - right[inner])

        out = np.where(j < 0, 0.0, np.where(j >= n - 1, 1.0, linear))
        return out if out.ndim else float(out)

    def cdf_left(self, t: ArrayLike) -> ArrayLike:
        """Left limit F(t-)"""
        t_arr = np.asarray(t, dtype=float)
        value = np.asarray(self.cdf(t_arr), dtype=float)
        k = np.searchsorted(self._bp, t_arr, side="left")
        k_safe = np.minimum(k, len(self._bp) - 1)
        at_breakpoint = (k < len(self._bp)) & (self._bp[k_safe] == t_arr)
        out = np.where(at_breakpoint, self._left[k_safe], value)
        return out if out.ndim else float(out)

    def quantile(self, s: ArrayLike) -> ArrayLike:
        """F^{-1}(s) = inf{t : F(t) >= s} for s in (0, 1)"""
        s_arr = np.asarray(s, dtype=float)
        if np.any(~((s_arr > 0) & (s_arr < 1))):
            raise MarginalError("Quantile levels must lie in the open interval (0, 1)")
        bp, left, right = self._bp, self._left, self._right

        j = np.minimum(np.searchsorted(right, s_arr, side="left"), len(bp) - 1)
        prev = np.maximum(j - 1, 0)
        rise = left[j] - right[prev]
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(rise > 0, (s_arr - right[prev]) / rise, 1.0)
        interpolated = bp[prev] + frac * (bp[j] - bp[prev])

        # s strictly below F(bp[j]-) means the inverse sits inside a continuous segment
        inside = (j > 0) & (left[j] > s_arr)
        out = np.where(inside, interpolated, bp[j])
        return out if out.ndim else float(out)

    # ------------------------------------------------------------------
    # atoms
    # ------------------------------------------------------------------

    def atom_intervals(self) -> list:
        return [
            AtomInterval(atom_index=i, lo=float(self._left[j]), hi=float(self._right[j]))
            for i, j in enumerate(self._atom_bp)
        ]

    def atom_index(self, x: float):
        """Index of the atom located exactly at x, or None"""
        idx = int(self.atom_lookup(np.array([x]))[0])
        return None if idx < 0 else idx

    def atom_lookup(self, x: np.ndarray) -> np.ndarray:
        """Vectorized atom index for each entry of x, -1 where x is not an atom"""
        x = np.asarray(x, dtype=float)
        locations = self.atom_locations
        if not len(locations):
            return np.full(x.shape, -1, dtype=int)
        k = np.searchsorted(locations, x)
        k_safe = np.minimum(k, len(locations) - 1)
        hit = (k < len(locations)) & (locations[k_safe] == x)
        return np.where(hit, k_safe, -1)

    def classify(self, s: float):
        """AtomIndex(i) when F^{-1}(s) is atom a_i, otherwise ContinuityPoint()"""
        idx = self.atom_index(self.quantile(s))
        return ContinuityPoint() if idx is None else AtomIndex(idx)

    def is_support(self, x: ArrayLike) -> ArrayLike:
        """Atoms, and continuity points with F^{-1}(F(x)) = x"""
        x_arr = np.asarray(x, dtype=float)
        atom = self.atom_lookup(x_arr) >= 0
        s = np.asarray(self.cdf(x_arr), dtype=float)
        interior = (s > 0) & (s < 1)
        back = np.asarray(self.quantile(np.where(interior, s, 0.5)), dtype=float)
        tol = SUPPORT_TOLERANCE * np.maximum(1.0, np.abs(x_arr))
        out = atom | (interior & (np.abs(back - x_arr) <= tol))
        return out if out.ndim else bool(out)

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """Random variates F^{-1}(V) with V uniform on (0, 1)"""
        v = rng.random(size)
        v = np.where(v == 0.0, np.nextafter(0.0, 1.0), v)
        return np.asarray(self.quantile(v))


@dataclass(frozen=True)
class MarginalProfile:
    """Bounds for random_marginal"""
    kind: str = "mixed"
    max_atoms: int = 4
    max_knots: int = 5
    scale: float = 10.0
    allow_flat: bool = True


def random_marginal(rng: np.random.Generator, profile: MarginalProfile = MarginalProfile()) -> MixedMarginal:
    """
    Generate a valid MixedMarginal
    kind: "discrete", "continuous" or "mixed"
    """
    if profile.kind not in ("discrete", "continuous", "mixed"):
        raise MarginalError(f"Unknown profile kind: {profile.kind}")

    atoms = ()
    atom_share = {"discrete": 1.0, "continuous": 0.0}.get(profile.kind)
    if atom_share is None:
        atom_share = float(rng.uniform(0.2, 0.8))

    if atom_share > 0:
        count = int(rng.integers(1, profile.max_atoms + 1))
        locations = np.unique(np.round(rng.uniform(-profile.scale, profile.scale, count), 2))
        masses = rng.dirichlet(np.ones(len(locations))) * atom_share
        atoms = tuple(zip(locations.tolist(), masses.tolist()))

    knots = ()
    if profile.kind != "discrete":
        continuous_mass = 1.0 - sum(p for _, p in atoms)
        count = int(rng.integers(2, max(profile.max_knots, 2) + 1))
        t = np.sort(rng.uniform(-profile.scale, profile.scale, count))
        # rising segments keep at least a tenth of an equal share of the mass
        increments = 0.1 / (count - 1) + 0.9 * rng.dirichlet(np.ones(count - 1))
        if profile.allow_flat and count > 2 and rng.random() < 0.3:
            increments[int(rng.integers(0, count - 1))] = 0.0
            increments /= increments.sum()
        c = np.concatenate([[0.0], np.cumsum(increments * continuous_mass)])
        c[-1] = continuous_mass
        c = np.maximum.accumulate(c)
        knots = tuple(zip(t.tolist(), c.tolist()))

    marginal = MixedMarginal(atoms=atoms, continuous_knots=knots)
    logger.debug(f"Random {profile.kind} marginal with {len(atoms)} atoms and {len(knots)} knots")
    return marginal
