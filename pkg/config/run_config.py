"""
Run Configuration
Load and validate the JSON run document shared by every subcommand, and fan a
single seed out into per-task random streams
"""

import json
import os
from dataclasses import dataclass, field, fields, asdict, replace

import numpy as np

from config.defaults import (
    NAMED_PROCESSES, DEFAULT_SEED, DEFAULT_LENGTH, DEFAULT_LAGS, DEFAULT_BLOCK_LENGTHS,
    DEFAULT_REFINEMENTS, DEFAULT_MC_SAMPLES, DEFAULT_MC_CUTS, DEFAULT_REPLICATES, DEFAULT_T_GRID,
    MIN_MC_WINDOWS
)
from models.chain import FiniteProcess, observed_marginals
from models.errors import ConfigError, UniformLiftError
from models.lift import Partition
from models.marginal import MixedMarginal

# Stream ids: one per randomized task, never reused
TASK_IDS = {
    "simulate": 0,
    "lift": 1,
    "mixing": 2,
    "kiefer": 3,
    "kolmogorov": 4,
    "factor_identity": 5,
    "uniform_marginals": 6,
    "order_preservation": 7,
    "partition_bound": 8,
    "kiefer_covariance": 9,
    "gamma_grid": 10,
    "restriction_identity": 11
}


def task_rng(seed: int, task: str) -> np.random.Generator:
    """Independent generator for a named task under a single run seed"""
    if task not in TASK_IDS:
        raise ConfigError(f"Unknown random task: {task}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(TASK_IDS[task],))))


@dataclass
class RunConfig:
    """Parameters of one CLI invocation"""
    process: object = "default"
    marginals: list = None
    seed: int = DEFAULT_SEED
    length: int = DEFAULT_LENGTH
    x_path: str = None
    lags: list = field(default_factory=lambda: list(DEFAULT_LAGS))
    block_lengths: list = field(default_factory=lambda: list(DEFAULT_BLOCK_LENGTHS))
    refinements: list = field(default_factory=lambda: list(DEFAULT_REFINEMENTS))
    mc_samples: int = DEFAULT_MC_SAMPLES
    mc_partition: list = None
    s_grid: list = None
    t_grid: list = field(default_factory=lambda: list(DEFAULT_T_GRID))
    ntrunc: int = None
    replicates: int = DEFAULT_REPLICATES
    out: str = "out"

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"Seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.length < 0:
            raise ConfigError("length must be nonnegative")
        for name in ("lags", "block_lengths", "refinements"):
            values = getattr(self, name)
            if not values or any(int(v) < 1 for v in values):
                raise ConfigError(f"{name} must be a nonempty list of positive integers")
        if self.mc_samples < 0 or self.replicates < 1:
            raise ConfigError("Sample counts must be positive")
        if 0 < self.mc_samples < MIN_MC_WINDOWS:
            raise ConfigError(f"mc_samples must be 0 or at least {MIN_MC_WINDOWS}, got {self.mc_samples}")
        if self.ntrunc is not None and self.ntrunc < 2:
            raise ConfigError("ntrunc must be at least 2")

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"Unknown configuration keys: {sorted(unknown)}")
        return cls(**doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Command line values replace file values; None means not given"""
        given = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **given)

    # ------------------------------------------------------------------
    # resolution of the documents into library objects
    # ------------------------------------------------------------------

    def build_process(self) -> FiniteProcess:
        doc = self.process
        if isinstance(doc, str):
            if doc in NAMED_PROCESSES:
                doc = NAMED_PROCESSES[doc]
            elif os.path.exists(doc):
                with open(doc, "r", encoding="utf-8") as f:
                    doc = json.load(f)
            else:
                raise ConfigError(f"Process '{self.process}' is neither a named process nor a file")
        if not isinstance(doc, dict):
            raise ConfigError("Process must be a JSON object")
        try:
            return FiniteProcess.from_dict(doc)
        except UniformLiftError as e:
            raise ConfigError(f"Invalid process: {e}") from e

    def build_marginals(self, proc: FiniteProcess) -> list:
        """Marginal overrides, or the exact observed marginals of the process"""
        if self.marginals is None:
            return observed_marginals(proc)
        if len(self.marginals) != proc.dimension:
            raise ConfigError(f"{len(self.marginals)} marginals for a {proc.dimension}-dimensional process")
        return [MixedMarginal.from_dict(m) for m in self.marginals]

    def build_mc_partition(self, d: int) -> Partition:
        cuts = self.mc_partition if self.mc_partition is not None else [DEFAULT_MC_CUTS] * d
        if len(cuts) != d:
            raise ConfigError(f"mc_partition needs cut points for each of the {d} coordinates")
        return Partition(tuple(tuple(c) for c in cuts))

    def build_s_grid(self, proc: FiniteProcess) -> list:
        """Per-coordinate grids; defaults to the observed values of each coordinate"""
        if self.s_grid is None:
            return [np.unique(proc.observe[:, k]).tolist() for k in range(proc.dimension)]
        if len(self.s_grid) != proc.dimension:
            raise ConfigError(f"s_grid needs one grid per coordinate ({proc.dimension})")
        return self.s_grid


def load_config(path: str = None) -> RunConfig:
    """RunConfig from a JSON file, or the defaults when no file is given"""
    if path is None:
        return RunConfig()
    try:
        with open(path, "r", encoding="utf-8") as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read configuration {path}: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("Configuration must be a JSON object")
    return RunConfig.from_dict(doc)
