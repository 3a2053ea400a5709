"""
Numerical Defaults and Named Processes
Tolerances, size caps and the ground-truth processes used by verify
"""

# Tolerances
MASS_TOLERANCE = 1e-12
STOCHASTIC_TOLERANCE = 1e-12
SUPPORT_TOLERANCE = 1e-12
PSD_JITTER = 1e-8
GAMMA_TAIL_TOLERANCE = 1e-10
RATE_TOLERANCE = 1e-10

# Size caps (exhaustive scans must stay feasible)
MAX_STATES = 8
MAX_DIMENSION = 3
MAX_BLOCK_CELLS = 4096
EXHAUSTIVE_CELLS = 16
DIRECT_SOLVE_STATES = 64

# Stationary distribution by power iteration
POWER_ITERATION_TOL = 1e-14
POWER_ITERATION_MAX = 10**6

# Gamma series
DEFAULT_NTRUNC = 200
MAX_NTRUNC = 5000

# Monte Carlo
MIN_MC_WINDOWS = 10**5
BOOTSTRAP_RESAMPLES = 200

# Ground-truth processes (same documents as the --config "process" field)
DEFAULT_CHAIN = {
    "states": 2,
    "P": [[0.9, 0.1], [0.2, 0.8]],
    "observe": [[0.0], [1.0]]
}

# Three states, two observed points in the plane (states 0 and 1 collapse)
COLLAPSING_CHAIN = {
    "states": 3,
    "P": [[0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4]],
    "observe": [[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]]
}

IID_CHAIN = {
    "weights": [0.5, 0.3, 0.2],
    "observe": [[0.0], [1.0], [2.0]]
}

# Six states on a 3x2 lattice of the plane; doubly stochastic, so q is uniform
PLANAR_CHAIN = {
    "states": 6,
    "P": [
        [0.5, 0.3, 0.0, 0.2, 0.0, 0.0],
        [0.0, 0.5, 0.3, 0.0, 0.2, 0.0],
        [0.0, 0.0, 0.5, 0.3, 0.0, 0.2],
        [0.2, 0.0, 0.0, 0.5, 0.3, 0.0],
        [0.0, 0.2, 0.0, 0.0, 0.5, 0.3],
        [0.3, 0.0, 0.2, 0.0, 0.0, 0.5]
    ],
    "observe": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, 1.0]]
}

# Kiefer covariance check: five points whose lower orthants are distinct nontrivial state sets
KIEFER_POINTS = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0], [1.0, 1.0]]

NAMED_PROCESSES = {
    "default": DEFAULT_CHAIN,
    "collapsing": COLLAPSING_CHAIN,
    "iid": IID_CHAIN,
    "planar": PLANAR_CHAIN
}

# Stored expectations for DEFAULT_CHAIN with L = 1, lags n = 1..5.
# Second eigenvalue 0.7, q = (2/3, 1/3): alpha = q0 q1 0.7^n,
# beta = 2 q0 q1 0.7^n, phi = max(q0, q1) 0.7^n.
REFERENCE_LAGS = [1, 2, 3, 4, 5]
REFERENCE_COEFFICIENTS = {
    "alpha": [(2.0 / 9.0) * 0.7**n for n in REFERENCE_LAGS],
    "beta": [(4.0 / 9.0) * 0.7**n for n in REFERENCE_LAGS],
    "phi": [(2.0 / 3.0) * 0.7**n for n in REFERENCE_LAGS]
}
REFERENCE_TOLERANCE = 1e-12

# Command defaults
DEFAULT_SEED = 20240917
DEFAULT_LENGTH = 1000
DEFAULT_LAGS = [1, 2, 3, 4, 5]
DEFAULT_BLOCK_LENGTHS = [1, 2]
DEFAULT_REFINEMENTS = [1, 2, 3]
DEFAULT_MC_SAMPLES = 10**5
DEFAULT_MC_CUTS = [0.5, 0.85]
PARTITION_MC_SAMPLES = 10**6
KOLMOGOROV_LEVEL = 0.01
DEFAULT_REPLICATES = 5000
DEFAULT_T_GRID = [0.0, 0.25, 0.5, 0.75, 1.0]
