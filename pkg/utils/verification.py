"""
Verification Suite
Acceptance criteria for the lift, the coefficients and the empirical-process
application; every criterion becomes one report entry, failures included
"""

import itertools
import logging

import numpy as np
from scipy import stats

from config import NAMED_PROCESSES, KIEFER_POINTS, REFERENCE_LAGS, REFERENCE_COEFFICIENTS, REFERENCE_TOLERANCE
from config.defaults import (
    RATE_TOLERANCE, PSD_JITTER, GAMMA_TAIL_TOLERANCE, PARTITION_MC_SAMPLES, KOLMOGOROV_LEVEL, MIN_MC_WINDOWS
)
from config.run_config import RunConfig, task_rng
from models.chain import (
    FiniteProcess, StateCylinder, fdd_probability, observed_marginals, sample_paths,
    observed_cdf, second_eigenvalue_modulus, validate_mixing
)
from models.empirical import (
    product_grid, gamma_matrix, kiefer_replicates, kiefer_covariance_estimate, kolmogorov_check
)
from models.lift import IntervalCylinder, Partition, cylinder_measure, lift_path, lift_paths, project
from models.marginal import MarginalProfile, random_marginal
from models.mixing import (
    block_coefficients, lifted_coefficients, estimate_coefficients_mc, sample_lifted_windows,
    window_length, cesaro_correlation, fit_geometric_decay, COEFFICIENTS
)
from utils.data_export import csv_text, path_frame

logger = logging.getLogger(__name__)

# Sample sizes: (full, quick)
SIZES = {
    "factor_cases": (1000, 100),
    "uniform_samples": (10**5, 10**4),
    "order_pairs": (10**4, 10**3),
    "rate_lags": ([1, 2, 3, 4, 5], [1, 2]),
    "rate_refinements": ([1, 2, 3], [1, 2]),
    "partition_samples": (PARTITION_MC_SAMPLES, 10**5),
    "kiefer_replicates": (5000, 1000),
    "kolmogorov_n": (10**4, 2000),
    "kolmogorov_replicates": (2000, 800)
}

CESARO_HORIZON = 50
CESARO_LIMIT = 1e-3
KOLMOGOROV_DISTANCE = 0.05
KIEFER_SIGMAS = 5.0


def _size(name: str, quick: bool):
    full, reduced = SIZES[name]
    return reduced if quick else full


def _entry(criterion: str, claim: str, passed: bool, value, tolerance, message: str) -> dict:
    return {
        "id": criterion,
        "property": claim,
        "passed": bool(passed),
        "value": None if value is None else float(value),
        "tolerance": None if tolerance is None else float(tolerance),
        "message": message
    }


def _process(name: str) -> FiniteProcess:
    return FiniteProcess.from_dict(NAMED_PROCESSES[name])


# ----------------------------------------------------------------------
# lift
# ----------------------------------------------------------------------

def check_factor_identity(config: RunConfig, quick: bool) -> dict:
    """project(lift(x)) == x on random mixed marginals and paths"""
    rng = task_rng(config.seed, "factor_identity")
    cases = _size("factor_cases", quick)
    mismatches, worst = 0, 0.0
    for _ in range(cases):
        d = int(rng.integers(1, 4))
        marginals = [random_marginal(rng, MarginalProfile(kind="mixed")) for _ in range(d)]
        length = int(rng.integers(1, 21))
        x = np.stack([m.sample(rng, length) for m in marginals], axis=1)
        pair = lift_path(marginals, x, rng)
        back = project(marginals, pair.u_path)
        atoms = np.stack([m.atom_lookup(x[:, k]) >= 0 for k, m in enumerate(marginals)], axis=1)
        mismatches += int(np.count_nonzero((back != x) & atoms))
        relative = np.abs(back - x) / np.maximum(1.0, np.abs(x))
        worst = max(worst, float(relative[~atoms].max(initial=0.0)))
    passed = mismatches == 0 and worst <= 1e-12
    return _entry("factor_identity", "quantile map factors the lift", passed, worst, 1e-12,
                  f"{cases} cases, {mismatches} atom mismatches, worst continuous error {worst:.2e}")


def check_uniform_marginals(config: RunConfig, quick: bool) -> dict:
    """KS distance of lifted stationary samples from the uniform law"""
    rng = task_rng(config.seed, "uniform_marginals")
    N = _size("uniform_samples", quick)
    proc = _process("default")
    marginals = observed_marginals(proc)
    _, x = sample_paths(proc, rng, N, 1)
    u = lift_paths(marginals, x, rng)[:, 0, :]
    distance = max(stats.kstest(u[:, k], "uniform").statistic for k in range(u.shape[1]))
    tolerance = 1.63 / np.sqrt(N)
    return _entry("uniform_marginals", "lifted coordinates are uniform", distance < tolerance, distance, tolerance,
                  f"KS distance {distance:.5f} over {N} samples")


def check_order_preservation(config: RunConfig, quick: bool) -> dict:
    """u <= u' coordinatewise implies project(u) <= project(u')"""
    rng = task_rng(config.seed, "order_preservation")
    N = _size("order_pairs", quick)
    marginals = [random_marginal(rng, MarginalProfile(kind=kind)) for kind in ("discrete", "continuous", "mixed")]
    u = np.clip(rng.random((N, 3)), np.nextafter(0.0, 1.0), None)
    upper = np.minimum(u + (1.0 - u) * rng.random((N, 3)), np.nextafter(1.0, 0.0))
    violations = int(np.count_nonzero(np.any(project(marginals, u) > project(marginals, upper), axis=1)))
    return _entry("order_preservation", "quantile map preserves the coordinatewise order", violations == 0,
                  violations, 0, f"{violations} violations in {N} pairs")


def _symbol_preimage(marginals: list, proc: FiniteProcess, word) -> IntervalCylinder:
    steps = []
    for w in word:
        point = proc.symbols[w]
        step = []
        for k, m in enumerate(marginals):
            iv = m.atom_intervals()[m.atom_index(point[k])]
            step.append(((iv.lo, iv.hi),))
        steps.append(tuple(step))
    return IntervalCylinder(0, tuple(steps))


def check_restriction_identity(config: RunConfig, quick: bool) -> dict:
    """Lifted measure of every symbol-cylinder preimage (length <= 3) equals its X probability"""
    rng = task_rng(config.seed, "restriction_identity")
    random_chain = FiniteProcess.markov(
        rng.dirichlet(np.ones(4), size=4),
        rng.integers(0, 3, size=(4, 1)).astype(float)
    )
    processes = [_process("default"), _process("collapsing"), _process("iid"), random_chain]
    worst, count = 0.0, 0
    for proc in processes:
        marginals = observed_marginals(proc)
        states_of = [np.nonzero(proc.symbol_of_state == w)[0] for w in range(len(proc.symbols))]
        for length in (1, 2, 3):
            for word in itertools.product(range(len(proc.symbols)), repeat=length):
                lifted = cylinder_measure(marginals, proc, _symbol_preimage(marginals, proc, word))
                direct = fdd_probability(proc, StateCylinder(0, [states_of[w] for w in word]))
                worst = max(worst, abs(lifted - direct))
                count += 1
    return _entry("restriction_identity", "lifted measure restricts to the law of X", worst <= 1e-12, worst, 1e-12,
                  f"{count} cylinders on {len(processes)} chains")


# ----------------------------------------------------------------------
# coefficients
# ----------------------------------------------------------------------

def check_rate_preservation(config: RunConfig, quick: bool) -> dict:
    lags = _size("rate_lags", quick)
    refinements = _size("rate_refinements", quick)
    worst, rows = 0.0, 0
    for name in ("default", "collapsing"):
        proc = _process(name)
        marginals = observed_marginals(proc)
        for L in (1, 2):
            for n in lags:
                exact = block_coefficients(proc, n, L)
                for r in refinements:
                    lifted = lifted_coefficients(marginals, proc, n, L, r)
                    worst = max(worst, max(abs(lifted[c] - exact[c]) for c in COEFFICIENTS))
                    rows += 1
    return _entry("rate_preservation", "lift keeps the mixing rates of X", worst <= RATE_TOLERANCE, worst,
                  RATE_TOLERANCE, f"{rows} (chain, n, L, r) combinations")


def check_independence_baseline(config: RunConfig, quick: bool) -> dict:
    proc = _process("iid")
    marginals = observed_marginals(proc)
    worst = 0.0
    for L in (1, 2):
        for n in _size("rate_lags", quick):
            values = [block_coefficients(proc, n, L)]
            values += [lifted_coefficients(marginals, proc, n, L, r) for r in _size("rate_refinements", quick)]
            worst = max(worst, max(v[c] for v in values for c in COEFFICIENTS))
    return _entry("independence_baseline", "independent ground truth has zero coefficients", worst <= 1e-12,
                  worst, 1e-12, f"largest coefficient {worst:.2e}")


def check_partition_bound(config: RunConfig, quick: bool) -> dict:
    """Monte Carlo alpha over a non-aligned partition stays below 4 alpha(n)"""
    rng = task_rng(config.seed, "partition_bound")
    proc = _process("default")
    marginals = observed_marginals(proc)
    partition = config.build_mc_partition(proc.dimension)
    N = _size("partition_samples", quick)
    worst_margin, details = -np.inf, []
    for n in (1, 2, 3):
        u = sample_lifted_windows(marginals, proc, rng, N, window_length(n, 1))
        value, stderr = estimate_coefficients_mc(u, n, 1, partition, rng)["alpha"]
        bound = 4.0 * block_coefficients(proc, n, 1)["alpha"] + 3.0 * stderr
        worst_margin = max(worst_margin, value - bound)
        details.append(f"n={n}: {value:.4f} <= {bound:.4f}")
    return _entry("partition_bound", "coefficients over any partition stay below 4 alpha", worst_margin <= 0.0,
                  worst_margin, 0.0, "; ".join(details))


def check_mixing_decay(config: RunConfig, quick: bool) -> dict:
    """Cylinder correlations decay at the spectral rate and their Cesaro means vanish"""
    proc = _process("default")
    validate_mixing(proc)
    marginals = observed_marginals(proc)
    f = IntervalCylinder.single(1, 0, ((0.0, 0.1),))
    g = IntervalCylinder.single(1, 0, ((0.7, 0.8),))
    table = cesaro_correlation(marginals, proc, f, g, CESARO_HORIZON)
    c = table["c_k"].to_numpy()
    k = table["k"].to_numpy()

    rho = second_eigenvalue_modulus(proc.transition)
    C, fitted = fit_geometric_decay(c)
    bound_ok = bool(np.all(np.abs(c) <= C * rho**k * (1 + 1e-9) + 1e-15))
    cesaro = float(max(abs(table["cesaro_mean"].iloc[-1]), table["cesaro_abs_mean"].iloc[-1]))
    passed = bound_ok and cesaro < CESARO_LIMIT and abs(fitted - rho) <= 1e-6
    return _entry("mixing_decay", "correlations of cylinders decay geometrically", passed, cesaro, CESARO_LIMIT,
                  f"fitted rate {fitted:.6f} vs {rho:.6f}, C={C:.4g}, Cesaro mean at k={CESARO_HORIZON}: {cesaro:.2e}")


# ----------------------------------------------------------------------
# empirical process
# ----------------------------------------------------------------------

def check_gamma_properties(config: RunConfig, quick: bool) -> dict:
    rng = task_rng(config.seed, "gamma_grid")
    problems = []
    worst_tail, worst_sym, min_eig = 0.0, 0.0, np.inf

    grids = {
        "default": product_grid([rng.uniform(-0.5, 1.5, 20)]),
        "collapsing": product_grid([rng.uniform(-0.5, 1.5, 4), rng.uniform(-0.5, 1.5, 5)])
    }
    for name, grid in grids.items():
        cov = gamma_matrix(_process(name), grid)
        worst_tail = max(worst_tail, cov.tail_bound)
        worst_sym = max(worst_sym, float(np.abs(cov.matrix - cov.matrix.T).max()))
        min_eig = min(min_eig, cov.min_eigenvalue)

    proc = _process("iid")
    grid = product_grid([rng.uniform(-0.5, 2.5, 20)])
    cov = gamma_matrix(proc, grid)
    F = observed_cdf(proc, grid)
    closed = observed_cdf(proc, np.minimum(grid[:, None, :], grid[None, :, :]).reshape(-1, 1)).reshape(len(grid), -1)
    closed = closed - np.outer(F, F)
    iid_error = float(np.abs(cov.matrix - closed).max())

    if worst_sym > 1e-12:
        problems.append(f"asymmetry {worst_sym:.2e}")
    if min_eig < -PSD_JITTER:
        problems.append(f"eigenvalue {min_eig:.2e}")
    if worst_tail > GAMMA_TAIL_TOLERANCE:
        problems.append(f"tail bound {worst_tail:.2e}")
    if iid_error > 1e-12:
        problems.append(f"closed form error {iid_error:.2e}")
    message = "; ".join(problems) if problems else (
        f"min eigenvalue {min_eig:.2e}, tail bound {worst_tail:.2e}, closed form error {iid_error:.2e}"
    )
    return _entry("gamma_properties", "covariance series is symmetric and positive semidefinite", not problems,
                  worst_tail, GAMMA_TAIL_TOLERANCE, message)


def check_kiefer_covariance(config: RunConfig, quick: bool) -> dict:
    rng = task_rng(config.seed, "kiefer_covariance")
    M = _size("kiefer_replicates", quick)
    gamma = gamma_matrix(_process("planar"), np.array(KIEFER_POINTS))
    t_grid = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    samples = kiefer_replicates(gamma, t_grid, rng, M)
    empirical, theoretical, stderr = kiefer_covariance_estimate(samples, gamma, t_grid)
    excess = np.abs(empirical - theoretical) - KIEFER_SIGMAS * stderr
    worst = float(excess.max())
    return _entry("kiefer_covariance", "Kiefer covariance is min(t, t') Gamma(s, s')", worst <= 1e-12, worst, 1e-12,
                  f"{M} replicates on 5 planar points x 5 times, "
                  f"largest excess over {KIEFER_SIGMAS:g} standard errors {worst:.2e}")


def check_kolmogorov_law(config: RunConfig, quick: bool) -> dict:
    rng = task_rng(config.seed, "kolmogorov")
    n = _size("kolmogorov_n", quick)
    replicates = _size("kolmogorov_replicates", quick)
    distance, _ = kolmogorov_check(rng, n, replicates)
    tolerance = max(KOLMOGOROV_DISTANCE, stats.kstwo.ppf(1 - KOLMOGOROV_LEVEL, replicates))
    return _entry("kolmogorov_law", "sup statistic follows the Kolmogorov law", distance < tolerance, distance,
                  tolerance, f"n={n}, {replicates} replicates")


# ----------------------------------------------------------------------
# artifacts
# ----------------------------------------------------------------------

def _render_outputs(config: RunConfig, quick: bool) -> str:
    from utils.commands import simulate_path, lift_configured_path, build_mixing_report

    proc = config.build_process()
    marginals = config.build_marginals(proc)
    mc_samples = 0 if quick else min(config.mc_samples, MIN_MC_WINDOWS)
    small = config.with_overrides(length=min(config.length, 200), mc_samples=mc_samples,
                                  lags=[1, 2], block_lengths=[1], refinements=[1])
    pair = lift_configured_path(small, proc, marginals)
    return "".join([
        csv_text(path_frame(simulate_path(small, proc), "x", proc.dimension)),
        csv_text(path_frame(pair.u_path, "u", proc.dimension)),
        csv_text(pair.draw_log),
        csv_text(build_mixing_report(small, proc, marginals))
    ])


def check_determinism(config: RunConfig, quick: bool) -> dict:
    first, second = _render_outputs(config, quick), _render_outputs(config, quick)
    same = first == second
    return _entry("determinism", "seed determines every output", same, 0 if same else 1, 0,
                  "identical outputs" if same else "outputs differ between runs")


def check_reference_coefficients(config: RunConfig, quick: bool) -> dict:
    """Exact L = 1 coefficients of the configured process against the stored expectations"""
    proc = config.build_process()
    worst = 0.0
    for i, n in enumerate(REFERENCE_LAGS):
        values = block_coefficients(proc, n, 1)
        worst = max(worst, max(abs(values[c] - REFERENCE_COEFFICIENTS[c][i]) for c in COEFFICIENTS))
    return _entry("reference_coefficients", "stored coefficients of the configured process",
                  worst <= REFERENCE_TOLERANCE, worst, REFERENCE_TOLERANCE, f"largest deviation {worst:.2e}")


CRITERIA = [
    ("factor_identity", check_factor_identity),
    ("uniform_marginals", check_uniform_marginals),
    ("order_preservation", check_order_preservation),
    ("restriction_identity", check_restriction_identity),
    ("rate_preservation", check_rate_preservation),
    ("independence_baseline", check_independence_baseline),
    ("partition_bound", check_partition_bound),
    ("mixing_decay", check_mixing_decay),
    ("gamma_properties", check_gamma_properties),
    ("kiefer_covariance", check_kiefer_covariance),
    ("kolmogorov_law", check_kolmogorov_law),
    ("determinism", check_determinism),
    ("reference_coefficients", check_reference_coefficients)
]


def run_verification(config: RunConfig, quick: bool = False, only: list = None) -> dict:
    """Run the criteria in order; exceptions become failed entries"""
    entries = []
    for criterion, check in CRITERIA:
        if only is not None and criterion not in only:
            continue
        try:
            entry = check(config, quick)
        except Exception as e:
            logger.error(f"Criterion {criterion} raised: {e}")
            entry = _entry(criterion, "", False, None, None, f"Error: {str(e)}")
        logger.info(f"{criterion}: {'passed' if entry['passed'] else 'FAILED'} ({entry['message']})")
        entries.append(entry)
    return {
        "seed": config.seed,
        "quick": quick,
        "passed": all(e["passed"] for e in entries),
        "criteria": entries
    }
