"""
Command Bodies
One function per subcommand; each returns {"success": bool, "message": str, "files": [...]}
"""

import logging
import os

import numpy as np
import pandas as pd

from config.run_config import RunConfig, task_rng
from config.defaults import SUPPORT_TOLERANCE
from models.chain import FiniteProcess, sample_paths
from models.empirical import (
    product_grid, gamma_matrix, kiefer_replicates, kiefer_covariance_estimate,
    empirical_process_grid, sup_distance, observed_cdf_function
)
from models.errors import UniformLiftError, SupportError
from models.lift import lift_path, project, PathPair
from models.mixing import mixing_report, check_report
from utils.data_export import (
    ensure_dir, write_csv, write_json, path_frame, read_path_csv, gamma_frame, covariance_frame
)

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# builders shared with the verification suite
# ----------------------------------------------------------------------

def simulate_path(config: RunConfig, proc: FiniteProcess) -> np.ndarray:
    """X-path (length, d) from the simulate stream"""
    _, x = sample_paths(proc, task_rng(config.seed, "simulate"), 1, config.length)
    return x[0]


def load_or_simulate_path(config: RunConfig, proc: FiniteProcess) -> np.ndarray:
    if config.x_path is not None:
        return read_path_csv(config.x_path, "x")
    return simulate_path(config, proc)


def lift_configured_path(config: RunConfig, proc: FiniteProcess, marginals: list) -> PathPair:
    x = load_or_simulate_path(config, proc)
    if x.shape[1] != len(marginals):
        raise SupportError(f"Path has {x.shape[1]} columns but {len(marginals)} marginals are configured")
    return lift_path(marginals, x.reshape(-1, len(marginals)), task_rng(config.seed, "lift"))


def roundtrip_error(marginals: list, pair: PathPair) -> tuple:
    """(atom mismatches, largest relative error on continuity coordinates)"""
    back = project(marginals, pair.u_path) if len(pair.u_path) else pair.x_path.copy()
    atom_mask = np.stack([m.atom_lookup(pair.x_path[:, k]) >= 0 for k, m in enumerate(marginals)], axis=1)
    mismatches = int(np.count_nonzero((back != pair.x_path) & atom_mask))
    relative = np.abs(back - pair.x_path) / np.maximum(1.0, np.abs(pair.x_path))
    worst = float(relative[~atom_mask].max(initial=0.0))
    return mismatches, worst


def build_mixing_report(config: RunConfig, proc: FiniteProcess, marginals: list) -> pd.DataFrame:
    return mixing_report(
        marginals, proc, config.lags, config.block_lengths, config.refinements,
        mc_partition=config.build_mc_partition(proc.dimension),
        mc_windows=config.mc_samples,
        rng=task_rng(config.seed, "mixing")
    )


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

def cmd_simulate(config: RunConfig) -> dict:
    """Write x_path.csv"""
    try:
        proc = config.build_process()
        x = simulate_path(config, proc)
        out = ensure_dir(config.out)
        path = write_csv(path_frame(x, "x", proc.dimension), os.path.join(out, "x_path.csv"))
        return {"success": True, "message": f"Simulated {len(x)} steps", "files": [path]}
    except UniformLiftError as e:
        return {"success": False, "message": f"Error simulating path: {str(e)}", "files": []}


def cmd_lift(config: RunConfig) -> dict:
    """Write u_path.csv and draw_log.csv and report the projection roundtrip"""
    try:
        proc = config.build_process()
        marginals = config.build_marginals(proc)
        pair = lift_configured_path(config, proc, marginals)
    except SupportError as e:
        return {
            "success": False,
            "message": f"Error lifting path: {str(e)} (row {e.index}, column {e.coordinate})",
            "files": [],
            "row": e.index,
            "column": e.coordinate
        }
    except UniformLiftError as e:
        return {"success": False, "message": f"Error lifting path: {str(e)}", "files": []}

    out = ensure_dir(config.out)
    files = [
        write_csv(path_frame(pair.u_path, "u", len(marginals)), os.path.join(out, "u_path.csv")),
        write_csv(pair.draw_log, os.path.join(out, "draw_log.csv"))
    ]
    mismatches, worst = roundtrip_error(marginals, pair)
    if mismatches == 0 and worst == 0.0:
        roundtrip = "exact"
    elif mismatches == 0 and worst <= SUPPORT_TOLERANCE:
        roundtrip = "within tolerance"
    else:
        roundtrip = "failed"
    return {
        "success": roundtrip != "failed",
        "message": f"Lifted {len(pair.u_path)} steps with {len(pair.draw_log)} atom draws, roundtrip {roundtrip}",
        "files": files,
        "roundtrip": roundtrip
    }


def cmd_mixing(config: RunConfig) -> dict:
    """Write mixing_report.csv"""
    try:
        proc = config.build_process()
        marginals = config.build_marginals(proc)
        report = build_mixing_report(config, proc, marginals)
    except UniformLiftError as e:
        return {"success": False, "message": f"Error computing coefficients: {str(e)}", "files": []}

    out = ensure_dir(config.out)
    path = write_csv(report, os.path.join(out, "mixing_report.csv"))
    problems = check_report(report, monotone_in_n=len(proc.symbols) == proc.n_states)
    if problems:
        return {"success": False, "message": "Report invariants violated: " + "; ".join(problems), "files": [path]}
    return {"success": True, "message": f"Mixing report with {len(report)} rows", "files": [path]}


def cmd_empirical(config: RunConfig) -> dict:
    """Write gamma.csv, gamma_summary.json, kiefer_replicates.csv and kiefer_covariance.csv"""
    try:
        proc = config.build_process()
        s_grid = product_grid(config.build_s_grid(proc))
        gamma = gamma_matrix(proc, s_grid, config.ntrunc)
        t_grid = np.asarray(config.t_grid, dtype=float)
        samples = kiefer_replicates(gamma, t_grid, task_rng(config.seed, "kiefer"), config.replicates)
        empirical, theoretical, stderr = kiefer_covariance_estimate(samples, gamma, t_grid)

        # R(s, t n) / sqrt(n) of a simulated path on the same grids, t in units of the path length
        x = simulate_path(config, proc)
        n = len(x)
        R = empirical_process_grid(x, s_grid, np.floor(t_grid * n), observed_cdf_function(proc)) if n else None
    except UniformLiftError as e:
        return {"success": False, "message": f"Error in empirical computations: {str(e)}", "files": []}

    out = ensure_dir(config.out)
    sup = np.abs(samples).reshape(len(samples), -1).max(axis=1)
    replicates = pd.DataFrame({"replicate": np.arange(len(samples)), "sup_statistic": sup})
    summary = {
        "grid_points": len(s_grid),
        "n_trunc": gamma.n_trunc,
        "tail_bound": gamma.tail_bound,
        "min_eigenvalue": gamma.min_eigenvalue,
        "symmetry_error": float(np.abs(gamma.matrix - gamma.matrix.T).max()),
        "t_grid": t_grid.tolist(),
        "replicates": config.replicates,
        "seed": config.seed,
        "path_length": n,
        "empirical_sup_statistic": sup_distance(R / np.sqrt(n), np.zeros_like(R)) if n else None
    }
    files = [
        write_csv(gamma_frame(gamma.s_grid, gamma.matrix), os.path.join(out, "gamma.csv")),
        write_json(summary, os.path.join(out, "gamma_summary.json")),
        write_csv(replicates, os.path.join(out, "kiefer_replicates.csv")),
        write_csv(covariance_frame(empirical, theoretical, stderr), os.path.join(out, "kiefer_covariance.csv"))
    ]
    return {
        "success": True,
        "message": f"Gamma on {len(s_grid)} points (N_trunc={gamma.n_trunc}, tail {gamma.tail_bound:.2e}), "
                   f"{config.replicates} Kiefer replicates",
        "files": files
    }


def cmd_verify(config: RunConfig, quick: bool = False) -> dict:
    """Run the acceptance suite and write verify_report.json; success iff every criterion passes"""
    from utils.verification import run_verification

    report = run_verification(config, quick=quick)
    out = ensure_dir(config.out)
    path = write_json(report, os.path.join(out, "verify_report.json"))
    failed = [c["id"] for c in report["criteria"] if not c["passed"]]
    message = "All criteria passed" if not failed else f"Failed criteria: {', '.join(failed)}"
    return {"success": not failed, "message": message, "files": [path], "report": report}
