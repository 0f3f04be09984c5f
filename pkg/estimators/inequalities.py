"""Maximal inequality, Slepian product inequalities and the pathwise check campaigns."""

import logging
import math
from functools import partial

import numpy as np
from scipy import stats

from errors import ParameterError
from estimators.replicas import DEFAULT_SHARDS, replica_seeds, run_campaign
from estimators.stats import wilson_half_width
from local_time import (
    comparison_check,
    compute_local_time,
    constant,
    cosine,
    gaussian_bump,
    grid_for,
    indicator,
    occupation_residual,
    superadditivity_terms,
    DISCRETIZATION_TOL,
)
from process_gen import sample_path
from scenery import (
    conditional_sup_probabilities,
    conditional_traces,
    delta_increment_cov_check,
    simulate_delta_trace,
)
from scenery_objects import Family

logger = logging.getLogger(__name__)

EXACT_TOL = 1e-9
BUMP_TOL = 0.02
SLEPIAN_Z = 3.0
LEVY_FAMILIES = (Family.BROWNIAN, Family.STABLE_LEVY)


def _steps_for(T, dt):
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * T:
        raise ParameterError(f"horizon {T} is not a positive multiple of dt={dt}")
    return n


# maximal inequality

def maximal_worker(spec, n, dt, dx_policy, index, master_seed):
    path_seed, scenery_seed = replica_seeds(master_seed, index)
    _, trace = simulate_delta_trace(spec, n, dt, path_seed, scenery_seed, dx_policy)
    return float(trace.max()), float(trace[-1])


def maximal_inequality_check(spec, T, x_grid, n_replicas, seed, dt=2.0 ** -8, dx_policy=None, workers=1, shards=DEFAULT_SHARDS):
    """P[max_{[0,T]} Delta >= x] <= 2 P[Delta_T >= x], per x, with joint Wilson slack."""
    x_grid = np.asarray(x_grid, dtype=float)
    if np.any(x_grid < 0):
        raise ParameterError("x grid must be nonnegative")
    worker = partial(maximal_worker, spec, _steps_for(T, dt), dt, dx_policy)
    pairs = np.array(run_campaign(worker, n_replicas, seed, workers, shards))
    sup, end = pairs[:, 0], pairs[:, 1]
    rows = []
    for x in x_grid:
        left = float(np.mean(sup >= x))
        right = float(np.mean(end >= x))
        h_left = float(wilson_half_width(left, n_replicas))
        h_right = float(wilson_half_width(right, n_replicas))
        slack = 2.0 * math.sqrt(h_left ** 2 + (2.0 * h_right) ** 2)
        rows.append({
            "x": float(x),
            "p_max": left,
            "p_end": right,
            "slack": slack,
            "passed": left <= 2.0 * right + slack,
        })
    return {"name": "maximal_inequality", "T": T, "n_replicas": n_replicas, "rows": rows,
            "passed": all(r["passed"] for r in rows), "shards": shards}


def conditional_maximal_check(path, T, x_grid, n_scenery, seed, dx_policy=None):
    """Given the path, P[max Delta >= x | Y] <= 2 P[Delta_T >= x | Y] = 2 sf(x / sqrt(V_T))."""
    k = path.step_of(T)
    traces = conditional_traces(path, n_scenery, seed, dx_policy)[:, : k + 1]
    v_T = compute_local_time(path, [T], dx_policy).V[0]
    sup = traces.max(axis=1)
    rows = []
    for x in np.asarray(x_grid, dtype=float):
        left = float(np.mean(sup >= x))
        bound = float(2.0 * stats.norm.sf(x / math.sqrt(v_T)))
        slack = SLEPIAN_Z * math.sqrt(max(left * (1 - left), 1.0 / n_scenery) / n_scenery)
        rows.append({"x": float(x), "p_max": left, "bound": bound, "passed": left <= bound + slack})
    return {"name": "conditional_maximal_inequality", "V_T": float(v_T), "rows": rows,
            "passed": all(r["passed"] for r in rows)}


def conditional_maximal_campaign(spec, n_paths, T, x_grid, n_scenery, seed, dt=2.0 ** -8, dx_policy=None):
    """conditional_maximal_check on n_paths fixed paths, each with its own sceneries."""
    reports = []
    for index in range(n_paths):
        path_seed, scenery_seed = replica_seeds(seed, index)
        path = sample_path(spec, _steps_for(T, dt), dt, path_seed)
        report = conditional_maximal_check(path, T, x_grid, n_scenery, scenery_seed, dx_policy)
        reports.append({"path_seed": path_seed, **report})
    return {"paths": reports, "n_paths": n_paths, "passed": all(r["passed"] for r in reports)}


# Slepian product inequalities

def _product_gap(joint, first, second, n):
    """P(A and B) - P(A) P(B) and its standard error."""
    var = (joint * (1 - joint) + first * (1 - first) * second ** 2 + second * (1 - second) * first ** 2) / n
    return joint - first * second, math.sqrt(max(var, 1.0 / n ** 2))


def slepian_worker(spec, u, v, w, a, b, n_scenery, dt, dx_policy, index, master_seed):
    path_seed, scenery_seed = replica_seeds(master_seed, index)
    path = sample_path(spec, _steps_for(w, dt), dt, path_seed)
    traces = conditional_traces(path, n_scenery, scenery_seed, dx_policy)
    plain, _ = conditional_sup_probabilities(path, traces, [(u, v), (v, w)], [a, b])
    shifted, _ = conditional_sup_probabilities(path, traces, [(v, w)], [b], relative=True)
    first = plain[:, 0]
    out = []
    for other in (plain[:, 1], shifted[:, 0]):
        pa, pb, pab = first.mean(), other.mean(), (first & other).mean()
        gap, se = _product_gap(pab, pa, pb, n_scenery)
        out.append((float(gap), float(se)))
    return out


def slepian_check(spec, u, v, w, a, b, n_path, n_scenery, seed, dt=2.0 ** -8, dx_policy=None, workers=1, shards=DEFAULT_SHARDS):
    """Conditional product inequalities for sup windows [u,v], [v,w], per fixed path."""
    if not (0 <= u < v < w):
        raise ParameterError("need 0 <= u < v < w")
    worker = partial(slepian_worker, spec, u, v, w, a, b, n_scenery, dt, dx_policy)
    results = run_campaign(worker, n_path, seed, workers, shards)
    report = {"name": "slepian", "n_path": n_path, "n_scenery": n_scenery, "shards": shards}
    for i, label in enumerate(("sup_window", "increment_window")):
        gaps = np.array([r[i][0] for r in results])
        ses = np.array([r[i][1] for r in results])
        violations = int(np.sum(gaps < -SLEPIAN_Z * ses))
        report[label] = {"violations": violations, "min_gap": float(gaps.min()), "passed": violations == 0}
    report["passed"] = report["sup_window"]["passed"] and report["increment_window"]["passed"]
    return report


# pathwise checks over many independent paths

def pathwise_worker(spec, dt, dx_policy, index, master_seed):
    path_seed, _ = replica_seeds(master_seed, index)
    path = sample_path(spec, _steps_for(1.0, dt), dt, path_seed)
    field = compute_local_time(path, [0.5, 1.0], dx_policy)
    v_total, v_head, v_tail = superadditivity_terms(path, 0.5, 0.5, dx_policy)
    return (
        comparison_check(path, field, 1.0) and comparison_check(path, field, 0.5),
        v_total >= (v_head + v_tail) * (1.0 - DISCRETIZATION_TOL),
        delta_increment_cov_check(field, 1.0, 0.5),
        v_head,
        v_tail,
    )


def pathwise_campaign(spec, n_paths, seed, dt=2.0 ** -8, dx_policy=None, workers=1, shards=DEFAULT_SHARDS):
    """Comparison, superadditivity and covariance-positivity checks on n_paths paths."""
    worker = partial(pathwise_worker, spec, dt, dx_policy)
    rows = run_campaign(worker, n_paths, seed, workers, shards)
    cmp_ok = np.array([r[0] for r in rows])
    sup_ok = np.array([r[1] for r in rows])
    cov_ok = np.array([r[2] for r in rows])
    v_head = np.array([r[3] for r in rows])
    v_tail = np.array([r[4] for r in rows])
    corr = float(np.corrcoef(v_head, v_tail)[0, 1]) if n_paths > 2 else float("nan")
    corr_bound = 4.0 / math.sqrt(max(n_paths, 1))
    # independent increments make V_s and the restarted V_t independent
    corr_ok = spec.family not in LEVY_FAMILIES or not abs(corr) > corr_bound
    return {
        "comparison": {"violations": int(np.sum(~cmp_ok)), "passed": bool(cmp_ok.all())},
        "superadditivity": {
            "violations": int(np.sum(~sup_ok)),
            "correlation": corr,
            "corr_bound": corr_bound,
            "passed": bool(sup_ok.all()) and corr_ok,
        },
        "delta_increment_cov": {"violations": int(np.sum(~cov_ok)), "passed": bool(cov_ok.all())},
        "n_paths": n_paths,
    }


def occupation_worker(spec, n_steps, dx_policy, index, master_seed):
    path_seed, _ = replica_seeds(master_seed, index)
    path = sample_path(spec, n_steps, 1.0 / n_steps, path_seed)
    t = path.horizon
    edges = grid_for(path, dx_policy).edges()
    aligned = indicator(edges[edges.size // 4], edges[(3 * edges.size) // 4])
    return tuple(
        occupation_residual(path, f, t, dx_policy)
        for f in (gaussian_bump(), constant(), aligned, cosine())
    )


def occupation_campaign(spec, n_paths, n_steps, seed, dx_policy=None, workers=1, shards=DEFAULT_SHARDS):
    """Occupation density residuals on n_paths paths of n_steps steps over [0, 1]."""
    worker = partial(occupation_worker, spec, n_steps, dx_policy)
    res = np.array(run_campaign(worker, n_paths, seed, workers, shards))
    bump, const, ind, cos = res.T
    report = {
        "gaussian_bump_median": float(np.median(bump)),
        "constant_max": float(const.max()),
        "indicator_max": float(ind.max()),
        "cosine_median": float(np.median(cos)),
        "n_paths": n_paths,
        "n_steps": n_steps,
    }
    report["passed"] = (
        report["gaussian_bump_median"] < BUMP_TOL
        and report["constant_max"] <= EXACT_TOL
        and report["indicator_max"] <= EXACT_TOL
    )
    return report
