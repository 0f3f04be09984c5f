"""Distributional identities of Y, V and Delta, checked by two-sample KS tests.

Every scheduled test compares a feature of batch A with a feature of an
independent batch B, so the two samples never share a replica.
"""

import logging
import math
from functools import partial

import numpy as np

from errors import ParameterError
from estimators.replicas import DEFAULT_SHARDS, replica_seeds, run_campaign
from estimators.stats import KS_LEVEL, ks_standard_normal, ks_two_sample
from local_time import compute_local_time, grid_for
from process_gen import reverse_path, sample_path, truncated_path
from scenery import conditional_traces, delta_on_grid, sample_scenery
from scenery_objects import Family, ProcessSpec

logger = logging.getLogger(__name__)

HORIZON = 16.0
DELTA_HORIZON = 4.0
Y_TIMES = (1.0, 2.0, 4.0, 16.0)
Y_SHIFTS = (0.5, 1.0, 2.0)
Y_REVERSAL_T = 4.0
V_TIMES = (1.0, 2.0, 4.0)
DELTA_TIMES = (0.5, 1.0, 1.5, 2.0, 3.0, 4.0)
MOMENT_PAIRS = ((0.5, 1.0), (1.0, 2.0), (1.0, 3.0))
MOMENT_ORDERS = (1, 2, 3)
MOMENT_Z = 4.0


def _feature_names():
    names = [f"Y{t:g}" for t in Y_TIMES]
    names += [f"dY{s:g}" for s in Y_SHIFTS]
    names += [f"revY{Y_REVERSAL_T * f:g}" for f in (0.25, 0.5, 1.0)]
    names += [f"V{t:g}" for t in V_TIMES]
    names += [f"D{t:g}" for t in DELTA_TIMES]
    return names


FEATURES = _feature_names()


def identity_worker(spec, dt, dx_policy, index, master_seed, batch=0):
    path_seed, scenery_seed = replica_seeds(master_seed, index, batch)
    path = sample_path(spec, int(round(HORIZON / dt)), dt, path_seed)
    y = path.values
    row = [y[path.step_of(t)] for t in Y_TIMES]
    row += [y[path.step_of(s + 1.0)] - y[path.step_of(s)] for s in Y_SHIFTS]
    rev = reverse_path(path, Y_REVERSAL_T)
    row += [rev.values[rev.step_of(Y_REVERSAL_T * f)] for f in (0.25, 0.5, 1.0)]
    row += list(compute_local_time(path, V_TIMES, dx_policy).V)

    head = truncated_path(path, DELTA_HORIZON)
    grid = grid_for(head, dx_policy)
    trace = delta_on_grid(head, grid, sample_scenery(grid, scenery_seed).dW)
    row += [trace[head.step_of(t)] for t in DELTA_TIMES]
    return np.asarray(row, dtype=float)


def identity_features(spec, n_replicas, seed, dt=2.0 ** -6, dx_policy=None, workers=1, shards=DEFAULT_SHARDS, batch=0):
    """Feature table {name: samples} for one batch of replicas."""
    if n_replicas < 2:
        raise ParameterError("identity checks need at least two replicas per batch")
    worker = partial(identity_worker, spec, dt, dx_policy, batch=batch)
    table = np.array(run_campaign(worker, n_replicas, seed, workers, shards))
    return {name: table[:, j] for j, name in enumerate(FEATURES)}


def y_identities(spec, a, b, level=KS_LEVEL):
    g = spec.gamma()
    tests = [
        ks_two_sample(f"Y self-similarity c={c:g}", a[f"Y{c:g}"] / c ** g, b["Y1"], level)
        for c in Y_TIMES[1:]
    ]
    tests += [
        ks_two_sample(f"Y stationary increments s={s:g}", a[f"dY{s:g}"], b["Y1"], level)
        for s in Y_SHIFTS
    ]
    for f in (0.25, 0.5, 1.0):
        t = Y_REVERSAL_T * f
        # either sign is allowed; record which ones hold
        plus = ks_two_sample("", a[f"revY{t:g}"], b[f"Y{t:g}"], level)
        minus = ks_two_sample("", a[f"revY{t:g}"], -b[f"Y{t:g}"], level)
        best = plus if plus["pvalue"] >= minus["pvalue"] else minus
        tests.append({
            **best,
            "name": f"Y time reversal t={t:g}",
            "signs_passed": [s for s, r in (("+", plus), ("-", minus)) if r["passed"]],
            "passed": plus["passed"] or minus["passed"],
        })
    return tests


def v_identities(spec, a, b, level=KS_LEVEL):
    index = 2.0 - spec.gamma()
    return [
        ks_two_sample(f"V self-similarity c={c:g}", a[f"V{c:g}"] / c ** index, b["V1"], level)
        for c in V_TIMES[1:]
    ]


def delta_reversal(a, b, T=2.0, level=KS_LEVEL):
    """Delta_{T-t} - Delta_T against Delta_t at t in {T/4, T/2, T}."""
    tests = []
    for t in (T / 4.0, T / 2.0, T):
        earlier = a[f"D{T - t:g}"] if T - t > 0 else np.zeros_like(a[f"D{T:g}"])
        tests.append(ks_two_sample(f"Delta time reversal t={t:g}", earlier - a[f"D{T:g}"], b[f"D{t:g}"], level))
    return tests


def delta_stationarity(a, b, level=KS_LEVEL):
    return [
        ks_two_sample("Delta stationary increments s=0.5,t=0.5", a["D1"] - a["D0.5"], b["D0.5"], level),
        ks_two_sample("Delta stationary increments s=1,t=1", a["D2"] - a["D1"], b["D1"], level),
    ]


def delta_symmetry(a, b, level=KS_LEVEL):
    return ks_two_sample("Delta_1 symmetry", a["D1"], -b["D1"], level)


def delta_self_similarity(spec, a, b, scales=(2.0, 4.0), level=KS_LEVEL):
    h = spec.h()
    return [
        ks_two_sample(f"Delta self-similarity c={c:g}", a[f"D{c:g}"] / c ** h, b["D1"], level)
        for c in scales
    ]


def moment_scaling_check(spec, a, b, orders=MOMENT_ORDERS, pairs=MOMENT_PAIRS):
    """(E|Delta_t - Delta_s|^p)^(1/p) = C(p) |t - s|^h; the second moment is tested against E[Delta_1^2]."""
    h = spec.h()
    ref = b["D1"] ** 2
    ref_mean = ref.mean()
    ref_se = ref.std(ddof=1) / math.sqrt(ref.size)
    rows = []
    for s, t in pairs:
        lag = t - s
        inc = np.abs(a[f"D{t:g}"] - a[f"D{s:g}"])
        row = {"s": s, "t": t}
        for p in orders:
            row[f"C{p}"] = float(np.mean(inc ** p) ** (1.0 / p) / lag ** h)
        scaled = inc ** 2 / lag ** (2.0 * h)
        se = math.sqrt(scaled.var(ddof=1) / scaled.size + ref_se ** 2)
        row["second_moment"] = float(scaled.mean())
        row["z"] = float((scaled.mean() - ref_mean) / se) if se > 0 else 0.0
        row["passed"] = abs(row["z"]) <= MOMENT_Z
        rows.append(row)
    return {
        "name": "moment_scaling",
        "E_delta1_sq": float(ref_mean),
        "rows": rows,
        "passed": all(r["passed"] for r in rows),
    }


def conditional_gaussianity_check(spec, n_scenery, seed, dt=2.0 ** -8, dx_policy=None, level=KS_LEVEL):
    """For one fixed path, Delta_1 / sqrt(V_1) over fresh sceneries is standard normal."""
    path_seed, scenery_seed = replica_seeds(seed, 0)
    path = sample_path(spec, int(round(1.0 / dt)), dt, path_seed)
    v1 = compute_local_time(path, [1.0], dx_policy).V[0]
    delta1 = conditional_traces(path, n_scenery, scenery_seed, dx_policy)[:, -1]
    return ks_standard_normal("Delta_1 conditional gaussianity", delta1 / math.sqrt(v1), level)


def stable_reduction_check(n_replicas, seed, level=KS_LEVEL):
    """Stable index 2 against sqrt(2) times Brownian motion, at time 1."""
    stable = ProcessSpec.stable(2.0)
    a = [sample_path(stable, 4, 0.25, replica_seeds(seed, r)[0]).values[-1] for r in range(n_replicas)]
    b = [math.sqrt(2.0) * sample_path(ProcessSpec.brownian(), 4, 0.25, replica_seeds(seed, r, 1)[0]).values[-1]
         for r in range(n_replicas)]
    return ks_two_sample("stable index 2 vs sqrt(2) BM", a, b, level)


def ks_budget(n_ks):
    return max(1, n_ks // 20)


def identity_suite(spec, n_replicas, seed, dt=2.0 ** -6, dx_policy=None, workers=1, shards=DEFAULT_SHARDS, level=KS_LEVEL):
    """All scheduled KS tests plus the moment identity, on two independent batches."""
    a = identity_features(spec, n_replicas, seed, dt, dx_policy, workers, shards, batch=0)
    b = identity_features(spec, n_replicas, seed, dt, dx_policy, workers, shards, batch=1)
    tests = y_identities(spec, a, b, level) + v_identities(spec, a, b, level)
    tests += delta_reversal(a, b, level=level) + delta_stationarity(a, b, level)
    tests.append(delta_symmetry(a, b, level))
    tests += delta_self_similarity(spec, a, b, level=level)
    tests.append(conditional_gaussianity_check(spec, n_replicas, seed, dx_policy=dx_policy, level=level))
    if spec.family == Family.STABLE_LEVY:
        tests.append(stable_reduction_check(n_replicas, seed, level))
    failed = [t["name"] for t in tests if not t["passed"]]
    if failed:
        logger.info("identity KS failures: %s", ", ".join(failed))
    moments = moment_scaling_check(spec, a, b)
    return {
        "ks": tests,
        "n_ks": len(tests),
        "ks_failures": len(failed),
        "ks_budget": ks_budget(len(tests)),
        "moment_scaling": moments,
        "passed": len(failed) <= ks_budget(len(tests)) and moments["passed"],
    }
