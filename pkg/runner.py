import argparse
import logging
import sys
import time
from pathlib import Path

from artifacts import ArtifactWriter
from errors import ConfigError, ParameterError
from estimators.molchan import molchan_consistency, molchan_functional
from estimators.persistence import SLOPE_BAND, estimate_persistence, slope_verdict
from estimators.replicas import replica_seeds
from estimators.tails import tail_campaign
from estimators.validation import ValidationRunner
from load_config import parse_config_json
from scenery import simulate_replica

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_IO = 3


def load_config_from_args(args):
    path = Path(args.config)
    if not path.exists():
        raise FileNotFoundError(f"File not found: {args.config}")
    config = parse_config_json(path)
    return config.with_overrides(seed=args.seed, workers=args.workers, out=args.out)


def cmd_simulate(config, writer):
    spec, policy = config.spec(), config.dx_policy()
    n = config.steps()
    for r in range(config.n_sim_replicas):
        path_seed, scenery_seed = replica_seeds(config.master_seed, r)
        path, field, _, delta = simulate_replica(spec, n, config.dt, path_seed, scenery_seed, dx_policy=policy)
        writer.write_path(r, path)
        writer.write_local_time(r, field)
        writer.write_delta(r, delta)
        print(f"Replica {r+1}/{config.n_sim_replicas}: n={path.n} bins={field.grid.bins} "
              f"V_T={delta.cond_var[-1]:.4f} sup={delta.running_sup[-1]:.4f}")
    return {"replicas": config.n_sim_replicas, "files": len(writer.written), "passed": True}


def cmd_persistence(config, writer):
    spec = config.spec()
    estimate = estimate_persistence(
        spec, config.barrier, config.T_grid, config.n_replicas, config.master_seed,
        config.dt, config.dx_policy(), config.workers, config.shards,
    )
    in_band = slope_verdict(estimate)
    summary = {
        "family": spec.label(),
        "gamma": spec.gamma(),
        "barrier": estimate.barrier,
        "expected_exponent": estimate.expected_exponent,
        "fitted_slope": estimate.fitted_slope,
        "slope_se": estimate.slope_se,
        "band": SLOPE_BAND,
        "within_band": in_band,
        "flags": estimate.flags,
        "passed": in_band,
    }
    writer.write_persistence(estimate)
    writer.write_json("persistence_summary.json", summary, config, estimate.shards)
    for T, F, lo, hi in zip(estimate.T_grid, estimate.F_hat, estimate.ci_lo, estimate.ci_hi):
        print(f"T={T:g}: F={F:.4f} [{lo:.4f}, {hi:.4f}]")
    return summary


def cmd_molchan(config, writer):
    spec = config.spec()
    estimate = molchan_functional(
        spec, config.molchan_T_grid, config.n_molchan_replicas, config.master_seed, config.molchan_dt,
        dx_policy=config.dx_policy(), workers=config.workers, shards=config.shards,
    )
    summary = {"family": spec.label(), "gamma": spec.gamma(), "h": spec.h()}
    if estimate.T_grid.size >= 2:
        summary["consistency"] = molchan_consistency(estimate)
        summary["passed"] = summary["consistency"]["passed"]
    else:
        summary["passed"] = True
    summary["max_delta_01"] = estimate.max_delta_01
    summary["max_delta_01_se"] = estimate.max_delta_01_se
    summary["excluded"] = estimate.excluded
    writer.write_molchan(estimate)
    writer.write_json("molchan_summary.json", summary, config, estimate.shards)
    for T, I, norm in zip(estimate.T_grid, estimate.I_hat, estimate.normalized):
        print(f"T={T:g}: I={I:.5g} normalized={norm:.4f}")
    print(f"E[max Delta on [0,1]] = {estimate.max_delta_01:.4f} +- {estimate.max_delta_01_se:.4f}")
    return summary


def cmd_tails(config, writer):
    report = tail_campaign(
        config.spec(), config.n_tail_replicas, config.master_seed,
        dx_policy=config.dx_policy(), workers=config.workers, shards=config.shards,
    )
    writer.write_json("tails_summary.json", report, config, config.shards)
    for check in report["checks"]:
        status = "low power" if check.get("low_power") else ("ok" if check["passed"] else "FAILED")
        print(f"{check['name']}: {status}")
    return report


def cmd_validate(config, writer):
    runner = ValidationRunner(config)
    runner.run()
    report = runner.report()
    report["flags"] = [f"{c['name']}: {flag}" for c in report["checks"] for flag in c.get("flags", [])]
    writer.write_json("validation_report.json", report, config, config.shards)
    for check in report["checks"]:
        reason = f" ({check['error']})" if "error" in check else ""
        print(f"{check['name']}: {'ok' if check['passed'] else 'FAILED'}{reason} {check['time']:.1f}s")
    return report


COMMANDS = {
    "simulate": cmd_simulate,
    "persistence": cmd_persistence,
    "molchan": cmd_molchan,
    "tails": cmd_tails,
    "validate": cmd_validate,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Path to a JSON experiment file")
    common.add_argument("--seed", type=int, default=None, help="Override master_seed")
    common.add_argument("--workers", type=int, default=None, help="Override the worker count")
    common.add_argument("--out", default=None, help="Override the output directory")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default="WARNING")

    p = argparse.ArgumentParser(description="Simulate and check processes in Brownian scenery")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="Write path, local time and Delta CSVs per replica")
    sub.add_parser("persistence", parents=[common], help="Estimate F(T) and its exponent")
    sub.add_parser("molchan", parents=[common], help="Estimate the Molchan functional and E[max Delta]")
    sub.add_parser("tails", parents=[common], help="Tail envelopes of V_1, Delta_1 and max|Y|")
    sub.add_parser("validate", parents=[common], help="Run the full validation suite")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")

    try:
        config = load_config_from_args(args)
        writer = ArtifactWriter(config.out_dir)
    except (ConfigError, ParameterError) as e:
        print(f"Invalid config: {e}")
        return EXIT_BAD_CONFIG
    except OSError as e:
        print(f"I/O error: {e}")
        return EXIT_IO

    start = time.perf_counter()
    print(f"Running {args.command} for {config.spec().label()} (seed={config.master_seed}, workers={config.workers})")
    try:
        result = COMMANDS[args.command](config, writer)
    except ParameterError as e:
        print(f"Invalid parameters: {e}")
        return EXIT_BAD_CONFIG
    except OSError as e:
        print(f"I/O error: {e}")
        return EXIT_IO
    elapsed = time.perf_counter() - start

    print("\n=== Summary ===")
    print(f"Command: {args.command}")
    print(f"  output: {writer.out_dir}")
    print(f"  files written: {len(writer.written)}")
    print(f"  time: {elapsed:.2f}s")
    if result.get("flags"):
        print("  flags:")
        for flag in result["flags"]:
            print(f"    {flag}")
    if result.get("failures"):
        print(f"  failed checks: {', '.join(result['failures'])}")
    print(f"  passed: {result['passed']}")
    return EXIT_OK if result["passed"] else EXIT_CHECK_FAILED


if __name__ == '__main__':
    sys.exit(main())
