"""Command-line entry point: ``fcfp-ris run`` and ``fcfp-ris validate-config``."""

import argparse
import json
import sys

from .experiments import EXPERIMENTS, WORKERS_ENV, ExperimentSpec, run_experiment, validate_experiment, worker_count
from .scenario import ConfigError, build_scenario

__all__ = ["main", "load_config"]


def load_config(path):
    """Read a JSON config and split it into ``(scenario, experiment_options)``."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    options = cfg.pop("experiment", {})
    cfg.pop("seed", None)
    return cfg, options


def _parser():
    p = argparse.ArgumentParser(prog="fcfp-ris", description="RIS sensing/communication beamforming experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a named experiment",
                         epilog=f"worker count for sweep points: ${WORKERS_ENV} (default 1)")
    run.add_argument("experiment", choices=EXPERIMENTS)
    run.add_argument("--config", required=True, help="scenario JSON (optional 'experiment' section)")
    run.add_argument("--seed", required=True, type=int)
    run.add_argument("--desk", action="store_true", help="small profile: N=36, M=4, K<=2, L=41")
    run.add_argument("--no-plots", action="store_true", help="write CSVs only")
    run.add_argument("--out", default=None, help="output directory (default: out/<experiment>)")
    val = sub.add_parser("validate-config", help="check a scenario config without running anything")
    val.add_argument("path")
    val.add_argument("--experiment", choices=EXPERIMENTS, default=None)
    val.add_argument("--desk", action="store_true")
    return p


def _validate(path, experiment, desk):
    scenario, options = load_config(path)
    scen = build_scenario(scenario, 0, desk=desk)
    if experiment is not None:
        validate_experiment(experiment, options, desk)
    return scen


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate-config":
            scen = _validate(args.path, args.experiment, args.desk)
            print(f"ok: M={scen.M} N={scen.N} K={scen.K}")
            return 0
        worker_count()
        scenario, options = load_config(args.config)
        build_scenario(scenario, args.seed, desk=args.desk)
        spec = ExperimentSpec(
            name=args.experiment, scenario=scenario, seed=args.seed, out_dir=args.out or f"out/{args.experiment}",
            desk=args.desk, plots=not args.no_plots, scenario_path=args.config, options=options)
        status, manifest = run_experiment(spec)
    except ConfigError as exc:
        print(f"fcfp-ris: error: {exc}", file=sys.stderr)
        return 2
    for f in manifest["files"]:
        print(f"{spec.out_dir}/{f['path']}")
    if manifest["infeasible"]:
        print(f"fcfp-ris: {len(manifest['infeasible'])} point(s) had no feasible start; see manifest.json",
              file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
