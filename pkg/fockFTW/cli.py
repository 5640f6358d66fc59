"""
Command-line front end: ``fockftw <command> [options]``.

Commands: simulate, pipeline, tomo, report, bootstrap, selftest.
Exit codes: 0 success, 1 selftest failure, 2 domain error, 3 input or file error.
Every JSON file written embeds the resolved run config and the seed.
"""

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import (
    DEFAULT_REPLICATES,
    bootstrap_many,
    parse_statistic,
    photon_number_table,
    quadrature_histogram,
    refine_radial_minimum,
    wigner_grid,
    wigner_point,
)
from .errors import FockDomainError, InputFormatError
from .fock_core import DensityMatrix
from .formatting import format_number
from .herald_model import HeraldScenario, conditional_signal_state
from .homodyne_sim import PhasePolicy, read_quadrature_csv, sample_quadratures, write_quadrature_csv
from .tomography import MleConfig, mle_reconstruct
from .trace_pipeline import (
    DEFAULT_VETO_WINDOW,
    ShotNoiseCalibration,
    ThresholdConfig,
    calibrate_shot_noise,
    extract_quadratures,
    read_events_jsonl,
    slot_variance_profile,
    veto_with_report,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_DOMAIN_ERROR = 2
EXIT_INPUT_ERROR = 3
DEFAULT_CUTOFF = 10
LOG_FORMAT = "%(asctime)s [%(levelname)s] [%(name)s] %(message)s"


@dataclass
class RunConfig:
    """Resolved settings of one CLI run; embedded in every JSON artifact."""

    command: str
    seed: int = 0
    output_dir: Path = Path(".")
    cutoff: int = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise FockDomainError(f"seed must be a non-negative integer, got {self.seed}")
        self.output_dir = Path(self.output_dir)

    def prepare_output(self):
        """Create the output directory; OSError propagates as an input/file error."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir

    def to_dict(self):
        return {
            "command": self.command,
            "seed": self.seed,
            "output_dir": str(self.output_dir),
            "cutoff": self.cutoff,
            "options": self.options,
        }

    def write_json(self, name, payload):
        """Write ``payload`` plus this config and seed to output_dir/name."""
        path = self.output_dir / name
        body = dict(payload)
        body["config"] = self.to_dict()
        body["seed"] = self.seed
        with open(path, "w", encoding="utf-8") as f:
            json.dump(body, f, indent=2)
            f.write("\n")
        logger.info("wrote %s", path)
        return path


def _load_mle_config(args, default_cutoff=DEFAULT_CUTOFF):
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise InputFormatError(f"invalid JSON: {e.msg}", path=args.config, line_number=e.lineno)
        return MleConfig.from_dict(data, n_max=args.cutoff, path=args.config)
    return MleConfig(cutoff=args.cutoff if args.cutoff is not None else default_cutoff)


def _read_records(path, herald=None):
    records = read_quadrature_csv(path)
    if herald is not None:
        records = [r for r in records if r.herald_n == herald]
    return records


def cmd_simulate(args):
    """Scenario JSON -> heralded state -> seeded homodyne dataset plus ground truth."""
    scenario = HeraldScenario.load(args.scenario, n_max=args.cutoff)
    policy = PhasePolicy.uniform() if args.phase == "uniform" else PhasePolicy.fixed(args.theta)
    run = RunConfig("simulate", args.seed, args.out, scenario.cutoff.n_max, {
        "scenario": scenario.to_dict(),
        "count": args.count,
        "phase": policy.mode,
        "theta": policy.theta,
    })
    rho, probability = conditional_signal_state(scenario)
    records = sample_quadratures(rho, args.count, policy, seed=args.seed, herald_n=scenario.herald_n)
    out = run.prepare_output()
    write_quadrature_csv(out / "quadratures.csv", records)
    truth = rho.to_dict()
    truth["herald_probability"] = probability
    run.write_json("truth_state.json", truth)
    print(f"herald probability: {probability:.6e}")
    return EXIT_OK


def cmd_pipeline(args):
    """Raw trigger records -> calibrated, vetoed quadrature datasets per herald class."""
    thresholds = ThresholdConfig.load(args.thresholds)
    events = read_events_jsonl(args.events)
    if args.calibration:
        calibration = ShotNoiseCalibration.load(args.calibration)
    else:
        vacuum = read_events_jsonl(args.vacuum)
        calibration = calibrate_shot_noise([s.hd_value for e in vacuum for s in e.slots])
    heralds = args.herald or [1, 2]
    run = RunConfig("pipeline", args.seed, args.out, None, {
        "events": str(args.events),
        "thresholds": thresholds.to_dict(),
        "calibration": calibration.to_dict(),
        "heralds": heralds,
        "window": args.window,
    })
    out = run.prepare_output()
    veto = veto_with_report(events, thresholds, args.window)
    counts = {}
    for n in heralds:
        records = extract_quadratures(events, calibration, n, thresholds, args.window)
        write_quadrature_csv(out / f"quadratures_n{n}.csv", records)
        counts[str(n)] = len(records)
    with open(out / "slot_variance.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["slot", "variance"])
        for slot, variance in slot_variance_profile(events, calibration):
            writer.writerow([slot, f"{variance:.17g}"])
    if not args.calibration:
        run.write_json("calibration.json", calibration.to_dict())
    run.write_json("veto_report.json", {
        "events_in": len(events),
        "kept": len(veto.kept),
        "vetoed": veto.removed,
        "truncated_history": veto.truncated,
        "records_per_herald": counts,
    })
    print(f"events: {len(events)}  kept two-photon heralds: {len(veto.kept)}  vetoed: {veto.removed}")
    return EXIT_OK


def cmd_tomo(args):
    """Quadrature CSV -> maximum-likelihood density matrix and run report."""
    cfg = _load_mle_config(args)
    records = _read_records(args.dataset, args.herald)
    run = RunConfig("tomo", args.seed, args.out, cfg.cutoff.n_max, {
        "dataset": str(args.dataset),
        "herald": args.herald,
        "mle": cfg.to_dict(),
    })
    result = mle_reconstruct(records, cfg)
    run.prepare_output()
    run.write_json("rho.json", result.rho.to_dict())
    run.write_json("tomo_report.json", result.report(cfg, seed=args.seed))
    print(photon_number_table(result.rho))
    print(f"iterations: {result.iterations_used}  converged: {result.converged}")
    return EXIT_OK


def cmd_report(args):
    """Density matrix JSON -> photon-number table, Wigner grid, optional bootstrap errors."""
    rho = DensityMatrix.load(args.rho)
    half = float(args.grid_range)
    run = RunConfig("report", args.seed, args.out, rho.dim - 1, {
        "rho": str(args.rho),
        "dataset": str(args.dataset) if args.dataset else None,
        "replicates": args.replicates,
        "grid_range": half,
        "resolution": args.resolution,
        "refine": args.refine,
    })
    out = run.prepare_output()

    sds = None
    if args.dataset:
        records = _read_records(args.dataset, args.herald)
        cfg = _load_mle_config(args, default_cutoff=rho.dim - 1)
        statistics = [f"P({n})" for n in range(min(5, cfg.cutoff.dim))] + ["W(0,0)"]
        reports = bootstrap_many(records, statistics, cfg, args.replicates, args.seed, workers=args.workers)
        sds = [r.sd for r in reports[:-1]]
        run.options["mle"] = cfg.to_dict()
        run.write_json("bootstrap.json", {"reports": [r.to_dict() for r in reports]})
        quadrature_histogram(records, rho).write_csv(out / "quadrature_histogram.csv")

    table = photon_number_table(rho, sds)
    with open(out / "photon_table.txt", "w", encoding="utf-8") as f:
        f.write(table + "\n")

    grid = wigner_grid(rho, (-half, half), (-half, half), args.resolution)
    grid.write_csv(out / "wigner_grid.csv")
    summary = grid.min_summary()
    summary["W00"] = wigner_point(rho, 0.0, 0.0)
    if args.refine and rho.is_diagonal():
        radius, value = refine_radial_minimum(rho, grid)
        summary["refined_radius"] = radius
        summary["refined_min_value"] = value
    run.write_json("wigner_min.json", summary)

    print(table)
    print(f"W(0,0) = {format_number(summary['W00'], decimals=4)}")
    print(f"Wigner minimum {format_number(grid.min_value, decimals=4)} at "
          f"(x, p) = ({format_number(grid.min_location[0], decimals=3)}, "
          f"{format_number(grid.min_location[1], decimals=3)})")
    return EXIT_OK


def cmd_bootstrap(args):
    """Quadrature CSV -> bootstrap standard deviations and percentile intervals."""
    cfg = _load_mle_config(args)
    statistics = [parse_statistic(s) for s in (args.statistic or ["P(1)"])]
    records = _read_records(args.dataset, args.herald)
    run = RunConfig("bootstrap", args.seed, args.out, cfg.cutoff.n_max, {
        "dataset": str(args.dataset),
        "statistics": [s.name for s in statistics],
        "replicates": args.replicates,
        "mle": cfg.to_dict(),
    })
    reports = bootstrap_many(records, statistics, cfg, args.replicates, args.seed, workers=args.workers)
    run.prepare_output()
    run.write_json("bootstrap.json", {"reports": [r.to_dict() for r in reports]})
    for r in reports:
        print(f"{r.statistic}: {format_number(r.point_estimate)} ± {format_number(r.sd)} "
              f"[{format_number(r.interval[0])}, {format_number(r.interval[1])}] "
              f"({r.replicate_count} replicates, {r.excluded_count} excluded)")
    return EXIT_OK


def cmd_selftest(args):
    """Run the acceptance criteria and report PASS/FAIL per criterion."""
    from .acceptance import run_acceptance

    run = RunConfig("selftest", args.seed, args.out, DEFAULT_CUTOFF, {"replicates": args.replicates})
    results = run_acceptance(seed=args.seed, replicates=args.replicates, workers=args.workers)
    run.prepare_output()
    run.write_json("selftest.json", {"criteria": [r.to_dict() for r in results]})
    for r in results:
        print(f"[{'PASS' if r.passed else 'FAIL'}] {r.number}. {r.title}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_SELFTEST_FAILED


def create_cli_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="Master seed for every random stream.")
    common.add_argument("--cutoff", type=int, default=None, help="Fock cutoff n_max (overrides config files).")
    common.add_argument("--out", type=Path, default=Path("."), help="Output directory.")
    common.add_argument("--config", type=Path, default=None, help="MLE config JSON.")
    common.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES, help="Bootstrap replicates.")
    common.add_argument("--workers", type=int, default=1, help="Threads for bootstrap replicates.")
    common.add_argument("--herald", type=int, action="append", default=None,
                        help="Herald class to select (repeatable for pipeline).")
    common.add_argument("--verbosity", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default="WARNING",
                        help="Logging verbosity.")

    parser = argparse.ArgumentParser(prog="fockftw", description="Heralded Fock-state simulation and homodyne tomography.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="Simulate a heralded homodyne dataset.")
    p.add_argument("scenario", type=Path, help="Scenario JSON {r, eta_i, eta_s, herald_n, n_max}.")
    p.add_argument("--count", type=int, default=10000, help="Number of quadrature samples.")
    p.add_argument("--phase", choices=["fixed", "uniform"], default="fixed", help="LO phase policy.")
    p.add_argument("--theta", type=float, default=0.0, help="LO phase for --phase fixed.")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("pipeline", parents=[common], help="Process raw trigger records into quadratures.")
    p.add_argument("events", type=Path, help="Events JSON-lines file.")
    p.add_argument("--thresholds", type=Path, required=True, help="Threshold JSON {v1, v2}.")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--calibration", type=Path, help="Shot-noise calibration JSON {mean_v, sigma_v}.")
    source.add_argument("--vacuum", type=Path, help="Events JSON-lines recorded with the signal blocked.")
    p.add_argument("--window", type=int, default=DEFAULT_VETO_WINDOW, help="Afterpulse veto window in slots.")
    p.set_defaults(handler=cmd_pipeline)

    p = sub.add_parser("tomo", parents=[common], help="Maximum-likelihood state reconstruction.")
    p.add_argument("dataset", type=Path, help="Quadrature CSV.")
    p.set_defaults(handler=cmd_tomo)

    p = sub.add_parser("report", parents=[common], help="Photon-number table and Wigner function of a state.")
    p.add_argument("rho", type=Path, help="Density matrix JSON.")
    p.add_argument("--dataset", type=Path, default=None, help="Quadrature CSV for bootstrap error bars.")
    p.add_argument("--grid-range", type=float, default=5.0, help="Wigner grid half width.")
    p.add_argument("--resolution", type=int, default=201, help="Wigner grid points per axis.")
    p.add_argument("--refine", action="store_true", help="Refine the negativity radius (diagonal states).")
    p.set_defaults(handler=cmd_report)

    p = sub.add_parser("bootstrap", parents=[common], help="Bootstrap error bars for derived statistics.")
    p.add_argument("dataset", type=Path, help="Quadrature CSV.")
    p.add_argument("--statistic", action="append", default=None, help="'P(n)' or 'W(x,p)' (repeatable).")
    p.set_defaults(handler=cmd_bootstrap)

    p = sub.add_parser("selftest", parents=[common], help="Run the acceptance suite.")
    p.set_defaults(handler=cmd_selftest)
    return parser


def _single_herald(args):
    # tomo/report/bootstrap select one herald class
    if args.command != "pipeline" and args.herald is not None:
        if len(args.herald) > 1:
            raise InputFormatError("--herald may be given once for this command")
        args.herald = args.herald[0]


def main(argv=None):
    parser = create_cli_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.verbosity), format=LOG_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    try:
        _single_herald(args)
        return args.handler(args)
    except InputFormatError as e:
        logger.error("input error: %s", e)
        return EXIT_INPUT_ERROR
    except FockDomainError as e:
        logger.error("domain error: %s", e)
        return EXIT_DOMAIN_ERROR
    except OSError as e:
        logger.error("file error: %s", e)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
