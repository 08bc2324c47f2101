"""
Command-line front end.

Exit codes: 0 success, 2 data/config/usage error, 3 degenerate statistic.
"""
import sys
import json
import logging
import argparse
from pathlib import Path
from typing import List, Optional

import numpy as np

from config import DEFAULT_REPLICATIONS, DEFAULT_SEED, RESULTS_DIR, APP_NAME, APP_VERSION
from core.data_manager import load_two_sample_csv
from core.errors import (
    SurvivalDataError, ConfigParseError, UnknownMethodError, UnknownScenarioError,
    InvalidParameterError, NoConvergenceError, DegenerateStatisticError,
)
from core.methods import list_methods, parse_method
from core.permutation import PermutationPlan, run_permutation_test
from core.scenario_io import load_scenario, save_scenario, scenario_to_dict
from core.simulator import (
    builtin_scenarios, generate_dataset, get_scenario, lifetime_curves, power_curve, scenario_group,
    derive_seed,
)
from services.workers import run_study
from ui import plots, reports

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DATA_ERROR = 2
EXIT_DEGENERATE = 3

DATA_ERRORS = (
    SurvivalDataError, ConfigParseError, UnknownMethodError, UnknownScenarioError,
    InvalidParameterError, NoConvergenceError, FileNotFoundError,
)

EPILOG = """exit codes:
  0  success
  2  data, config or usage error (bad CSV, unknown method or scenario, malformed config)
  3  degenerate statistic on the observed data (e.g. a group without events)
"""


def _add_permutation_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-R", "--replications", type=int, default=DEFAULT_REPLICATIONS,
                        help=f"number of random permutations (default {DEFAULT_REPLICATIONS})")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"master seed (default {DEFAULT_SEED})")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker threads (default: auto, capped by SURVDIFF_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description="Two-sample tests for right-censored survival data.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug detail to the console")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    # test
    p = sub.add_parser("test", help="run one permutation test on a time,event,group CSV",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("csv_path", type=Path)
    p.add_argument("-m", "--method", default="energy:alpha=1",
                   help="method descriptor, e.g. energy:alpha=1, gaussian:sigma=1, logrank (default energy:alpha=1)")
    _add_permutation_args(p)
    p.add_argument("--exhaustive", action="store_true",
                   help="enumerate all splits when C(n, n0) is small enough")
    p.add_argument("--json", dest="json_path", default=None,
                   help="write the result as JSON to this path ('-' for stdout)")
    p.add_argument("--csv", dest="csv_path_out", type=Path, default=None, help="write a one-row result CSV")
    p.set_defaults(handler=cmd_test)

    # simulate
    p = sub.add_parser("simulate", help="run a null or power study",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=Path, help="scenario JSON file")
    source.add_argument("--builtin", help="built-in scenario name (see `scenarios --list`)")
    source.add_argument("--group", help="run every built-in of a group, e.g. ph-grid or null")
    p.add_argument("--n", type=int, default=None, help="per-group sample size override")
    p.add_argument("--replications", type=int, default=None, help="number of simulated datasets")
    p.add_argument("--permutations", type=int, default=None, help="permutations per test")
    p.add_argument("--seed", type=int, default=None, help="master seed")
    p.add_argument("--method", action="append", dest="methods", default=None,
                   help="restrict the roster (repeatable)")
    p.add_argument("--out", type=Path, default=RESULTS_DIR, help=f"output directory (default {RESULTS_DIR.name}/)")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: auto, capped by SURVDIFF_THREADS)")
    p.add_argument("--dump-config", type=Path, default=None,
                   help="write the resolved scenario JSON and exit")
    p.set_defaults(handler=cmd_simulate)

    # curves
    p = sub.add_parser("curves", help="Kaplan-Meier curves per group as CSV and SVG",
                       epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("csv_path", nargs="?", type=Path, default=None)
    source.add_argument("--builtin", help="simulate a built-in scenario (the data is saved next to --out-csv)")
    p.add_argument("--n", type=int, default=5000, help="subjects per group for --builtin (default 5000)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--true-curves", action="store_true",
                   help="with --builtin, also emit the model survival functions")
    p.add_argument("--out-csv", type=Path, default=None)
    p.add_argument("--out-svg", type=Path, default=None)
    p.set_defaults(handler=cmd_curves)

    # scenarios
    p = sub.add_parser("scenarios", help="list built-in scenarios and methods")
    action = p.add_mutually_exclusive_group(required=True)
    action.add_argument("--list", action="store_true", help="built-in scenario names")
    action.add_argument("--list-methods", action="store_true", help="registered method descriptors")
    action.add_argument("--show", metavar="NAME", help="print a built-in scenario as JSON")
    p.set_defaults(handler=cmd_scenarios)

    return parser


# --- Commands ---

def cmd_test(args) -> int:
    data = load_two_sample_csv(args.csv_path)
    method = parse_method(args.method)
    plan = PermutationPlan(replications=args.replications, seed=args.seed,
                           exhaustive=args.exhaustive, max_workers=args.workers)

    logger.info(f"Testing {args.csv_path.name} with {method.descriptor}, R={plan.replications}, seed={plan.seed}")
    result = run_permutation_test(method, data, plan)

    if args.json_path == "-":
        print(json.dumps(result.to_dict(), indent=2))
    else:
        print(reports.format_result(result))
        if args.json_path:
            reports.write_result_json(result, args.json_path)
    if args.csv_path_out:
        reports.write_result_csv(result, args.csv_path_out)
    return EXIT_OK


def _resolve_simulation(args):
    overrides = dict(replications=args.replications, permutations=args.permutations, seed=args.seed)
    if args.methods:
        overrides["methods"] = tuple(parse_method(m).descriptor for m in args.methods)

    if args.group:
        configs = scenario_group(args.group)
        if not configs:
            raise UnknownScenarioError(f"no built-in scenarios in group '{args.group}'")
        if args.n is not None:
            configs = [c for c in configs if c.n0 == args.n]
    elif args.builtin:
        configs = [get_scenario(args.builtin, args.n)]
    else:
        config = load_scenario(args.config)
        if args.n is not None:
            overrides.update(n0=args.n, n1=args.n)
        configs = [config]
    return [c.with_overrides(**overrides) for c in configs]


def cmd_simulate(args) -> int:
    configs = _resolve_simulation(args)

    if args.dump_config:
        if len(configs) != 1:
            raise ConfigParseError("--dump-config needs a single scenario")
        save_scenario(configs[0], args.dump_config)
        print(f"Wrote {args.dump_config}")
        return EXIT_OK

    results = []
    for config in configs:
        result = run_study(config, max_workers=args.workers)
        paths = reports.write_study_outputs(result, args.out)
        print(reports.format_summary(result))
        print(f"families: {reports.format_family_power(result)}")
        print(f"wrote {paths['summary']} and {paths['pvalues']}\n")
        results.append((config, result))

    if args.group == "ph-grid":
        _write_power_curves(results, args.out)
    return EXIT_OK


def _write_power_curves(results, out_dir: Path) -> None:
    by_size = {}
    for config, result in results:
        theta = config.lifetime1.rate
        by_size.setdefault(config.n0, {})[theta] = result
    for n, by_theta in sorted(by_size.items()):
        if len(by_theta) < 2:
            continue
        frame = power_curve(by_theta)
        csv_path = Path(out_dir) / f"ph-grid-n{n}-power.csv"
        frame.to_csv(csv_path, **reports.CSV_OPTIONS)
        plots.plot_power_curves(frame, Path(out_dir) / f"ph-grid-n{n}-power.svg",
                                title=f"Proportional hazards, n={n} per group")
        print(f"wrote {csv_path}")


def cmd_curves(args) -> int:
    if args.builtin:
        config = get_scenario(args.builtin, args.n).with_overrides(n0=args.n, n1=args.n)
        data = generate_dataset(config, np.random.default_rng(derive_seed(args.seed, 0)))
        stem = config.name
    else:
        data = load_two_sample_csv(args.csv_path)
        stem = args.csv_path.stem

    curves = reports.survival_curve_frame(data)
    out_csv = args.out_csv or RESULTS_DIR / f"{stem}-curves.csv"
    out_svg = args.out_svg or RESULTS_DIR / f"{stem}-curves.svg"

    if args.builtin:
        data_csv = reports.write_dataset_csv(data, Path(out_csv).with_name(f"{stem}-data.csv"))
        print(f"wrote {data_csv}")

    truth = None
    if args.builtin and args.true_curves:
        horizon = float(max(data.group0.times.max(), data.group1.times.max()))
        truth = lifetime_curves(config, np.linspace(0.0, horizon, 201))
        truth_csv = Path(out_csv).with_name(f"{stem}-true-curves.csv")
        reports.write_curves_csv(truth, truth_csv)
        print(f"wrote {truth_csv}")

    reports.write_curves_csv(curves, out_csv)
    plots.plot_survival_curves(curves, out_svg, title=f"Kaplan-Meier estimate: {stem}", truth=truth)
    print(f"wrote {out_csv} and {out_svg}")
    return EXIT_OK


def cmd_scenarios(args) -> int:
    if args.list:
        for name, config in builtin_scenarios().items():
            print(f"{name}\t{config.description}")
    elif args.list_methods:
        for descriptor in list_methods():
            print(descriptor)
    else:
        print(json.dumps(scenario_to_dict(get_scenario(args.show)), indent=2))
    return EXIT_OK


def run(argv: Optional[List[str]] = None) -> int:
    """Parses argv, dispatches, and maps errors onto exit codes."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors and 0 on --help/--version
        return int(e.code or 0)

    try:
        return args.handler(args)
    except DegenerateStatisticError as e:
        logger.error(f"Degenerate statistic: {e}")
        print(f"error: degenerate statistic: {e}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DATA_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA_ERROR
