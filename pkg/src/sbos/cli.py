"""Command-line front end: ``sbos run | sweep | plot | diag | list-problems``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .config import ConfigError, load_config
from .harness import (FAMILIES, build_family, check_compatible, diagnostics,
                      pilot_reference_best, resolve_threads, run_experiment, instance_stream)
from .report import (SchemaError, atomic_write, format_csv, read_csv, render_svg, result_rows,
                     summary_table)
from .selection import POLICIES, POLICY_MODE, ConfigurationError

FAMILY_HELP = {
    "dosage": ("gradient", "perturbed quadratic dose-response curves, unit Gaussian noise, FD gradients"),
    "newsvendor": ("data", "Poisson-demand newsvendor products, closed-form SAA"),
    "queueing": ("gradient", "two-station staffing/pricing simulation, CRN finite differences"),
    "synthetic": ("gradient", "Gaussian quadratics with prescribed gaps (calibration)"),
    "offgrid": ("gradient", "two systems identical on the OCBA grid, separated between grid points"),
}


def _out_dir(args, config):
    return args.out or config.output_dir


def _execute(config, policies, args):
    threads = resolve_threads(args.threads)
    plans = [config.plan(p, args.seed, args.replications) for p in policies]
    # validate every pairing before spending any budget
    for plan in plans:
        check_compatible(plan.policy, build_family(plan.instance, instance_stream(plan)))
    rows = []
    for plan in plans:
        rows.extend(result_rows(config.experiment, plan, run_experiment(plan, threads)))
    return rows


def _emit(rows, config, args, stem):
    out = _out_dir(args, config)
    csv_path = os.path.join(out, f"{stem}.csv")
    atomic_write(csv_path, format_csv(rows))
    print(summary_table(rows))
    print(f"wrote {csv_path}")
    if config.chart:
        svg_path = os.path.join(out, f"{stem}.svg")
        atomic_write(svg_path, render_svg(rows, config.log_pfs, title=config.experiment))
        print(f"wrote {svg_path}")


def cmd_run(args) -> int:
    config = load_config(args.config)
    policy = args.policy or config.policy or (config.policies[0] if len(config.policies) == 1 else None)
    if policy is None:
        raise ConfigError("run needs a single 'policy' (use --policy, or sweep for several)", "policy",
                          source=args.config)
    if policy not in POLICIES:
        raise ConfigurationError(f"unknown policy {policy!r}; choose from {', '.join(POLICIES)}")
    _emit(_execute(config, [policy], args), config, args, config.experiment)
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    if args.policies is not None:
        policies = [p for p in args.policies.split(",") if p]
    else:
        policies = list(config.policies)
    if not policies:
        raise ConfigurationError("sweep needs a non-empty policy list (--policies or 'policies' in the config)")
    for p in policies:
        if p not in POLICIES:
            raise ConfigurationError(f"unknown policy {p!r}; choose from {', '.join(POLICIES)}")
    _emit(_execute(config, policies, args), config, args, f"{config.experiment}-sweep")
    return 0


def cmd_plot(args) -> int:
    rows = read_csv(args.csv)
    if not rows:
        raise SchemaError(f"{args.csv}: no result rows")
    out = args.out or os.path.splitext(args.csv)[0] + ".svg"
    atomic_write(out, render_svg(rows, args.log_pfs, title=args.title))
    print(f"wrote {out}")
    return 0


def cmd_diag(args) -> int:
    config = load_config(args.config)
    plan = config.plan(config.policy or (config.policies[0] if config.policies else "seo-sgd"), args.seed)
    family = build_family(plan.instance, instance_stream(plan))
    diag = diagnostics(family, plan.min_gap)
    if diag is None:
        budget = args.pilot_budget or plan.policy_config.get("pilot_budget")
        if budget is None:
            raise ConfigurationError(
                f"family {family.name!r} has no true-value oracle; pass --pilot-budget or set "
                "policy_config.pilot_budget to estimate the best system by pilot runs")
        best = pilot_reference_best(family, int(budget), plan.base_seed,
                                    int(plan.policy_config.get("pilots", 3)), resolve_threads(args.threads))
        print(f"family={family.name} K={family.K} oracle=unavailable")
        print(f"reference best (pilot, budget {budget}): {best}")
        return 0
    print(f"family={family.name} K={family.K}")
    print(f"{'system':>6} {'value':>16} {'gap':>16}")
    for i, v, g in diag.rows():
        print(f"{i:>6} {v:>16.8f} {g:>16.8f}")
    print(f"H2 = {diag.h2:.10g}")
    print(f"best = {diag.best}")
    return 0


def cmd_list(args) -> int:
    for name in FAMILIES:
        mode, text = FAMILY_HELP[name]
        usable = ", ".join(p for p in POLICIES if POLICY_MODE[p] == mode)
        print(f"{name:<11} {mode:<9} {text}")
        print(f"{'':<11} policies: {usable}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbos", description="Select the best optimizing system.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", help="output directory (run/sweep) or SVG path (plot)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads, 0 = one per CPU (default: $SBOS_THREADS or 1)")
        p.add_argument("--seed", type=int, default=None, help="override base_seed")
        p.add_argument("--replications", type=int, default=None, help="override replications")

    p = sub.add_parser("run", help="run one policy over the budget grid")
    common(p)
    p.add_argument("--policy", help="policy to run (overrides the config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="compare several policies on one instance")
    common(p)
    p.add_argument("--policies", help="comma-separated policy names")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="render a result CSV as an SVG chart")
    p.add_argument("csv")
    p.add_argument("--out", help="SVG path (default: CSV path with .svg)")
    p.add_argument("--log-pfs", action="store_true", help="plot log10 PFS instead of PCS")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("diag", help="true values, gaps and H2 of an instance")
    common(p)
    p.add_argument("--pilot-budget", type=int, default=None,
                   help="estimate the best system by pilot runs when no oracle exists")
    p.set_defaults(func=cmd_diag)

    p = sub.add_parser("list-problems", help="list instance families")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
