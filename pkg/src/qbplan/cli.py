"""``qbplan`` command line.

Exit codes: 0 success, 1 usage or configuration error, 2 numeric or
convergence failure, 3 observations exhausted while still continuing.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from pathlib import Path
from typing import Iterable, Iterator, Optional

from .closed_form import NoClosedFormCost, min_closed_form_cost
from .config import ProblemConfig, SolverSettings
from .credal import Observation, lump
from .plan import OffLadderError, Plan
from .policy import RefinementRequired, classify, default_action, plan_bank, step
from .simulator import monte_carlo, run_episode, episode_seed, trace_csv, compare_agents
from .value_iteration import SolveError, solve

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_EXHAUSTED = 0, 1, 2, 3

REGION_COLUMNS = ["tau", "b_continue", "b_stop", "provenance"]

_DECIMAL = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)$")


class UsageError(Exception):
    pass


def decimal(text: str) -> float:
    """Plain decimal literal: no exponents, no inf/nan."""
    text = text.strip()
    if not _DECIMAL.match(text):
        raise argparse.ArgumentTypeError(f"not a plain decimal number: {text!r}")
    return float(text)


def cost_list(text: str) -> list[float]:
    """``lo:hi:step`` (inclusive) or a comma-separated list of decimals."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError("cost range must be lo:hi:step")
        lo, hi, stp = (decimal(p) for p in parts)
        if stp <= 0 or hi < lo:
            raise argparse.ArgumentTypeError("cost range needs step > 0 and hi >= lo")
        n = int(round((hi - lo) / stp))
        return [round(lo + i * stp, 12) for i in range(n + 1)]
    return [decimal(p) for p in text.split(",") if p.strip()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_prior(p, need_c=True):
    p.add_argument("--r", type=decimal, required=True, help="observation precision")
    if need_c:
        p.add_argument("--c", type=decimal, required=True, help="cost per observation")
    p.add_argument("--tau0", type=decimal, required=True, help="prior precision")
    p.add_argument("--mu-lo", type=decimal, required=True)
    p.add_argument("--mu-hi", type=decimal, required=True)


def _add_solver(p):
    g = p.add_argument_group("solver")
    g.add_argument("--grid-points", type=int)
    g.add_argument("--quad-order", type=int)
    g.add_argument("--mu-max", type=decimal)
    g.add_argument("--k-max", type=int)
    g.add_argument("--max-sweeps", type=int, help="defaults to $QBPLAN_MAX_SWEEPS or 50")


def _settings(args) -> SolverSettings:
    overrides = {k: getattr(args, k) for k in
                 ("grid_points", "quad_order", "mu_max", "k_max", "max_sweeps")
                 if getattr(args, k, None) is not None}
    return SolverSettings.from_env(**overrides)


def _config(args, c=None) -> ProblemConfig:
    return ProblemConfig(args.r, args.c if c is None else c, args.tau0, args.mu_lo, args.mu_hi)


def _load_plan(path: str) -> Plan:
    try:
        with open(path) as fh:
            return Plan.from_dict(json.load(fh))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read plan {path}: {exc}") from exc


def plan_json(plan: Plan) -> str:
    return json.dumps(plan.to_dict(), indent=2) + "\n"


def _write(text: str, path: Optional[str], out) -> None:
    if path is None or path == "-":
        out.write(text)
    else:
        Path(path).write_text(text)


def cmd_plan(args, out) -> int:
    config = _config(args)
    try:
        plan = solve(config, _settings(args))
    except SolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(plan_json(plan), args.output, out)
    if args.output not in (None, "-"):
        print(f"{plan.provenance} plan, {plan.sweeps} sweeps, {len(plan.levels)} levels"
              f" -> {args.output}", file=out)
    return EXIT_OK


def cmd_threshold(args, out) -> int:
    delta = args.delta if args.delta is not None else None
    if delta is None:
        if args.mu_lo is None or args.mu_hi is None:
            raise UsageError("give --delta or both --mu-lo and --mu-hi")
        delta = args.mu_hi - args.mu_lo
    if delta < 0 or args.r <= 0 or args.tau0 <= 0 or args.c_hi <= 0:
        raise UsageError("need r, tau0, c-hi > 0 and delta >= 0")
    try:
        c = min_closed_form_cost(args.r, args.tau0, delta, args.c_hi)
    except NoClosedFormCost as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"{c:.4g}", file=out)
    return EXIT_OK


def _format_step(label, state, action, report) -> str:
    adm = ",".join(a.value for a in report.sorted_admissible()) or "-"
    return (f"{label} tau={state.tau:.12g} interval=[{state.mu_lo:.12g}, {state.mu_hi:.12g}]"
            f" action={action.value} robust={'yes' if report.robust else 'no'}"
            f" admissible={{{adm}}}" + (" tie=yes" if report.tie else ""))


def _read_values(args) -> Iterator[float]:
    if args.obs is not None:
        for part in args.obs.split(","):
            if part.strip():
                yield decimal(part)
        return
    for line in sys.stdin:
        if line.strip():
            yield decimal(line)


def cmd_classify(args, out) -> int:
    from .credal import CredalState
    plan = _load_plan(args.plan)
    state = CredalState(args.tau, args.mu_lo, args.mu_hi)
    try:
        report = classify(plan, state)
    except OffLadderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(json.dumps({
        "tau": report.tau,
        "admissible": [a.value for a in report.sorted_admissible()],
        "robust": report.robust,
        "indeterminate_overlap": report.indeterminate_overlap,
        "fully_indeterminate": report.fully_indeterminate,
        "tie": report.tie,
    }), file=out)
    return EXIT_OK


def cmd_run(args, out) -> int:
    plan = _load_plan(args.plan)
    r_obs = args.obs_precision if args.obs_precision is not None else plan.raw_precision
    try:
        action, state, report = step(plan, plan.prior_state())
        print(_format_step("prior", state, action, report), file=out)
        values = _read_values(args)
        n = 0
        while not action.is_stop:
            batch = []
            for x in values:
                batch.append(Observation(x, r_obs))
                if len(batch) == plan.lump:
                    break
            if len(batch) < plan.lump:
                print(f"input exhausted; recommendation {action.value}", file=out)
                return EXIT_EXHAUSTED
            n += len(batch)
            action, state, report = step(plan, state, lump(batch))
            print(_format_step(f"obs{n}", state, action, report), file=out)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc)) from exc
    except (OffLadderError, RefinementRequired) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def regions_csv(plan: Plan, digits: Optional[int] = None) -> str:
    fmt = repr if digits is None else (lambda v: f"{v:.{digits}g}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REGION_COLUMNS)
    for lev in plan.levels:
        writer.writerow([fmt(lev.tau_level), fmt(lev.b_continue), fmt(lev.b_stop), lev.provenance])
    return buf.getvalue()


def read_regions_csv(text: str) -> list[tuple[float, float, float, str]]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [(float(r["tau"]), float(r["b_continue"]), float(r["b_stop"]), r["provenance"])
            for r in rows]


def cmd_export_regions(args, out) -> int:
    plan = _load_plan(args.plan)
    _write(regions_csv(plan, args.digits), args.output, out)
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    plan = _load_plan(args.plan)
    if args.theta_uniform is not None:
        lo, hi = args.theta_uniform
        theta = lambda rng: rng.uniform(lo, hi)  # noqa: E731
    else:
        theta = args.theta
    if args.n < 1:
        raise UsageError("--n must be at least 1")
    summary = monte_carlo(plan, theta, args.n, args.seed)
    if args.trace:
        ep = run_episode(plan, theta, episode_seed(args.seed, 0), keep_trace=True)
        Path(args.trace).write_text(trace_csv(ep.trace))
    print(json.dumps(summary.to_dict(), indent=2, sort_keys=True), file=out)
    return EXIT_OK


def cmd_bank(args, out) -> int:
    settings = _settings(args)
    base = ProblemConfig(args.r, max(args.costs), args.tau0, args.mu_lo, args.mu_hi)
    entries = plan_bank(base, args.costs, settings,
                        lump_threshold=args.lump_threshold)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for e in entries:
        row = {"cost": e.cost, "mode": e.mode, "file": None, "sweeps": None, "error": e.error}
        if e.plan is not None:
            name = f"plan_c{e.cost:.6g}.json"
            (out_dir / name).write_text(plan_json(e.plan))
            row.update(file=name, sweeps=e.plan.sweeps, lump=e.plan.lump)
        manifest.append(row)
        print(f"c={e.cost:.6g} {e.mode}" + (f" sweeps={e.plan.sweeps}" if e.plan else
                                           f" FAILED: {e.error}"), file=out)
    (out_dir / "manifest.json").write_text(
        json.dumps({"schema": 1, "base": base.to_dict(), "plans": manifest}, indent=2) + "\n")
    return EXIT_NUMERIC if any(not e.ok for e in entries) else EXIT_OK


def cmd_compare(args, out) -> int:
    config = ProblemConfig(args.r, max(args.costs), args.tau0, args.mu_lo, args.mu_hi)
    rows = compare_agents(config, args.costs, args.n, args.seed, args.theta, _settings(args),
                          args.eps_bayes)
    payload = []
    for row in rows:
        payload.append({
            "cost": row.cost,
            "qb_sweeps": row.qb_sweeps,
            "bayes_sweeps": row.bayes_sweeps,
            "qb_mean_total_loss": row.qb_summary.mean_total_loss if row.qb_summary else None,
            "bayes_mean_total_loss":
                row.bayes_summary.mean_total_loss if row.bayes_summary else None,
            "errors": row.errors,
        })
    print(json.dumps(payload, indent=2), file=out)
    return EXIT_NUMERIC if any(r["errors"] for r in payload) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qbplan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", help="generate a plan file")
    _add_prior(p)
    _add_solver(p)
    p.add_argument("-o", "--output", help="plan JSON path (default stdout)")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("threshold", help="smallest cost with a closed-form plan")
    p.add_argument("--r", type=decimal, required=True)
    p.add_argument("--tau0", type=decimal, required=True)
    p.add_argument("--delta", type=decimal)
    p.add_argument("--mu-lo", type=decimal)
    p.add_argument("--mu-hi", type=decimal)
    p.add_argument("--c-hi", type=decimal, default=1.0)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("classify", help="robustness report for one credal state")
    p.add_argument("--plan", required=True)
    p.add_argument("--tau", type=decimal, required=True)
    p.add_argument("--mu-lo", type=decimal, required=True)
    p.add_argument("--mu-hi", type=decimal, required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("run", help="execute a plan on observations from --obs or stdin")
    p.add_argument("--plan", required=True)
    p.add_argument("--obs", help="comma-separated observations")
    p.add_argument("--obs-precision", type=decimal,
                   help="precision of each raw observation (default: the plan's)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("export-regions", help="region thresholds as CSV")
    p.add_argument("--plan", required=True)
    p.add_argument("-o", "--output")
    p.add_argument("--digits", type=int,
                   help="significant digits (default: shortest exact round-trip)")
    p.set_defaults(func=cmd_export_regions)

    p = sub.add_parser("simulate", help="Monte Carlo evaluation of a plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--theta", type=decimal, default=0.0)
    p.add_argument("--theta-uniform", type=decimal, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write the first episode's trace CSV here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bank", help="plans for a list of costs")
    _add_prior(p, need_c=False)
    p.add_argument("--costs", type=cost_list, required=True, help="lo:hi:step or a,b,c")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--lump-threshold", type=decimal,
                   help="lump every cost at or below this without trying first")
    _add_solver(p)
    p.set_defaults(func=cmd_bank)

    p = sub.add_parser("compare", help="quasi-Bayesian vs single-prior agent")
    _add_prior(p, need_c=False)
    p.add_argument("--costs", type=cost_list, required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", type=decimal, default=0.0)
    p.add_argument("--eps-bayes", type=decimal)
    _add_solver(p)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: Optional[Iterable[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # invalid configurations surface from dataclass validation
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
