"""Command-line front end.

Exit codes:
  0  optimal or feasible schedule written
  2  bad command-line usage
  3  model infeasible
  4  node or time limit reached (schedule written if an incumbent exists)
  5  model unbounded
  6  scenario could not be loaded or failed validation
  7  --verify found a violated constraint
  8  solver failure (numerical trouble)

The environment variable HEMS_SEED is reserved for stochastic extensions
and currently ignored.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import dataclass, field
from importlib.resources import files
from pathlib import Path

from .domain import ProfileKind, ScenarioConfig
from .formulation import FormulationError, build
from .ingestion import ProfileParseError, ScenarioError, ValidationError, load_scenario
from .schedule import CostBreakdown, Schedule, extract_schedule
from .solver import BACKENDS, BnbParams, MilpSolution, MilpStatus, SolverError, export_mps, solve_milp
from .verify import verify

log = logging.getLogger("hems")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4
EXIT_UNBOUNDED = 5
EXIT_SCENARIO = 6
EXIT_VERIFY = 7
EXIT_SOLVER = 8

_STATUS_EXIT = {
    MilpStatus.OPTIMAL: EXIT_OK,
    MilpStatus.FEASIBLE: EXIT_OK,
    MilpStatus.INFEASIBLE: EXIT_INFEASIBLE,
    MilpStatus.LIMIT_REACHED: EXIT_LIMIT,
    MilpStatus.UNBOUNDED: EXIT_UNBOUNDED,
}


class RunError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


@dataclass
class RunReport:
    scenario: str
    solution: MilpSolution
    schedule: Schedule | None
    cost: CostBreakdown | None
    manifest: list[str] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.violations:
            return EXIT_VERIFY
        return _STATUS_EXIT[self.solution.status]

    def to_dict(self) -> dict:
        # wall time is left out so reports stay byte-identical across runs
        return {
            "scenario": self.scenario,
            "solution": self.solution.summary(),
            "cost": None if self.cost is None else self.cost.to_dict(),
            "manifest": list(self.manifest),
            "violations": list(self.violations),
        }


def shipped_scenario(name: str) -> Path:
    return Path(str(files("hems") / "data" / f"{name}.yaml"))


def resolve_scenario(arg: str) -> Path:
    path = Path(arg)
    if path.is_file():
        return path
    shipped = shipped_scenario(arg)
    if shipped.is_file():
        return shipped
    raise RunError(f"no scenario file or shipped scenario named {arg!r}", EXIT_SCENARIO)


def _num(v: float | None) -> str:
    if v is None:
        return ""
    text = f"{v:.6f}"
    return "0.000000" if text == "-0.000000" else text


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_schedule(schedule: Schedule, config: ScenarioConfig, out: Path) -> list[str]:
    price = config.profile(ProfileKind.BUY_PRICE)
    devices = list(schedule.status)
    names = list(schedule.storages)
    header = (["interval", "buy_price"] + devices + ["load_kw", "theta_in", "theta_fr",
              "pv_used", "pv_sold"])
    for n in names:
        header += [f"{n}_charge", f"{n}_discharge", f"{n}_used", f"{n}_sold", f"{n}_soe"]
    header += ["buy_kw", "sell_kw", "grid_status"]
    rows = []
    for i in range(schedule.horizon_len):
        row = [i + 1, _num(price.values[i])] + [schedule.status[d][i] for d in devices]
        row += [_num(schedule.load[i]), _num(schedule.theta_in[i]), _num(schedule.theta_fr[i]),
                _num(schedule.pv_used[i]), _num(schedule.pv_sold[i])]
        for n in names:
            tr = schedule.storages[n]
            row += [_num(tr.charge[i]), _num(tr.discharge[i]), _num(tr.used[i]),
                    _num(tr.sold[i]), _num(tr.soe[i])]
        row += [_num(schedule.buy[i]), _num(schedule.sell[i]), schedule.grid_status[i]]
        rows.append(row)
    _write_csv(out / "schedule.csv", header, rows)

    _write_csv(
        out / "soe.csv",
        ["interval"] + names,
        [[i + 1] + [_num(schedule.storages[n].soe[i]) for n in names]
         for i in range(schedule.horizon_len)],
    )
    _write_csv(
        out / "grid.csv",
        ["interval", "buy_price", "buy_kw", "sell_kw"],
        [[i + 1, _num(price.values[i]), _num(schedule.buy[i]), _num(schedule.sell[i])]
         for i in range(schedule.horizon_len)],
    )
    _write_json(out / "cost.json", schedule.cost.to_dict() | {"objective": schedule.objective})
    return ["schedule.csv", "soe.csv", "grid.csv", "cost.json"]


def run(
    scenario_path: str | Path,
    out_dir: str | Path,
    params: BnbParams | None = None,
    backend: str = "highs",
    check: bool = False,
    mps_only: bool = False,
) -> RunReport:
    """Load, build, export, solve and write the outputs of one scenario."""
    params = params or BnbParams()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        config = load_scenario(resolve_scenario(str(scenario_path)))
        model = build(config)
    except (ScenarioError, ValidationError, ProfileParseError, FormulationError, OSError) as exc:
        raise RunError(f"cannot load scenario: {exc}", EXIT_SCENARIO) from exc

    (out / "model.mps").write_text(export_mps(model), encoding="utf-8")
    manifest = ["model.mps"]
    if mps_only:
        sol = MilpSolution(MilpStatus.FEASIBLE, solver="none")
        return RunReport(config.name, sol, None, None, manifest)

    try:
        sol = solve_milp(model, params, backend)
    except SolverError as exc:
        raise RunError(f"solver failure: {exc}", EXIT_SOLVER) from exc
    log.info("%s: %s objective=%s nodes=%d wall=%.2fs", config.name, sol.status.value,
             sol.objective, sol.nodes_explored, sol.wall_time)

    schedule = cost = None
    violations: list[str] = []
    if sol.x is not None:
        schedule = extract_schedule(sol, model, config)
        cost = schedule.cost
        manifest += write_schedule(schedule, config, out)
        if check:
            violations = verify(schedule, model, sol.x, config, tol=params.eps_feas * 10)
    report = RunReport(config.name, sol, schedule, cost, manifest, violations)
    manifest.append("report.json")
    _write_json(out / "report.json", report.to_dict())
    return report


def compare(
    scenario_a: str | Path,
    scenario_b: str | Path,
    out_dir: str | Path,
    params: BnbParams | None = None,
    backend: str = "highs",
) -> dict:
    """Solve two scenarios and write side-by-side cost, grid and SOE data."""
    out = Path(out_dir)
    ra = run(scenario_a, out / "a", params, backend)
    rb = run(scenario_b, out / "b", params, backend)
    statuses = {"a": ra.solution.status.value, "b": rb.solution.status.value}
    if ra.solution.status is not MilpStatus.OPTIMAL or rb.solution.status is not MilpStatus.OPTIMAL:
        raise RunError(f"comparison aborted, run statuses: {statuses}", max(ra.exit_code, rb.exit_code, 1))

    result = {
        "a": {"scenario": ra.scenario, "status": statuses["a"], "total": ra.cost.total},
        "b": {"scenario": rb.scenario, "status": statuses["b"], "total": rb.cost.total},
        "delta": ra.cost.total - rb.cost.total,
    }
    _write_json(out / "compare.json", result)

    sa, sb = ra.schedule, rb.schedule
    _write_csv(
        out / "grid_compare.csv",
        ["interval", "buy_kw_a", "sell_kw_a", "buy_kw_b", "sell_kw_b"],
        [[i + 1, _num(sa.buy[i]), _num(sa.sell[i]), _num(sb.buy[i]), _num(sb.sell[i])]
         for i in range(sa.horizon_len)],
    )
    cols = [("a", n) for n in sa.storages] + [("b", n) for n in sb.storages]
    _write_csv(
        out / "soe_compare.csv",
        ["interval"] + [f"{n}_{side}" for side, n in cols],
        [[i + 1] + [_num((sa if side == "a" else sb).storages[n].soe[i]) for side, n in cols]
         for i in range(sa.horizon_len)],
    )
    return result


def _params(args) -> BnbParams:
    kwargs = {}
    if args.node_limit is not None:
        kwargs["node_limit"] = args.node_limit
    if args.time_limit is not None:
        kwargs["time_limit_s"] = args.time_limit
    if args.gap is not None:
        kwargs["gap_abs"] = args.gap
    return BnbParams(**kwargs)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hems",
        description="Day-ahead home energy scheduling as a mixed-integer linear program.",
        epilog=__doc__.split("\n\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_opts(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--node-limit", type=int, default=None)
        p.add_argument("--time-limit", type=float, default=None, help="seconds")
        p.add_argument("--gap", type=float, default=None, help="absolute optimality gap")
        p.add_argument("--solver", choices=BACKENDS, default="highs",
                       help="MILP backend: HiGHS or the built-in branch-and-bound")

    p_run = sub.add_parser("run", help="solve one scenario (path or shipped name)")
    p_run.add_argument("scenario")
    solver_opts(p_run)
    p_run.add_argument("--verify", action="store_true", help="re-check the schedule independently")
    p_run.add_argument("--mps-only", action="store_true", help="write model.mps and stop")

    p_cmp = sub.add_parser("compare", help="solve two scenarios and compare their costs")
    p_cmp.add_argument("scenario_a")
    p_cmp.add_argument("scenario_b")
    solver_opts(p_cmp)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        params = _params(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "run":
            report = run(args.scenario, args.out, params, args.solver, args.verify, args.mps_only)
            sol = report.solution
            if args.mps_only:
                print(f"{report.scenario}: wrote {Path(args.out) / 'model.mps'}")
                return EXIT_OK
            total = "n/a" if report.cost is None else f"{report.cost.total:.4f}"
            print(f"{report.scenario}: status={sol.status.value} total_cost=${total} "
                  f"nodes={sol.nodes_explored} wall={sol.wall_time:.2f}s")
            for v in report.violations:
                print(f"VIOLATION {v}")
            return report.exit_code
        result = compare(args.scenario_a, args.scenario_b, args.out, params, args.solver)
        print(f"{result['a']['scenario']}: ${result['a']['total']:.4f}  "
              f"{result['b']['scenario']}: ${result['b']['total']:.4f}  "
              f"delta: ${result['delta']:.4f}")
        return EXIT_OK
    except RunError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
