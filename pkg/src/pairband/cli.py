"""Command-line front end: scenario generation, solving, sweeps.

Commands
    gen-scenario   draw a fresh instance and write it as a scenario file
    solve          run one strategy on a scenario file
    sweep          average strategies over seeds for a list of B_max values

All structured outputs are deterministic: JSON with sorted keys, CSV
with a fixed column order and repr-formatted floats, no timestamps.
Exit codes: 0 success, 2 usage error, 3 invalid input, 4 globally
infeasible instance.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from . import __version__
from .distortion import DistortionTable, load_distortion_table
from .latency_energy import SystemConfig, group_time, transmit_energy
from .scenario import (
    Scenario,
    ScenarioTemplate,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .solver import STRATEGIES, SolveResult, solve, sweep_bandwidth

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID_INPUT = 3
EXIT_INFEASIBLE = 4

METRIC_COLUMNS = (
    "b_max_hz",
    "strategy",
    "n_seeds",
    "n_feasible",
    "feasibility_rate",
    "mean_total_distortion",
    "mean_bandwidth_used",
    "mean_candidates_tried",
)


@dataclass(frozen=True)
class RunManifest:
    """What was asked of the tool — embedded in outputs for provenance."""

    command: str
    scenario_path: str | None
    seed: int
    output_path: str | None
    overrides: dict


class InputError(Exception):
    """Invalid input file or parameter combination (exit code 3)."""


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairband",
        description="Joint user pairing and bandwidth allocation solver.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-scenario", help="generate a scenario file")
    gen.add_argument("--n", type=int, default=16, help="number of users (even)")
    gen.add_argument("--area-m", type=float, default=500.0, help="square side length [m]")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", required=True, help="scenario file to write")
    gen.add_argument("--distortion-file", help="use this distortion table instead of the synthetic model")
    _add_budget_flags(gen)

    slv = sub.add_parser("solve", help="solve one scenario")
    slv.add_argument("scenario", help="scenario file")
    slv.add_argument("--strategy", choices=STRATEGIES, default="proposed")
    slv.add_argument("--w-count", type=int, default=16, help="candidate window size")
    slv.add_argument("--seed", type=int, help="matching seed for random strategies (default: scenario seed)")
    slv.add_argument("--output", help="write the structured result here")
    _add_budget_flags(slv)

    swp = sub.add_parser("sweep", help="sweep B_max for several strategies")
    swp.add_argument("scenario", help="scenario file providing the generator template")
    swp.add_argument("--bmax", type=_float_list, required=True, help="comma-separated B_max values [Hz], ascending")
    swp.add_argument("--strategy", action="append", choices=STRATEGIES, help="strategy to include (repeatable; default all)")
    swp.add_argument("--seeds", default="50", help="seed count N (meaning 0..N-1) or comma-separated seed list")
    swp.add_argument("--w-count", type=int, default=16)
    swp.add_argument("--jobs", type=int, default=1, help="parallel workers (output independent of this)")
    swp.add_argument("--output", required=True, help="metrics CSV to write")
    swp.add_argument("--tmax", type=float, help="override T_max [s]")
    swp.add_argument("--emax", type=float, help="override E_max [J]")
    swp.add_argument("--dmax", type=float, help="override D_max")
    return parser


def _add_budget_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bmax", type=float, help="override B_max [Hz]")
    p.add_argument("--tmax", type=float, help="override T_max [s]")
    p.add_argument("--emax", type=float, help="override E_max [J]")
    p.add_argument("--dmax", type=float, help="override D_max")


def _overrides(args, keys=("bmax", "tmax", "emax", "dmax")) -> dict:
    mapping = {"bmax": "b_max", "tmax": "t_max", "emax": "e_max", "dmax": "d_max"}
    out = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            if value <= 0:
                raise InputError(f"--{key} must be positive, got {value}")
            out[mapping[key]] = value
    return out


def _apply_overrides(scn: Scenario, overrides: dict) -> Scenario:
    if not overrides:
        return scn
    return replace(
        scn,
        cfg=replace(scn.cfg, **overrides),
        template=replace(scn.template, **overrides),
    )


def cmd_gen_scenario(args) -> int:
    if args.n < 2 or args.n % 2 != 0:
        raise InputError(f"--n must be even and >= 2, got {args.n}")
    overrides = _overrides(args)
    template = ScenarioTemplate(n_users=args.n, area_m=args.area_m)
    if overrides:
        template = replace(template, **overrides)
    scn = generate_scenario(template, args.seed)
    if args.distortion_file:
        table = load_distortion_table(args.distortion_file)
        if table.n != args.n:
            raise InputError(
                f"distortion table is for {table.n} users, scenario has {args.n}"
            )
        scn = replace(scn, distortions=table)
    save_scenario(scn, args.output, __version__)
    print(f"wrote scenario: n={args.n} seed={args.seed} -> {args.output}")
    return EXIT_OK


def _result_document(scn: Scenario, res: SolveResult, manifest: RunManifest) -> dict:
    doc = {
        "tool_version": __version__,
        "command": manifest.command,
        "scenario_path": manifest.scenario_path,
        "seed": manifest.seed,
        "overrides": manifest.overrides,
        "strategy": res.strategy,
        "feasible": res.feasible,
        "candidates_tried": res.candidates_tried,
        "total_distortion": res.total_distortion,
        "config": asdict(scn.cfg),
        "matching": None,
        "allocation": None,
    }
    if res.matching is not None:
        doc["matching"] = {
            "pairs": [list(p) for p in res.matching.pairs],
            "total_cost": res.matching.total_cost,
        }
    alloc = res.allocation
    if alloc is not None:
        groups = []
        if alloc.bandwidths and res.matching is not None:
            by_id = {u.id: u for u in scn.users}
            for k, ((i, j), b) in enumerate(zip(res.matching.pairs, alloc.bandwidths)):
                power = scn.cfg.group_powers[k]
                pair = (by_id[i], by_id[j])
                groups.append(
                    {
                        "pair": [i, j],
                        "bandwidth_hz": b,
                        "lower_bound_hz": alloc.lower_bounds[k],
                        "group_time_s": group_time(pair, b, power, scn.cfg),
                        "transmit_energy_j": transmit_energy(pair, b, power, scn.cfg),
                    }
                )
        doc["allocation"] = {
            "feasible": alloc.feasible,
            "infeasibility_reason": alloc.infeasibility_reason,
            "theta_star": alloc.theta_star,
            "objective_j": alloc.objective,
            "bandwidth_used_hz": alloc.bandwidth_used,
            "energy_total_j": alloc.energy_total,
            "groups": groups,
        }
    return doc


def _print_solve_summary(res: SolveResult) -> None:
    if res.matching is None:
        print(f"strategy={res.strategy}: no feasible pairing exists "
              f"(candidates tried: {res.candidates_tried})")
        return
    status = "feasible" if res.feasible else (
        f"infeasible ({res.allocation.infeasibility_reason})"
        if res.allocation is not None and res.allocation.infeasibility_reason
        else "infeasible (distortion cap)"
    )
    print(f"strategy={res.strategy} [{status}]")
    print(f"  pairs: {' '.join(f'({i},{j})' for i, j in res.matching.pairs)}")
    print(f"  total distortion: {res.total_distortion:.6f}")
    if res.allocation is not None and res.allocation.bandwidths:
        bw = " ".join(f"{b/1e6:.4f}" for b in res.allocation.bandwidths)
        print(f"  bandwidth [MHz]: {bw}")
        print(f"  theta*: {res.allocation.theta_star!r}")
        print(f"  transmit energy [J]: {res.allocation.objective:.6f}")
    print(f"  candidates tried: {res.candidates_tried}")


def cmd_solve(args) -> int:
    path = Path(args.scenario)
    if not path.exists():
        raise InputError(f"scenario file not found: {path}")
    scn = load_scenario(path)
    overrides = _overrides(args)
    scn = _apply_overrides(scn, overrides)
    seed = args.seed if args.seed is not None else scn.seed
    res = solve(scn, args.strategy, w_count=args.w_count, matching_seed=seed)

    manifest = RunManifest(
        command="solve",
        scenario_path=str(path),
        seed=seed,
        output_path=args.output,
        overrides=overrides,
    )
    if args.output:
        doc = _result_document(scn, res, manifest)
        Path(args.output).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    _print_solve_summary(res)
    if res.strategy == "proposed" and res.matching is None:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _parse_seeds(text: str) -> list[int]:
    try:
        if "," in text:
            return [int(tok) for tok in text.split(",") if tok.strip()]
        count = int(text)
        if count < 1:
            raise ValueError
        return list(range(count))
    except ValueError as exc:
        raise InputError(
            f"--seeds must be a positive count or comma-separated integers: {text!r}"
        ) from exc


def _format_csv_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(rows: list[dict], path, preamble: dict) -> None:
    lines = [f"# {key}={value}" for key, value in preamble.items()]
    lines.append(",".join(METRIC_COLUMNS))
    for row in rows:
        lines.append(",".join(_format_csv_value(row[col]) for col in METRIC_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_sweep(args) -> int:
    path = Path(args.scenario)
    if not path.exists():
        raise InputError(f"scenario file not found: {path}")
    if not args.bmax:
        raise InputError("--bmax list must be non-empty")
    if sorted(args.bmax) != args.bmax:
        raise InputError("--bmax values must be ascending")
    scn = load_scenario(path)
    overrides = _overrides(args, keys=("tmax", "emax", "dmax"))
    template = scn.template
    if overrides:
        template = replace(template, **overrides)
    strategies = args.strategy or list(STRATEGIES)
    seeds = _parse_seeds(args.seeds)

    rows = sweep_bandwidth(
        template,
        args.bmax,
        strategies=strategies,
        seeds=seeds,
        w_count=args.w_count,
        jobs=args.jobs,
    )
    preamble = {
        "tool_version": __version__,
        "scenario": path.name,
        "n_users": template.n_users,
        "seeds": ",".join(str(s) for s in seeds),
        "strategies": ",".join(strategies),
        "w_count": args.w_count,
        "overrides": json.dumps(overrides, sort_keys=True),
    }
    write_metrics_csv(rows, args.output, preamble)
    print(f"wrote {len(rows)} rows -> {args.output}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "gen-scenario": cmd_gen_scenario,
        "solve": cmd_solve,
        "sweep": cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except ValueError as exc:
        print(f"error: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
