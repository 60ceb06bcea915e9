"""Command-line front end: capability, day-ahead, sweep, and cosim studies.

Each subcommand reads JSON/CSV inputs, writes CSV results plus a run
manifest (input digests, parameters, status counts) into the output
directory, and exits 0 on success, 1 on input errors, 2 when any solve in
the study came back infeasible (results are still written).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, capability, feeder, tdsim

CAPABILITY_HEADER = ("curtailment,q_lower_kvar,q_upper_kvar,q_base_kvar,a,b,"
                     "v0_lower,v0_upper,d_lo,d_hi,wc_q_lower_kvar,"
                     "wc_q_upper_kvar,case_id,feasible_lower,feasible_upper")
DEFAULT_CURTAILMENT_GRID = (0.0, 0.2, 0.4, 0.6, 0.8)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_INFEASIBLE = 2


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# formatting and manifest helpers


def fmt(value: float | int | bool) -> str:
    """Serialize one CSV cell: 6 significant digits, "inf" for infeasible."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if not np.isfinite(v):
        return "inf"
    return f"{v:.6g}"


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunManifest:
    """Run record: digests are taken before compute, emitted even on failure."""

    def __init__(self, command: str, inputs: list[Path], parameters: dict):
        self.command = command
        self.inputs = {str(p): file_digest(p) for p in inputs}
        self.parameters = parameters
        self.status_counts: dict[str, int] = {}
        self._start = time.time()

    def count(self, status: str, n: int = 1) -> None:
        self.status_counts[status] = self.status_counts.get(status, 0) + n

    def write(self, out_dir: Path) -> None:
        doc = {
            "command": self.command,
            "inputs": self.inputs,
            "parameters": self.parameters,
            "version": __version__,
            "wall_clock_s": round(time.time() - self._start, 3),
            "status_counts": self.status_counts,
        }
        (out_dir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def read_text(path: Path, what: str) -> str:
    if not path.is_file():
        raise InputError(f"{what} file not found: {path}")
    return path.read_text()


def load_feeder_file(path: Path) -> feeder.FeederModel:
    try:
        return feeder.load_feeder(read_text(path, "feeder"))
    except feeder.FeederError as exc:
        raise InputError(f"feeder {path}: {exc}") from exc


def read_profiles(path: Path) -> tuple[list[float], list[float]]:
    rows = list(csv.DictReader(read_text(path, "profiles").splitlines()))
    if len(rows) != 24:
        raise InputError(f"profiles {path}: expected 24 rows, got {len(rows)}")
    try:
        load = [float(r["load_mult"]) for r in rows]
        solar = [float(r["solar_mult"]) for r in rows]
    except (KeyError, ValueError) as exc:
        raise InputError(f"profiles {path}: {exc}") from exc
    return load, solar


# ---------------------------------------------------------------------------
# capability rows shared by cmd_capability and cmd_dayahead


def capability_row(pt: capability.CapabilityPoint, q_base: float,
                   manifest: RunManifest,
                   count_wc: bool = False) -> tuple[str, bool]:
    """One CSV row for a capability point; returns (row, any_infeasible)."""
    inf = float("inf")
    bad = not (pt.feasible_lower and pt.feasible_upper)
    manifest.count("optimal" if pt.feasible_lower else "infeasible")
    manifest.count("optimal" if pt.feasible_upper else "infeasible")
    if count_wc and pt.interval is not None:
        manifest.count("optimal" if pt.interval.wc_feasible_lower
                       else "infeasible")
        manifest.count("optimal" if pt.interval.wc_feasible_upper
                       else "infeasible")
    if pt.interval is None:
        cells = [pt.curtailment, pt.q_lower, pt.q_upper, q_base,
                 inf, inf, pt.v0_star_lower, pt.v0_star_upper,
                 inf, inf, inf, inf, 0,
                 pt.feasible_lower, pt.feasible_upper]
        return ",".join(fmt(c) for c in cells), True
    iv = pt.interval
    flex = pt.flexibility
    dec = iv.d_lower.intersect(iv.d_upper)
    wc_lo = iv.worst_case[0] if iv.wc_feasible_lower else inf
    wc_hi = iv.worst_case[1] if iv.wc_feasible_upper else inf
    bad = bad or not (iv.wc_feasible_lower and iv.wc_feasible_upper)
    cells = [pt.curtailment, pt.q_lower, pt.q_upper, q_base,
             flex.a if flex else inf, flex.b if flex else inf,
             pt.v0_star_lower, pt.v0_star_upper, dec.lo, dec.hi,
             wc_lo, wc_hi, iv.case_id,
             pt.feasible_lower, pt.feasible_upper]
    return ",".join(fmt(c) for c in cells), bad


def write_capability_csv(path: Path, rows: list[str]) -> None:
    path.write_text("\n".join([CAPABILITY_HEADER] + rows) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_capability(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    feeder_path = Path(args.feeder)
    manifest = RunManifest("capability", [feeder_path], {
        "vtm": args.vtm, "curtailment_grid": list(args.curtailment_grid),
        "worst_case": args.worst_case,
        "vtm_min": args.vtm_min, "vtm_max": args.vtm_max,
        "load_mult": args.load_mult, "solar_mult": args.solar_mult,
    })
    try:
        model = load_feeder_file(feeder_path)
        grid = sorted(set(args.curtailment_grid))
        op = model.operating_point("cli", args.load_mult, args.solar_mult)
        l_p, l_q = feeder.estimate_loss_constants(model, op)
        sens = feeder.compute_sensitivities(model, l_p, l_q)
        q_base = capability.base_var_demand(model, sens, op)

        def solve_one(cur: float) -> capability.CapabilityPoint:
            return capability.capability_point(
                model, sens, op, cur, args.vtm, args.vtm_min, args.vtm_max,
                q_base, with_worst_case=args.worst_case)

        points = capability.parallel_map(solve_one, grid)
        rows, any_bad = [], False
        for pt in points:
            row, bad = capability_row(pt, q_base, manifest,
                                      count_wc=args.worst_case)
            rows.append(row)
            any_bad = any_bad or bad
        write_capability_csv(out_dir / "capability.csv", rows)
        return EXIT_INFEASIBLE if any_bad else EXIT_OK
    finally:
        manifest.write(out_dir)


def cmd_dayahead(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    feeder_path, profile_path = Path(args.feeder), Path(args.profiles)
    manifest = RunManifest("dayahead", [feeder_path, profile_path], {
        "curtailment": args.curtailment, "vtm": args.vtm,
        "ieee1547": args.ieee1547,
    })
    try:
        model = load_feeder_file(feeder_path)
        load, solar = read_profiles(profile_path)
        if args.ieee1547:
            comp = capability.ieee1547_scenarios(model, load, solar, args.vtm)
            surface = (comp.oversized if args.ieee1547 == "oversize"
                       else comp.curtailed)
            levels = surface.curtailment_levels
            hourly = [cs[0].points for cs in surface.curves]
            q_bases = [cs[0].q_base for cs in surface.curves]
        else:
            surface = capability.day_ahead_sweep(model, load, solar,
                                                 (args.curtailment,), args.vtm)
            levels = (args.curtailment,) * 24
            hourly = [tuple(pt for curve in cs for pt in curve.points)
                      for cs in surface.curves]
            q_bases = [cs[0].q_base for cs in surface.curves]
        any_bad = False
        index_rows = ["hour,file,load_mult,solar_mult,curtailment"]
        for hour in range(24):
            rows = []
            for pt in hourly[hour]:
                row, bad = capability_row(pt, q_bases[hour], manifest,
                                          count_wc=not args.ieee1547)
                rows.append(row)
                any_bad = any_bad or bad
            name = f"hour_{hour:02d}.csv"
            write_capability_csv(out_dir / name, rows)
            index_rows.append(",".join([str(hour), name, fmt(load[hour]),
                                        fmt(solar[hour]), fmt(levels[hour])]))
        (out_dir / "index.csv").write_text("\n".join(index_rows) + "\n")
        return EXIT_INFEASIBLE if any_bad else EXIT_OK
    finally:
        manifest.write(out_dir)


PLACEMENTS = ("distributed", "end", "near")
END_NODES = ("738", "711", "741", "740", "735", "736")
NEAR_NODES = ("701", "702", "713", "703", "705", "727")


def _with_placement(model: feeder.FeederModel, kind: str) -> feeder.FeederModel:
    """Move the fixture's total DER capacity onto one node group."""
    if kind == "distributed":
        return model
    nodes = END_NODES if kind == "end" else NEAR_NODES
    keep = {node.id for node in model.graph.nodes if node.name in nodes}
    if not keep:
        raise InputError(f"placement {kind!r}: no matching nodes in feeder")
    total_kw = sum(u.p_rated_kw for u in model.ders)
    oversize = model.ders[0].s_kva / model.ders[0].p_rated_kw
    slots = [u for u in model.ders if u.node in keep]
    per = total_kw / len(slots)
    ders = tuple(replace(u, id=k, p_rated_kw=per, s_kva=per * oversize,
                         p_avail_kw=per)
                 for k, u in enumerate(slots))
    return replace(model, ders=ders)


def _with_penetration(model: feeder.FeederModel,
                      factor: float) -> feeder.FeederModel:
    ders = tuple(replace(u, p_rated_kw=u.p_rated_kw * factor,
                         s_kva=u.s_kva * factor,
                         p_avail_kw=u.p_avail_kw * factor)
                 for u in model.ders)
    return replace(model, ders=ders)


def cmd_sweep(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    feeder_path = Path(args.feeder)
    manifest = RunManifest("sweep", [feeder_path], {
        "vary": args.vary, "values": list(args.values),
        "curtailment": args.curtailment,
        "load_mult": args.load_mult, "solar_mult": args.solar_mult,
    })
    try:
        if args.vary not in ("penetration", "oversize", "placement", "vtm"):
            raise InputError(f"unknown sweep key {args.vary!r}")
        base_model = load_feeder_file(feeder_path)
        if args.vary == "placement":
            values = list(args.values) or list(PLACEMENTS)
            for v in values:
                if v not in PLACEMENTS:
                    raise InputError(f"unknown placement {v!r}; "
                                     f"choose from {PLACEMENTS}")
        else:
            if not args.values:
                raise InputError(f"--values required for --vary {args.vary}")
            values = [float(v) for v in args.values]

        def solve_value(value):
            model = base_model
            v_tm = 1.0
            if args.vary == "penetration":
                model = _with_penetration(base_model, value)
            elif args.vary == "oversize":
                model = capability._with_oversize(base_model, value)
            elif args.vary == "placement":
                model = _with_placement(base_model, value)
            else:  # vtm
                v_tm = value
            op = model.operating_point("cli", args.load_mult, args.solar_mult)
            l_p, l_q = feeder.estimate_loss_constants(model, op)
            sens = feeder.compute_sensitivities(model, l_p, l_q)
            q_base = capability.base_var_demand(model, sens, op)
            pt = capability.capability_point(model, sens, op,
                                             args.curtailment, v_tm,
                                             q_base=q_base,
                                             with_worst_case=False)
            return pt, q_base

        results = capability.parallel_map(solve_value, values)
        rows = ["value,a,b,q_lower_kvar,q_upper_kvar,q_base_kvar,"
                "feasible_lower,feasible_upper"]
        any_bad = False
        for value, (pt, q_base) in zip(values, results):
            flex = pt.flexibility
            manifest.count("optimal" if pt.feasible_lower else "infeasible")
            manifest.count("optimal" if pt.feasible_upper else "infeasible")
            any_bad = any_bad or not (pt.feasible_lower and pt.feasible_upper)
            cells = [value if isinstance(value, str) else fmt(value),
                     fmt(flex.a if flex else float("inf")),
                     fmt(flex.b if flex else float("inf")),
                     fmt(pt.q_lower), fmt(pt.q_upper), fmt(q_base),
                     fmt(pt.feasible_lower), fmt(pt.feasible_upper)]
            rows.append(",".join(cells))
        (out_dir / "sweep.csv").write_text("\n".join(rows) + "\n")
        return EXIT_INFEASIBLE if any_bad else EXIT_OK
    finally:
        manifest.write(out_dir)


def cmd_cosim(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    net_path, scen_path = Path(args.transmission), Path(args.scenario)
    manifest = RunManifest("cosim", [net_path, scen_path], {})
    try:
        try:
            net = tdsim.load_transmission(read_text(net_path, "transmission"))
        except tdsim.TransmissionError as exc:
            raise InputError(f"transmission {net_path}: {exc}") from exc

        def read_feeder(name: str) -> str:
            # feeder files may sit beside the scenario or one level up
            # (the shipped layout keeps scenarios in a subdirectory)
            local = scen_path.parent / name
            if local.is_file():
                return local.read_text()
            return read_text(scen_path.parent.parent / name, "feeder")

        try:
            boundaries, events, horizon = tdsim.load_scenario(
                read_text(scen_path, "scenario"), read_feeder)
        except (tdsim.TransmissionError, feeder.FeederError, KeyError,
                ValueError) as exc:
            raise InputError(f"scenario {scen_path}: {exc}") from exc

        result = tdsim.cosimulate(net, boundaries, events, horizon)
        n_conv = sum(1 for st in result.steps if st.converged)
        manifest.count("converged", n_conv)
        manifest.count("diverged", len(result.steps) - n_conv)

        def write_series(name: str, values: list[float]) -> None:
            rows = ["t,series,value"]
            rows += [f"{t},{name},{fmt(v)}" for t, v in enumerate(values)]
            (out_dir / f"{name}.csv").write_text("\n".join(rows) + "\n")

        bus_ids = sorted(st for st in result.steps[0].bus_vm)
        for bus in bus_ids:
            write_series(f"vm_bus{bus}",
                         [st.bus_vm[bus] for st in result.steps])
        for b in boundaries:
            write_series(f"p_bus{b.bus}", result.series("p", b.bus))
            write_series(f"q_bus{b.bus}", result.series("q", b.bus))
            write_series(f"feeder_vmin_bus{b.bus}",
                         result.series("feeder_v_min", b.bus))
            write_series(f"feeder_vmax_bus{b.bus}",
                         result.series("feeder_v_max", b.bus))
        return EXIT_OK if n_conv else EXIT_INFEASIBLE
    finally:
        manifest.write(out_dir)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dercap",
        description="Aggregated DER var capability studies on radial feeders")
    sub = parser.add_subparsers(dest="command", required=True)

    cap = sub.add_parser("capability",
                         help="capability interval over a curtailment grid")
    cap.add_argument("--feeder", required=True)
    cap.add_argument("--vtm", type=float, default=1.0)
    cap.add_argument("--curtailment-grid", type=float, nargs="+",
                     default=list(DEFAULT_CURTAILMENT_GRID))
    cap.add_argument("--out", required=True)
    cap.add_argument("--worst-case", action="store_true")
    cap.add_argument("--vtm-min", type=float, default=0.9)
    cap.add_argument("--vtm-max", type=float, default=1.1)
    cap.add_argument("--load-mult", type=float, default=1.0)
    cap.add_argument("--solar-mult", type=float, default=1.0)
    cap.set_defaults(func=cmd_capability)

    day = sub.add_parser("dayahead", help="hourly capability from profiles")
    day.add_argument("--feeder", required=True)
    day.add_argument("--profiles", required=True)
    day.add_argument("--curtailment", type=float, default=0.0)
    day.add_argument("--ieee1547", choices=["oversize", "curtail"])
    day.add_argument("--vtm", type=float, default=1.0)
    day.add_argument("--out", required=True)
    day.set_defaults(func=cmd_dayahead)

    swp = sub.add_parser("sweep", help="parameter sweeps (RPFR summaries)")
    swp.add_argument("--feeder", required=True)
    swp.add_argument("--vary", required=True)
    swp.add_argument("--values", nargs="*", default=[])
    swp.add_argument("--curtailment", type=float, default=0.0)
    swp.add_argument("--load-mult", type=float, default=1.0)
    swp.add_argument("--solar-mult", type=float, default=1.0)
    swp.add_argument("--out", required=True)
    swp.set_defaults(func=cmd_sweep)

    cos = sub.add_parser("cosim", help="transmission-distribution case study")
    cos.add_argument("--transmission", required=True)
    cos.add_argument("--scenario", required=True)
    cos.add_argument("--out", required=True)
    cos.set_defaults(func=cmd_cosim)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except (json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
