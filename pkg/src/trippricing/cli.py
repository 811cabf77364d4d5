"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import classical as cl
from . import equilibrium as eq
from . import metrics as mt
from . import netmodel as nm
from . import optimizer as op
from . import pricing as pr

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3
RECORD_FORMAT = 1

# lower is better for these; used for +/- annotations in comparisons
_LOWER_IS_BETTER = {"TTS_pax_h", "TTS_veh_h", "avg_travel_time_min", "TEC_kWh", "TGC_eur", "PC",
                    "MAPD_Q", "MAPD_W", "MAPD", "avg_fcap"}
_HIGHER_IS_BETTER = {"UA", "alt_split"}


class UsageError(Exception):
    pass


class NumericalFailure(Exception):
    pass


# ------------------------------------------------------------------ helpers
def _scenario(args) -> nm.Scenario:
    if args.scenario and args.builtin:
        raise UsageError("give either --scenario or --builtin, not both")
    if args.scenario:
        path = Path(args.scenario)
        if not path.is_file():
            raise UsageError(f"scenario file not found: {path}")
        return nm.load_scenario(path)
    if args.builtin:
        return nm.builtin(args.builtin)
    raise UsageError("a scenario is required (--scenario <path> or --builtin <name>)")


def _solver(args) -> eq.SolverConfig:
    try:
        return eq.SolverConfig(tol=args.tol, max_iter=args.max_iter, damping=args.damping)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _f(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _meta(path: Path, command: str) -> None:
    _write_json(path, {"command": command, "created": datetime.now(timezone.utc).isoformat(),
                       "tool_version": __version__})


def _path_table(s: nm.Scenario, res: eq.EquilibriumResult):
    tt = np.einsum("ka,ak->k", res.state.travel_time[s.path_mode, :], s.incidence)
    pax = res.pax_flows.sum(axis=0)
    unit = res.prices / s.path_lengths
    rows = []
    for k, p in enumerate(s.paths):
        rows.append([p.id, p.od, p.mode, f"{s.path_lengths[k]:g}", f"{pax[k]:.0f}",
                     f"{60 * tt[k]:.0f}", f"{res.prices[k]:.2f}", f"{unit[k]:.1f}"])
    return ["path", "od", "mode", "length_km", "flow_pax_h", "travel_time_min", "price_eur",
            "unit_price_eur_km"], rows


def _record(s: nm.Scenario, res: eq.EquilibriumResult, rep: mt.MetricsReport, base: mt.MetricsReport | None,
            *, command: str, scheme: str = "none", extra: dict | None = None) -> dict:
    doc = {
        "format": RECORD_FORMAT,
        "tool_version": __version__,
        "command": command,
        "scenario_id": s.name,
        "scenario": nm.dump_scenario(s),
        "scheme": scheme,
        "prices": {"path_ids": list(s.path_ids), "path_prices": [float(x) for x in res.prices]},
        "equilibrium": {
            "converged": res.converged,
            "iterations": res.iterations,
            "residual": res.residual,
            "link_flow_veh_h": [float(x) for x in res.flow],
            "path_flow_pax_h": [float(x) for x in res.pax_flows.sum(axis=0)],
        },
        "metrics": {k: _f(v) for k, v in rep.scalars().items()},
        "deltas": None if base is None else {k: _f(v) for k, v in mt.deltas(rep, base).items()},
        "warnings": list(rep.warnings),
    }
    if extra:
        doc.update(extra)
    return doc


def _metrics_rows(rep: mt.MetricsReport, base: mt.MetricsReport | None):
    d = mt.deltas(rep, base) if base is not None else {}
    rows = []
    for k, v in rep.scalars().items():
        rows.append([k, repr(float(v)), repr(float(d[k])) if k in d else ""])
    return ["metric", "value", "delta"], rows


def _load_record(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"record not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: not a run record ({exc})") from None
    if not isinstance(doc, dict) or "scenario" not in doc or "prices" not in doc:
        raise UsageError(f"{p}: not a run record")
    return doc


def _read_prices(path: str, s: nm.Scenario) -> np.ndarray:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"prices file not found: {p}")
    if p.suffix == ".json":
        doc = _load_record(path)
        ids, vals = doc["prices"]["path_ids"], doc["prices"]["path_prices"]
    else:
        with p.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or "path" not in rows[0]:
            raise UsageError(f"{p}: expected CSV columns 'path' and 'price_eur' or 'unit_price_eur_km'")
        ids = [r["path"] for r in rows]
        if "price_eur" in rows[0]:
            vals = [float(r["price_eur"]) for r in rows]
        else:
            vals = [float(r["unit_price_eur_km"]) * nm.path_length(s, r["path"]) for r in rows]
    out = np.zeros(len(s.paths))
    for i, v in zip(ids, vals):
        try:
            out[s.path_index[str(i)]] = float(v)
        except KeyError:
            raise UsageError(f"prices refer to unknown path {i!r}") from None
    return out


def _solve(s, prices, solver) -> eq.EquilibriumResult:
    return eq.solve_sue(s, prices, solver)


# ----------------------------------------------------------------- commands
def cmd_assign(args) -> int:
    s = _scenario(args)
    solver = _solver(args)
    prices = _read_prices(args.prices, s) if args.prices else None
    res = _solve(s, prices, solver)
    base = None
    if prices is not None and np.any(prices != 0):
        base = mt.report(s, _solve(s, None, solver))
    rep = mt.report(s, res)
    out = _out(args)
    _write_json(out / "record.json", _record(s, res, rep, base, command="assign"))
    _meta(out / "record.meta.json", "assign")
    _write_csv(out / "paths.csv", *_path_table(s, res))
    _write_csv(out / "metrics.csv", *_metrics_rows(rep, base))
    print(f"assign: {s.name} converged={res.converged} iterations={res.iterations} "
          f"residual={res.residual:.2e} avg_tt={rep.traffic.avg_tt_min:.2f} min/pax")
    return EXIT_OK if res.converged else EXIT_NUMERIC


def _problem_from_args(args, s: nm.Scenario, solver: eq.SolverConfig) -> pr.DesignProblem:
    weights = pr.objective_weights(args.objective)
    if args.revenue_neutral:
        bounds, b, dom = (-5.0, 5.0), args.b, True
    else:
        bounds, b, dom = (0.0, 5.0), math.inf, False
    if args.lb is not None or args.ub is not None:
        bounds = (args.lb if args.lb is not None else bounds[0], args.ub if args.ub is not None else bounds[1])
    modes = args.price_modes.split(",") if args.price_modes else None
    if modes:
        unknown = set(modes) - set(s.mode_ids)
        if unknown:
            raise UsageError(f"unknown mode(s) in --price-modes: {', '.join(sorted(unknown))}")
    mask = pr.trip_mask(s, modes) if args.scheme == "trip" else pr.road_mask(s, modes)
    return pr.DesignProblem(s, args.scheme, weights, bounds, mask, b, dom, solver)


def cmd_design(args) -> int:
    s = _scenario(args)
    solver = _solver(args)
    problem = _problem_from_args(args, s, solver)
    if not problem.baseline.converged:
        raise NumericalFailure("baseline equilibrium did not converge")
    cfg = op.OptimizerConfig(pop=args.pop, gens=args.gens, restarts=args.restarts, polish=args.polish,
                             seed=args.seed, max_evals=args.max_evals)
    inject = []
    if args.warm_start:
        doc = _load_record(args.warm_start)
        if nm.load_scenario(doc["scenario"]) != s:
            raise UsageError("warm-start record comes from a different scenario")
        if args.scheme != "trip":
            raise UsageError("--warm-start applies to trip designs")
        pv = pr.PriceVector("road", np.asarray(doc["prices"]["path_prices"], dtype=float),
                            np.zeros(0))
        try:
            inject.append(op.road_to_trip_start(problem, pv))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    result = op.design(problem, cfg, inject)
    ev = result.evaluation
    res = ev.result
    rep = ev.report
    out = _out(args)
    extra = {
        "objective": args.objective,
        "weights": list(problem.weights),
        "bounds": list(problem.bounds),
        "b": _f(problem.b),
        "toll_dominance": problem.toll_dominance,
        "mask": [bool(x) for x in problem.mask],
        "unit_prices": [float(x) for x in result.prices.unit_prices],
        "objective_value": _f(result.value),
        "components": {k: _f(v) for k, v in ev.components.items()},
        "feasible": result.feasible,
        "revenue": {k: _f(v) for k, v in asdict(ev.feasibility).items()},
        "seed": cfg.seed,
        "solver": asdict(solver),
        "optimizer": asdict(cfg),
        "evaluations": result.evaluations,
        "notes": result.notes,
    }
    _write_json(out / "record.json",
                _record(s, res, rep, problem.baseline_report, command="design", scheme=args.scheme, extra=extra))
    _meta(out / "record.meta.json", "design")
    _write_csv(out / "paths.csv", *_path_table(s, res))
    _write_csv(out / "metrics.csv", *_metrics_rows(rep, problem.baseline_report))
    _write_csv(out / "trace.csv", ["restart", "generation", "best", "mean", "feasible_fraction", "evaluations"],
               [[t.restart, t.generation, repr(t.best), repr(t.mean), repr(t.feasible_fraction), t.evaluations]
                for t in result.trace])
    comps = " ".join(f"d{k}={v:+.1%}" for k, v in ev.components.items())
    print(f"design: {s.name} {args.scheme}/{args.objective} objective={result.value:.4f} "
          f"feasible={result.feasible} {comps}")
    return EXIT_OK if result.feasible else EXIT_NUMERIC


def _replay(doc: dict, solver: eq.SolverConfig):
    s = nm.load_scenario(doc["scenario"])
    prices = np.asarray(doc["prices"]["path_prices"], dtype=float)
    if prices.shape != (len(s.paths),):
        raise UsageError("record prices do not match its scenario")
    res = eq.solve_sue(s, prices, solver)
    return s, res, mt.report(s, res)


def cmd_evaluate(args) -> int:
    solver = _solver(args)
    priced_doc = _load_record(args.priced)
    s, res, rep = _replay(priced_doc, solver)
    base = None
    if args.baseline:
        base_doc = _load_record(args.baseline)
        if nm.load_scenario(base_doc["scenario"]) != s:
            raise UsageError("baseline and priced records come from different scenarios")
        _, bres, base = _replay(base_doc, solver)
        if not bres.converged:
            raise NumericalFailure("baseline equilibrium did not converge")
    out = _out(args)
    _write_json(out / "record.json", _record(s, res, rep, base, command="evaluate",
                                             scheme=priced_doc.get("scheme", "none")))
    _meta(out / "record.meta.json", "evaluate")
    _write_csv(out / "metrics.csv", *_metrics_rows(rep, base))
    print(f"evaluate: {s.name} converged={res.converged} avg_tt={rep.traffic.avg_tt_min:.2f} min/pax")
    return EXIT_OK if res.converged else EXIT_NUMERIC


def _annotate(key: str, d: float) -> str:
    if d is None or d == 0 or key not in _LOWER_IS_BETTER | _HIGHER_IS_BETTER:
        return ""
    good = (d < 0) if key in _LOWER_IS_BETTER else (d > 0)
    return " (+)" if good else " (-)"


def cmd_compare(args) -> int:
    docs = [_load_record(p) for p in args.records]
    scen = [nm.load_scenario(d["scenario"]) for d in docs]
    if any(x != scen[0] for x in scen[1:]):
        raise UsageError("records come from different scenarios")
    ref_i = args.reference
    if not 0 <= ref_i < len(docs):
        raise UsageError("--reference index out of range")
    ref = docs[ref_i]["metrics"]
    names = [Path(p).parent.name or Path(p).stem for p in args.records]
    header = ["metric"] + [f"{n}" for n in names]
    rows = []
    for key in ref:
        row = [key]
        for i, d in enumerate(docs):
            v = d["metrics"].get(key)
            if v is None:
                row.append("")
                continue
            if i == ref_i:
                row.append(f"{v:.6g}")
            else:
                dd = mt.delta(v, ref[key]) if ref[key] is not None else None
                row.append(f"{v:.6g} [{dd:+.0%}]{_annotate(key, dd)}" if dd is not None and math.isfinite(dd)
                           else f"{v:.6g}")
        rows.append(row)
    out = _out(args)
    _write_csv(out / "compare.csv", header, rows)
    print(f"compare: {len(docs)} records, reference {names[ref_i]}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    s = _scenario(args)
    solver = _solver(args)
    try:
        d = eq.calibrate_demand(s, args.target, mode=args.mode, tol=args.cal_tol, config=solver)
    except eq.CalibrationError as exc:
        raise NumericalFailure(str(exc)) from None
    cal = s.with_demand(d)
    out = _out(args)
    nm.save_scenario(cal, out / "scenario.toml")
    res = eq.solve_sue(cal, None, solver)
    rep = mt.report(cal, res)
    _write_json(out / "calibration.json", {
        "scenario_id": s.name,
        "target": args.target,
        "mode": args.mode,
        "demand": d,
        "alt_split": rep.alt_split,
        "mode_pax": {w: float(x) for w, x in zip(cal.od_ids, eq.car_pax_by_od(cal, res, args.mode))},
    })
    _meta(out / "calibration.meta.json", "calibrate")
    print("calibrate: " + " ".join(f"{w}={v:.1f}" for w, v in d.items()) + f" alt_split={rep.alt_split:.1%}")
    return EXIT_OK


def cmd_classical(args) -> int:
    if args.instance:
        try:
            inst = cl.load_instance(args.instance)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    else:
        inst = cl.linear_instance()
    ue, so = cl.solve_due(inst), cl.solve_so(inst)
    msc = cl.msc_tolls(inst)
    doc = {"ue": ue.tolist(), "so": so.tolist(), "msc_tolls": msc.tolist(),
           "total_cost_ue": inst.total_cost(ue), "total_cost_so": inst.total_cost(so)}
    try:
        alt = cl.alternative_valid_tolls(inst, args.revenue)
        doc["alternative"] = {"tolls": alt.tolls.tolist(), "revenue": alt.revenue,
                              "tolled_costs": list(alt.tolled_costs), "ue_cost": alt.ue_cost,
                              "pareto_improving": alt.pareto_improving}
    except ValueError as exc:
        doc["alternative"] = {"error": str(exc)}
    out = _out(args)
    _write_json(out / "classical.json", doc)
    print(f"UE flows:  {ue[0]:.2f} {ue[1]:.2f}")
    print(f"SO flows:  {so[0]:.2f} {so[1]:.2f}")
    print(f"MSC tolls: {msc[0]:.4f} {msc[1]:.4f}")
    if "tolls" in doc["alternative"]:
        a = doc["alternative"]
        print(f"valid tolls at revenue {args.revenue:g}: {a['tolls'][0]:.4f} {a['tolls'][1]:.4f} "
              f"(tolled cost {a['tolled_costs'][0]:.4f} vs UE {a['ue_cost']:.4f})")
    else:
        print(f"valid tolls: {doc['alternative']['error']}")
    return EXIT_OK


# ------------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--tol", type=float, default=1e-6, help="SUE relative gap tolerance")
    common.add_argument("--max-iter", type=int, default=5000, help="SUE iteration cap")
    common.add_argument("--damping", default="adaptive:0.5", help="msa | fixed:<l> | adaptive:<l>")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    scen = argparse.ArgumentParser(add_help=False)
    scen.add_argument("--scenario", help="scenario TOML file")
    scen.add_argument("--builtin", help=f"built-in scenario: {', '.join(nm.BUILTINS)}")

    p = argparse.ArgumentParser(prog="trippricing", description="Trip and road pricing design under SUE.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("assign", parents=[common, scen], help="solve the equilibrium for given prices")
    a.add_argument("--prices", help="CSV (path, price_eur | unit_price_eur_km) or run record JSON")
    a.set_defaults(func=cmd_assign)

    d = sub.add_parser("design", parents=[common, scen], help="optimize prices")
    d.add_argument("--scheme", choices=["trip", "road"], required=True)
    d.add_argument("--objective", choices=list(pr.OBJECTIVES), default="eff")
    d.add_argument("--revenue-neutral", action="store_true", help="bounds [-5,5] EUR/km with revenue cap")
    d.add_argument("--b", type=float, default=1000.0, help="net revenue cap in EUR/h (revenue-neutral)")
    d.add_argument("--lb", type=float, help="override lower unit-price bound")
    d.add_argument("--ub", type=float, help="override upper unit-price bound")
    d.add_argument("--price-modes", help="comma-separated priceable modes (second-best), default all")
    d.add_argument("--pop", type=int, default=60)
    d.add_argument("--gens", type=int, default=250)
    d.add_argument("--restarts", type=int, default=3)
    d.add_argument("--polish", type=int, default=500)
    d.add_argument("--max-evals", type=int)
    d.add_argument("--warm-start", help="road-pricing run record injected into a trip design")
    d.set_defaults(func=cmd_design)

    e = sub.add_parser("evaluate", parents=[common], help="re-evaluate run records")
    e.add_argument("--priced", required=True, help="run record to evaluate")
    e.add_argument("--baseline", help="run record used as reference for deltas")
    e.set_defaults(func=cmd_evaluate)

    c = sub.add_parser("compare", parents=[common], help="comparison matrix of run records")
    c.add_argument("records", nargs="+")
    c.add_argument("--reference", type=int, default=0, help="index of the reference record")
    c.set_defaults(func=cmd_compare)

    k = sub.add_parser("calibrate", parents=[common, scen], help="calibrate OD demand to a target mode flow")
    k.add_argument("--target", type=float, default=2000.0, help="target pax/h per OD")
    k.add_argument("--mode", default="car")
    k.add_argument("--cal-tol", type=float, default=0.005)
    k.set_defaults(func=cmd_calibrate)

    q = sub.add_parser("classical", parents=[common], help="two-path UE / SO / MSC analysis")
    q.add_argument("--instance", help="TOML instance with [path1], [path2] and demand")
    q.add_argument("--revenue", type=float, default=0.0, help="revenue target for the valid-toll pair")
    q.set_defaults(func=cmd_classical)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except nm.ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
