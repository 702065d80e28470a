"""Command-line entry point: ``secure-swipt {solve,sweep,certify,oracle}``.

Exit codes: 0 success, 1 usage error, 2 infeasible, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .certify import certify, recover_duals
from .channel import ChannelConfig, draw_channel
from .io import (instance_from_dict, instance_to_dict, load_json, save_json, solution_from_dict,
                 solution_to_dict)
from .model import SolutionStatus, SystemParams, check_feasibility, secrecy_capacity, watt_to_dbm
from .problems import build_relaxed
from .schemes import SCHEMES, RankInvariantError, solve_baseline, solve_encoding, solve_scheme2

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _exit_for(status: SolutionStatus) -> int:
    if status is SolutionStatus.INFEASIBLE:
        return EXIT_INFEASIBLE
    if status is SolutionStatus.NUMERICAL_FAILURE:
        return EXIT_NUMERICAL
    return EXIT_OK


def _load(path, what):
    try:
        return load_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load {what}: {exc}") from exc


def _instance(args, **defaults):
    """Instance from ``--instance``, else a seeded draw under ``--config``."""
    if getattr(args, "instance", None):
        try:
            return instance_from_dict(_load(args.instance, "instance"))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed instance file: {exc}") from exc
    cfg = _load(args.config, "config") if args.config else {}
    try:
        kw = dict(defaults)
        kw.update(cfg.get("params", {}))
        params = SystemParams.paper_defaults(**kw)
        chan_cfg = ChannelConfig.from_dict(cfg["channel"]) if "channel" in cfg else ChannelConfig()
    except (TypeError, ValueError, AttributeError) as exc:
        raise UsageError(f"malformed config: {exc}") from exc
    return params, draw_channel(params, chan_cfg, args.seed)


def _summary(params, chan, sol) -> list:
    lines = [f"scheme      {sol.scheme}", f"status      {sol.status.value}"]
    if sol.has_point:
        lines += [
            f"tx power    {sol.objective:.6g} W ({float(watt_to_dbm(sol.objective)):.4f} dBm)",
            f"rho         {sol.rho:.6g}",
            f"rank ratio  {sol.rank_ratio:.3e}",
            f"secrecy     {secrecy_capacity(params, chan, sol):.6g} bit/s/Hz",
            f"feasible    {check_feasibility(params, chan, sol).feasible}",
        ]
    if "provenance" in sol.info:
        lines.append(f"provenance  {sol.info['provenance']}")
    return lines


def _cert_lines(report) -> list:
    r = report["residuals"]
    p1 = report["proposition1"]
    rs = report["rho_star"]
    return [
        "certificate",
        f"  stationarity W/V  {r['stationarity_W']:.3e} / {r['stationarity_V']:.3e}",
        f"  complementarity   {r['complementarity']:.3e}",
        f"  dual feasibility  {r['dual_feasibility']:.3e}",
        f"  duality gap       {r['gap']:.3e}",
        f"  beta >= delta     {p1['condition_holds']} (rank one: {p1['rank_one']})",
        f"  rho* from duals   {'undefined' if rs is None else format(rs, '.6g')}",
    ]


def cmd_solve(args) -> int:
    params, chan = _instance(args)
    cert = None
    if args.scheme in ("relaxed", "sub1", "scheme2"):
        s2 = solve_scheme2(params, chan, args.tol)
        sol = {"relaxed": s2.relaxed, "sub1": s2.sub1, "scheme2": s2.solution}[args.scheme]
        if args.scheme == "relaxed" or (args.scheme == "scheme2" and s2.provenance
                                        and s2.provenance.value == "GlobalOptimal"):
            cert = s2.certificate
    else:
        sol = solve_baseline(params, chan, int(args.scheme[-1]), args.tol)
    print("\n".join(_summary(params, chan, sol)))
    report = None
    if cert is not None:
        report = certify(params, chan, sol, cert)
        print("\n".join(_cert_lines(report)))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_json(instance_to_dict(params, chan), out / "instance.json")
        save_json(solution_to_dict(sol), out / "solution.json")
        if report is not None:
            save_json(_jsonable(report), out / "certificate.json")
    return _exit_for(sol.status)


def _experiments(args) -> list:
    if not args.config:
        exps = harness.default_experiments(args.trials or 100, args.seed)
    else:
        raw = _load(args.config, "config")
        items = raw.get("experiments", [raw]) if isinstance(raw, dict) else raw
        try:
            exps = [harness.ExperimentConfig.from_dict(d) for d in items]
        except (TypeError, ValueError, AttributeError) as exc:
            raise UsageError(f"malformed config: {exc}") from exc
    over = {}
    if args.trials:
        over["trials"] = args.trials
    if args.workers:
        over["workers"] = args.workers
    if args.seed is not None and args.config:
        over["base_seed"] = args.seed
    if args.tol != 1e-8:
        over["tol"] = args.tol
    if args.scheme:
        over["schemes"] = tuple(args.scheme.split(","))
    if over:
        try:
            exps = [harness.ExperimentConfig.from_dict({**e.to_dict(), **over}) for e in exps]
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return exps


def cmd_sweep(args) -> int:
    exps = _experiments(args)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for cfg in exps:
        def progress(i, n, axis=cfg.axis):
            if args.verbose and (i == n or i % 50 == 0):
                print(f"  {axis}: {i}/{n}", file=sys.stderr)

        records, table = harness.run_sweep(cfg, progress)
        harness.emit_csv(records, out / f"trials_{cfg.axis}.csv")
        harness.emit_csv(records, out / f"timing_{cfg.axis}.csv", timing=True)
        harness.emit_aggregate_csv(table, out / f"aggregate_{cfg.axis}.csv")
        files = harness.emit_figures(table, cfg.axis, out)
        print(f"{cfg.axis}: {len(records)} records -> {', '.join(p.name for p in files)}")
        for row in table:
            tx = row["common_tx_power_dbm"]
            print(f"  {row['value']:>6g} {row['scheme']:<10} feasible {row['feasible']:>4}/{row['trials']}"
                  f"  common tx {'-' if tx is None else format(tx, '.3f')} dBm")
    return EXIT_OK


def cmd_certify(args) -> int:
    params, chan = _instance(args)
    try:
        sol = solution_from_dict(_load(args.solution, "solution"))
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed solution file: {exc}") from exc
    if sol.W.shape != (params.n_t, params.n_t):
        raise UsageError("solution size does not match the instance")
    enc = build_relaxed(params, chan)
    ref, raw = solve_encoding(enc, args.tol)
    feas = check_feasibility(params, chan, sol, args.tol_feas)
    lines = [f"feasible          {feas.feasible}" + (f" (violated: {', '.join(feas.violated())})"
                                                      if not feas.feasible else "")]
    report = {"feasibility": feas.slacks, "feasible": feas.feasible}
    code = EXIT_OK
    if not ref.has_point:
        lines.append(f"reference solve   {ref.status.value}")
        code = _exit_for(ref.status)
    else:
        rel_gap = (sol.objective - ref.objective) / ref.objective
        lines.append(f"objective         {sol.objective:.9g} W (relaxed optimum {ref.objective:.9g} W, "
                     f"excess {rel_gap:.3e})")
        report.update({"objective": sol.objective, "relaxed_optimum": ref.objective,
                       "relative_excess": rel_gap})
        # multipliers of the reference solve certify any point with matching KKT residuals
        cert = recover_duals(enc, raw, chan)
        rep = certify(params, chan, sol, cert)
        lines += _cert_lines(rep)
        report["certificate"] = rep
    print("\n".join(lines))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_json(_jsonable(report), out / "certificate.json")
    return code


def cmd_oracle(args) -> int:
    from .oracle import brute_force

    params, chan = _instance(args, n_t=2, k_receivers=2)
    if params.n_t > 2 or params.k_receivers != 2:
        raise UsageError("the brute-force oracle needs N_t <= 2 and K = 2")
    s2 = solve_scheme2(params, chan, args.tol)
    rel = s2.relaxed
    print(f"relaxed SDP   {rel.status.value}" + (f"  {rel.objective:.9g} W" if rel.has_point else ""))
    if not rel.has_point:
        return _exit_for(rel.status)
    grid = brute_force(params, chan)
    gap = grid.objective / rel.objective - 1.0
    print(f"grid search   {grid.objective:.9g} W  ({grid.evaluations} points)")
    print(f"gap           {gap:+.4%}")
    return EXIT_OK


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="secure-swipt", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, scheme_default=None):
        sp.add_argument("--seed", type=int, default=0, help="channel seed (sweep: base seed)")
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--tol", type=float, default=1e-8, help="solver tolerance")
        sp.add_argument("--scheme", default=scheme_default,
                        help=f"one of {', '.join(SCHEMES)}" + (" (sweep: comma list)" if not scheme_default else ""))

    sp = sub.add_parser("solve", help="solve one instance")
    common(sp, "scheme2")
    sp.add_argument("--instance", help="instance JSON (overrides --seed/--config)")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("sweep", help="Monte Carlo sweep to CSV")
    common(sp)
    sp.add_argument("--trials", type=int, help="trials per axis point")
    sp.add_argument("--workers", type=int, help="worker processes")
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("certify", help="check a solution against an instance")
    common(sp)
    sp.add_argument("--instance", help="instance JSON")
    sp.add_argument("--solution", required=True, help="solution JSON")
    sp.add_argument("--tol-feas", type=float, default=1e-7, help="feasibility slack tolerance")
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("oracle", help="compare the SDP with brute force (N_t = 2, K = 2)")
    common(sp)
    sp.add_argument("--instance", help="instance JSON")
    sp.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "scheme", None) and args.command in ("solve",) and args.scheme not in SCHEMES:
        parser.error(f"unknown scheme {args.scheme!r}")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"secure-swipt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RankInvariantError as exc:
        print(f"secure-swipt: invariant violated: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
