"""Seeded Monte Carlo sweeps over the SINR target or the number of receivers.

Every trial index ``t`` draws its channel from ``trial_seed(base_seed, t)``
at each axis point, and receivers have independent streams, so a trial sees
the same desired channel along the whole sweep (and the same first idle
receivers when ``K`` grows). Feasible sets are then nested along both axes,
which is what makes the "common" averages below well defined: they are taken
over trials that are feasible for every scheme at every axis point.

Averages of powers are taken in watts and converted to dBm afterwards.
"""
from __future__ import annotations

import csv
import io as _io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .certify import check_proposition1
from .channel import ChannelConfig, draw_channel, trial_seed
from .model import SolutionStatus, SystemParams, secrecy_capacity, total_harvested_power, watt_to_dbm
from .schemes import SCHEMES, solve_baseline, solve_scheme2

__all__ = [
    "AXES",
    "ExperimentConfig",
    "TrialRecord",
    "TRIAL_COLUMNS",
    "TIMING_COLUMNS",
    "AGGREGATE_COLUMNS",
    "TrialResult",
    "make_record",
    "solve_trial",
    "run_trial",
    "run_sweep",
    "aggregate",
    "emit_csv",
    "emit_aggregate_csv",
    "emit_figures",
    "default_experiments",
]

AXES = ("gamma_req_db", "k_receivers")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep.

    ``params`` holds keyword arguments for :meth:`SystemParams.paper_defaults`
    (``n_t``, ``k_receivers``, ``gamma_req_db`` and any field override);
    the swept quantity is replaced at each grid point.
    """

    axis: str = "gamma_req_db"
    grid: tuple = (0.0, 3.0, 6.0, 9.0, 12.0)
    trials: int = 100
    base_seed: int = 0
    schemes: tuple = SCHEMES
    params: dict = field(default_factory=dict)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    tol: float = 1e-8
    workers: int = 1

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}")
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not self.grid:
            raise ValueError("grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        bad = [s for s in self.schemes if s not in SCHEMES]
        if bad or not self.schemes:
            raise ValueError(f"unknown schemes {bad}; choose from {SCHEMES}")
        if self.axis == "k_receivers" and any(int(k) != k or k < 2 for k in self.grid):
            raise ValueError("k_receivers grid must hold integers >= 2")
        self.params_at(self.grid[0])  # validate overrides early

    def params_at(self, value) -> SystemParams:
        kw = dict(self.params)
        if self.axis == "gamma_req_db":
            kw["gamma_req_db"] = float(value)
        else:
            kw["k_receivers"] = int(value)
        return SystemParams.paper_defaults(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        d["schemes"] = list(self.schemes)
        d["channel"] = self.channel.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        unknown = set(d) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "channel" in d:
            d["channel"] = ChannelConfig.from_dict(d["channel"])
        return cls(**d)


def default_experiments(trials: int = 100, base_seed: int = 0) -> list:
    """The SINR sweep (transmit power, secrecy, harvesting) and the receiver-count sweep."""
    return [
        ExperimentConfig("gamma_req_db", (0.0, 3.0, 6.0, 9.0, 12.0), trials, base_seed),
        ExperimentConfig("k_receivers", (2, 4, 6, 8), trials, base_seed,
                         params={"gamma_req_db": 9.0}),
    ]


@dataclass
class TrialRecord:
    seed: int
    trial: int
    axis: str
    value: float
    scheme: str
    status: str
    tx_power_dbm: Optional[float]
    secrecy_capacity_bps_hz: Optional[float]
    total_harvested_dbm: Optional[float]
    rank_one: Optional[bool]
    prop1_condition: Optional[bool]
    solve_ms: float
    tx_power_w: Optional[float] = None
    total_harvested_w: Optional[float] = None
    rho: Optional[float] = None
    rank_ratio: Optional[float] = None
    provenance: Optional[str] = None

    @property
    def feasible(self) -> bool:
        return self.status in (SolutionStatus.OPTIMAL.value, SolutionStatus.RANK_DEFICIENT.value)


# wall-clock timings would make reruns differ, so they get their own file
TRIAL_COLUMNS = tuple(c for c in TrialRecord.__dataclass_fields__ if c != "solve_ms")
TIMING_COLUMNS = ("seed", "trial", "value", "scheme", "solve_ms")


def make_record(seed, trial, axis, value, scheme, params, chan, sol, ms, cert=None, prov=None
                ) -> TrialRecord:
    """Metrics of one scheme's solution on one draw."""
    rec = TrialRecord(seed, trial, axis, float(value), scheme, sol.status.value, None, None, None,
                      None, None, ms, provenance=prov)
    if sol.has_point:
        p = sol.objective
        hv = total_harvested_power(params, chan, sol)
        rec.tx_power_w, rec.total_harvested_w = p, hv
        rec.tx_power_dbm = float(watt_to_dbm(p))
        rec.total_harvested_dbm = float(watt_to_dbm(hv))
        rec.secrecy_capacity_bps_hz = secrecy_capacity(params, chan, sol)
        rec.rank_one = sol.status is SolutionStatus.OPTIMAL
        rec.rho, rec.rank_ratio = sol.rho, sol.rank_ratio
        if cert is not None:
            rec.prop1_condition = check_proposition1(cert, sol)["condition_holds"]
    return rec


@dataclass
class TrialResult:
    """Solutions of every requested scheme on one channel draw.

    ``runs[name]`` is ``(solution, solve_ms, certificate, provenance)``.
    """

    seed: int
    trial: int
    value: float
    params: SystemParams
    chan: object
    runs: dict


def solve_trial(cfg: ExperimentConfig, value, trial: int) -> TrialResult:
    """Draw the channel for ``trial`` and run the requested schemes on it."""
    params = cfg.params_at(value)
    seed = trial_seed(cfg.base_seed, trial)
    chan = draw_channel(params, cfg.channel, seed)
    runs = {}
    want = set(cfg.schemes)
    if want & {"relaxed", "sub1", "scheme2"}:
        t0 = time.perf_counter()
        s2 = solve_scheme2(params, chan, cfg.tol)
        ms = 1e3 * (time.perf_counter() - t0)
        prov = s2.provenance.value if s2.provenance else None
        runs["relaxed"] = (s2.relaxed, s2.relaxed.info.get("solve_ms", 0.0), s2.certificate, None)
        runs["sub1"] = (s2.sub1, s2.sub1.info.get("solve_ms", 0.0), None, None)
        cert = s2.certificate if prov == "GlobalOptimal" else None
        runs["scheme2"] = (s2.solution, ms, cert, prov)
    for which in (1, 2):
        name = f"baseline{which}"
        if name in want:
            t0 = time.perf_counter()
            sol = solve_baseline(params, chan, which, cfg.tol)
            runs[name] = (sol, 1e3 * (time.perf_counter() - t0), None, None)
    return TrialResult(seed, trial, float(value), params, chan,
                       {s: runs[s] for s in cfg.schemes})


def run_trial(cfg: ExperimentConfig, value, trial: int) -> list:
    """All requested schemes on one channel draw, as records."""
    tr = solve_trial(cfg, value, trial)
    return [make_record(tr.seed, trial, cfg.axis, value, name, tr.params, tr.chan, sol, ms, cert, prov)
            for name, (sol, ms, cert, prov) in tr.runs.items()]


def _job(args):
    cfg, value, trial = args
    return run_trial(cfg, value, trial)


def run_sweep(cfg: ExperimentConfig, progress=None):
    """Run every (axis value, trial) pair.

    Returns
    -------
    records : list of TrialRecord
        Ordered by axis value, trial, then scheme, independent of ``workers``.
    table : list of dict
        :func:`aggregate` of the records.
    """
    jobs = [(cfg, v, t) for v in cfg.grid for t in range(cfg.trials)]
    records = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            for i, recs in enumerate(ex.map(_job, jobs, chunksize=4)):
                records.extend(recs)
                if progress:
                    progress(i + 1, len(jobs))
    else:
        for i, job in enumerate(jobs):
            records.extend(_job(job))
            if progress:
                progress(i + 1, len(jobs))
    return records, aggregate(records, cfg)


def _mean(xs):
    return math.fsum(xs) / len(xs) if xs else None


def common_trials(records, schemes=None) -> set:
    """Trial indices feasible for every scheme at every axis value."""
    by_trial = {}
    for r in records:
        if schemes is not None and r.scheme not in schemes:
            continue
        by_trial.setdefault(r.trial, []).append(r.feasible)
    return {t for t, ok in by_trial.items() if all(ok)}


AGGREGATE_COLUMNS = (
    "axis", "value", "scheme", "trials", "feasible", "feasibility_rate",
    "mean_tx_power_dbm", "mean_secrecy_capacity_bps_hz", "mean_total_harvested_dbm",
    "common_trials", "common_tx_power_dbm", "common_secrecy_capacity_bps_hz",
    "common_total_harvested_dbm", "rank_one_rate",
)


def aggregate(records, cfg: Optional[ExperimentConfig] = None) -> list:
    """Per (axis value, scheme) averages.

    ``mean_*`` average the trials feasible for that scheme at that point;
    ``common_*`` average the trials feasible everywhere (see
    :func:`common_trials`). An all-infeasible point has empty means.
    """
    common = common_trials(records)
    groups = {}
    for r in records:
        groups.setdefault((r.value, r.scheme), []).append(r)
    order = []
    if cfg is not None:
        order = [(float(v), s) for v in cfg.grid for s in cfg.schemes]
    else:
        order = sorted(groups, key=lambda k: (k[0], SCHEMES.index(k[1]) if k[1] in SCHEMES else 99))
    table = []
    for key in order:
        rs = groups.get(key, [])
        feas = [r for r in rs if r.feasible]
        com = [r for r in feas if r.trial in common]

        def dbm(xs):
            m = _mean(xs)
            return float(watt_to_dbm(m)) if m is not None and m > 0 else None

        table.append({
            "axis": rs[0].axis if rs else (cfg.axis if cfg else ""),
            "value": key[0],
            "scheme": key[1],
            "trials": len(rs),
            "feasible": len(feas),
            "feasibility_rate": len(feas) / len(rs) if rs else None,
            "mean_tx_power_dbm": dbm([r.tx_power_w for r in feas]),
            "mean_secrecy_capacity_bps_hz": _mean([r.secrecy_capacity_bps_hz for r in feas]),
            "mean_total_harvested_dbm": dbm([r.total_harvested_w for r in feas]),
            "common_trials": len(com),
            "common_tx_power_dbm": dbm([r.tx_power_w for r in com]),
            "common_secrecy_capacity_bps_hz": _mean([r.secrecy_capacity_bps_hz for r in com]),
            "common_total_harvested_dbm": dbm([r.total_harvested_w for r in com]),
            "rank_one_rate": _mean([1.0 if r.rank_one else 0.0 for r in feas]),
        })
    return table


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool) or isinstance(v, np.bool_):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else f"{float(v):.6g}"
    return str(v)


def _write_rows(path, columns, rows):
    path = Path(path)
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    try:
        path.write_text(buf.getvalue(), newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def emit_csv(records, path, timing: bool = False):
    """One row per trial record, columns in ``TRIAL_COLUMNS`` order.

    With ``timing=True`` the file instead holds ``TIMING_COLUMNS``.
    """
    cols = TIMING_COLUMNS if timing else TRIAL_COLUMNS
    return _write_rows(path, cols, [asdict(r) for r in records])


def emit_aggregate_csv(table, path):
    return _write_rows(path, AGGREGATE_COLUMNS, table)


_FIGURES = {
    "gamma_req_db": (("fig2.csv", "tx_power_dbm"), ("fig3.csv", "secrecy_capacity_bps_hz"),
                     ("fig4.csv", "total_harvested_dbm")),
    "k_receivers": (("fig5.csv", "tx_power_dbm"),),
}


def emit_figures(table, axis: str, out_dir) -> list:
    """Figure-shaped CSVs: one row per (axis value, scheme) for one metric."""
    out = []
    for fname, metric in _FIGURES[axis]:
        cols = (axis, "scheme", "feasible", "feasibility_rate", "mean", "common_trials", "common_mean")
        rows = [{axis: r["value"], "scheme": r["scheme"], "feasible": r["feasible"],
                 "feasibility_rate": r["feasibility_rate"], "mean": r[f"mean_{metric}"],
                 "common_trials": r["common_trials"], "common_mean": r[f"common_{metric}"]}
                for r in table]
        out.append(_write_rows(Path(out_dir) / fname, cols, rows))
    return out
