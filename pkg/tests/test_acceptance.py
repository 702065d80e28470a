"""Acceptance criteria 1-11 at their stated tolerances.

Each test appends one PASS/FAIL line to ``conftest.ACCEPTANCE`` (shown in the
terminal summary) and prints it. "N seeded instances" are the draws
``trial_seed(0, t)``, ``t = 0..N-1``, at the default parameters; infeasible
draws count as instances and the properties are checked on the feasible
ones. Criteria that compare against an oracle or a closed form need
optimal instances, so they keep drawing until enough are found.
"""
import math
import time

import numpy as np
import pytest

from secure_swipt.certify import active_set, check_proposition1, kkt_residuals, rho_star_formula
from secure_swipt.channel import ChannelConfig, draw_channel, trial_seed
from secure_swipt.harness import (
    SCHEMES, common_trials, default_experiments, make_record, solve_trial,
)
from secure_swipt.model import (
    SolutionStatus, SystemParams, check_feasibility, eavesdropper_sinr_bound, secrecy_capacity,
    secrecy_floor,
)
from secure_swipt.oracle import brute_force, golden_section_rho
from secure_swipt.schemes import solve_relaxed, solve_scheme2

from conftest import ACCEPTANCE

pytestmark = pytest.mark.acceptance

START = time.perf_counter()
DURATIONS = {}


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def draws(params, count, base=0):
    for t in range(count):
        yield t, draw_channel(params, ChannelConfig(), trial_seed(base, t))


@pytest.fixture(scope="module")
def defaults():
    return SystemParams.paper_defaults()


@pytest.fixture(scope="module")
def five_hundred(defaults):
    """scheme2 (relaxed + Sub1) on the first 500 seeded draws; also times the first 200."""
    out = []
    t0 = time.perf_counter()
    t200 = None
    for t, chan in draws(defaults, 500):
        out.append((chan, solve_scheme2(defaults, chan)))
        if t == 199:
            t200 = time.perf_counter() - t0
    DURATIONS["shared_500"] = time.perf_counter() - t0
    return out, t200


def test_c01_ordering_chain(five_hundred):
    t_start = time.perf_counter()
    results, t200 = five_hundred
    bad, feasible = [], 0
    for i, (_, r) in enumerate(results[:200]):
        rel, s2, s1 = r.relaxed.objective, r.solution.objective, r.sub1.objective
        if r.relaxed.has_point:
            feasible += 1
        ok = rel <= s2 * (1 + 1e-5) and s2 <= s1 * (1 + 1e-5)
        if not ok:
            bad.append(i)
    elapsed = t200 + (time.perf_counter() - t_start)
    ok = not bad and elapsed < 120
    assert report(1, ok, f"200 instances ({feasible} feasible), {len(bad)} ordering violations, "
                         f"{elapsed:.1f} s (< 120 s)"), bad


def test_c02_sub1_rank_one(five_hundred):
    results, _ = five_hundred
    optimal = [r.sub1 for _, r in results if r.sub1.has_point]
    worst = max((s.rank_ratio for s in optimal), default=0.0)
    bad = [s for s in optimal if not s.rank_ratio <= 1e-6]
    ok = not bad and all(s.status is SolutionStatus.OPTIMAL for s in optimal)
    assert report(2, ok, f"500 Sub1 solves, {len(optimal)} optimal, worst rank ratio {worst:.2e} "
                         f"(<= 1e-6)")


def test_c03_proposition1(five_hundred):
    results, _ = five_hundred
    n_cond = n_remark = violations = solved = 0
    for _, r in results:
        if r.certificate is None:
            continue
        solved += 1
        p1 = check_proposition1(r.certificate, r.relaxed)
        n_cond += p1["condition_holds"]
        n_remark += p1["remark1_case"]
        violations += not p1["consistent"]
    ok = violations == 0
    assert report(3, ok, f"500 relaxed solves ({solved} optimal): condition held {n_cond}, "
                         f"Remark-1 cases {n_remark}, violations {violations}")


def test_c04_kkt(five_hundred, defaults):
    results, _ = five_hundred
    worst = {"stationarity_W": 0.0, "stationarity_V": 0.0, "complementarity": 0.0, "gap": 0.0}
    n = fails = 0
    for chan, r in results:
        if r.certificate is None:
            continue
        n += 1
        res = kkt_residuals(defaults, chan, r.relaxed, r.certificate)
        for k in worst:
            worst[k] = max(worst[k], res[k])
        gap_abs = abs(r.relaxed.objective - res["dual_objective"])
        if (max(res["stationarity_W"], res["stationarity_V"], res["complementarity"]) > 1e-6
                or gap_abs > 1e-6 * (1 + abs(r.relaxed.objective))):
            fails += 1
    ok = fails == 0 and n > 0
    assert report(4, ok, f"{n} certificates, worst " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
                  + f", {fails} failures")


def test_c05_oracle():
    params = SystemParams.paper_defaults(n_t=2, k_receivers=2)
    gaps, below, draws_used = [], 0, 0
    for t, chan in draws(params, 2000):
        draws_used = t + 1
        rel, _ = solve_relaxed(params, chan)
        if not rel.has_point:
            continue
        grid = brute_force(params, chan)
        gaps.append(grid.objective / rel.objective - 1.0)
        below += grid.objective < rel.objective - 1e-6
        if len(gaps) == 20:
            break
    ok = len(gaps) == 20 and below == 0 and max(gaps) <= 0.02
    assert report(5, ok, f"{len(gaps)} feasible N_t=2, K=2 instances ({draws_used} draws), "
                         f"grid/SDP - 1 in [{min(gaps):.2e}, {max(gaps):.2e}] (<= 2%), "
                         f"{below} below SDP")


def test_c06_golden_section(defaults):
    errs, draws_used = [], 0
    for t, chan in draws(defaults, 3000):
        draws_used = t + 1
        rel, _ = solve_relaxed(defaults, chan)
        if not rel.has_point:
            continue
        obj, _, _ = golden_section_rho(defaults, chan)
        errs.append(abs(obj - rel.objective) / rel.objective)
        if len(errs) == 50:
            break
    ok = len(errs) == 50 and max(errs) <= 1e-3
    assert report(6, ok, f"{len(errs)} instances ({draws_used} draws), worst relative gap "
                         f"{max(errs):.2e} (<= 1e-3)")


@pytest.fixture(scope="module")
def sweeps():
    """Both default sweeps with 100 trials; records plus the raw solutions."""
    out = {}
    t0 = time.perf_counter()
    for cfg in default_experiments(100, 0):
        records, trials = [], []
        for v in cfg.grid:
            for t in range(cfg.trials):
                tr = solve_trial(cfg, v, t)
                trials.append(tr)
                records += [make_record(tr.seed, t, cfg.axis, v, name, tr.params, tr.chan, *run)
                            for name, run in tr.runs.items()]
        out[cfg.axis] = (cfg, records, trials)
    DURATIONS["sweeps"] = time.perf_counter() - t0
    return out


def _common_means(records, cfg, schemes, key="tx_power_w"):
    """Per-point means over the trials feasible for ``schemes`` at every point."""
    com = common_trials(records, schemes)
    means = {}
    for s in schemes:
        means[s] = [np.mean([getattr(r, key) for r in records
                             if r.scheme == s and r.value == float(v) and r.trial in com])
                    if com else math.nan for v in cfg.grid]
    return com, means


def _per_scheme(records, cfg, key="tx_power_w"):
    """Each scheme averaged over its own common-feasible set (trend checks)."""
    sizes, means = {}, {}
    for s in SCHEMES:
        com, m = _common_means(records, cfg, (s,), key)
        sizes[s], means[s] = len(com), m[s]
    return sizes, means


def _non_decreasing(xs, rel=1e-6):
    return all(b >= a * (1 - rel) for a, b in zip(xs, xs[1:]))


def test_c07_power_vs_sinr(sweeps):
    cfg, records, _ = sweeps["gamma_req_db"]
    sizes, means = _per_scheme(records, cfg)
    mono = {s: len(means[s]) > 0 and sizes[s] > 0 and _non_decreasing(means[s]) for s in SCHEMES}
    dom, pair_sizes = True, []
    for b in ("baseline1", "baseline2"):
        com, m = _common_means(records, cfg, ("scheme2", b))
        pair_sizes.append(len(com))
        dom &= len(com) > 0 and all(m[b][i] >= m["scheme2"][i] * (1 - 1e-6)
                                    for i in range(len(cfg.grid)))
    ok = all(mono.values()) and dom
    dbm = {s: " ".join(f"{10 * math.log10(1e3 * m):.2f}" for m in means[s]) for s in SCHEMES}
    assert report(7, ok, f"per-scheme common sets {[sizes[s] for s in SCHEMES]}; monotone "
                         f"{sum(mono.values())}/5; baselines >= scheme2 on pairwise sets "
                         f"{pair_sizes}: {dom}; dBm scheme2 [{dbm['scheme2']}], "
                         f"baseline2 [{dbm['baseline2']}]")


def _binding(params, chan, sol, tol=1e-6):
    rep = check_feasibility(params, chan, sol)
    if rep.slacks["C1"] > tol:
        return False
    k = int(np.argmax([eavesdropper_sinr_bound(params, chan, j + 1, sol)
                       for j in range(chan.n_idle)]))
    return rep.per_receiver["C2"][k] <= tol


def test_c08_secrecy(sweeps):
    below = n = n_bind = off = 0
    worst = 0.0
    for axis in ("gamma_req_db", "k_receivers"):
        _, _, trials = sweeps[axis]
        for tr in trials:
            floor = secrecy_floor(tr.params)
            for sol, *_ in tr.runs.values():
                if not sol.has_point:
                    continue
                n += 1
                sc = secrecy_capacity(tr.params, tr.chan, sol)
                below += sc < floor - 1e-6
                if _binding(tr.params, tr.chan, sol):
                    n_bind += 1
                    worst = max(worst, abs(sc - floor))
                    off += abs(sc - floor) > 1e-3
    ok = n > 0 and below == 0 and off == 0
    assert report(8, ok, f"{n} feasible solutions, {below} below floor - 1e-6; {n_bind} binding, "
                         f"worst |C_s - floor| {worst:.1e} (<= 1e-3)")


def test_c09_harvest_and_receivers(sweeps):
    cfg_g, rec_g, _ = sweeps["gamma_req_db"]
    h_sizes, harvest = _per_scheme(rec_g, cfg_g, "total_harvested_w")
    h_mono = {s: h_sizes[s] > 0 and _non_decreasing(harvest[s]) for s in SCHEMES}
    cfg_k, rec_k, trials_k = sweeps["k_receivers"]
    k_sizes, tx_k = _per_scheme(rec_k, cfg_k)
    k_mono = {s: k_sizes[s] > 0 and _non_decreasing(tx_k[s]) for s in SCHEMES}
    k8 = [tr for tr in trials_k if tr.value == 8 and all(
        run[0].has_point and check_feasibility(tr.params, tr.chan, run[0]).feasible
        for run in tr.runs.values())]
    ok = all(h_mono.values()) and all(k_mono.values()) and len(k8) > 0
    hd = "; ".join(f"{s} [" + " ".join(f"{10 * math.log10(1e3 * m):.2f}" for m in harvest[s]) + "]"
                   for s in SCHEMES if not h_mono[s])
    assert report(9, ok, f"harvest monotone in SINR {sum(h_mono.values())}/5 "
                         f"(sets {[h_sizes[s] for s in SCHEMES]}{'; decreasing dBm: ' + hd if hd else ''}); "
                         f"tx monotone in K {sum(k_mono.values())}/5 (sets {[k_sizes[s] for s in SCHEMES]}); "
                         f"K=8 solved by all schemes on {len(k8)} draws")


def test_c10_rho_star(five_hundred, defaults):
    errs = []
    for _, r in five_hundred[0]:
        cert = r.certificate
        if cert is None:
            continue
        act = active_set(cert)
        if act["C1"] and act["C3"]:
            errs.append(abs(r.relaxed.rho - rho_star_formula(cert.lambda_, cert.mu, defaults)))
    extra = 500
    while len(errs) < 20 and extra < 5000:
        chan = draw_channel(defaults, ChannelConfig(), trial_seed(0, extra))
        extra += 1
        sol, cert = solve_relaxed(defaults, chan)
        if cert is not None:
            act = active_set(cert)
            if act["C1"] and act["C3"]:
                errs.append(abs(sol.rho - rho_star_formula(cert.lambda_, cert.mu, defaults)))
    ok = len(errs) >= 20 and max(errs) <= 1e-4
    assert report(10, ok, f"{len(errs)} instances with C1 and C3 active, worst |rho - rho*| "
                          f"{max(errs):.1e} (<= 1e-4)")


def test_c11_total_time():
    elapsed = time.perf_counter() - START
    ok = elapsed < 600
    parts = ", ".join(f"{k} {v:.0f} s" for k, v in DURATIONS.items())
    assert report(11, ok, f"criteria 1-10 took {elapsed:.0f} s (< 600 s; {parts})")
