import math

import numpy as np
import pytest

from secure_swipt import schemes
from secure_swipt.model import SolutionStatus, check_feasibility, secrecy_capacity, secrecy_floor
from secure_swipt.schemes import (
    SCHEMES, Provenance, extract_rank_one, rank_ratio, run_scheme, solve_baseline, solve_relaxed,
    solve_scheme2, solve_sub1,
)

from conftest import random_hermitian


class TestExtraction:
    def test_exact_rank_one(self):
        W = np.array([[1, -1j], [1j, 1]])
        w, zero = extract_rank_one(W)
        assert not zero
        assert np.allclose(w, [1, 1j], atol=1e-12)
        assert rank_ratio(W) == pytest.approx(0.0, abs=1e-15)

    def test_identity_is_not_rank_one(self):
        w, zero = extract_rank_one(np.eye(2))
        assert w is None and not zero
        assert rank_ratio(np.eye(2)) == pytest.approx(1.0)

    def test_perturbed(self):
        rng = np.random.default_rng(0)
        w0 = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        w0 = w0 * abs(w0[0]) / w0[0]
        w, _ = extract_rank_one(np.outer(w0, w0.conj()) + 1e-9 * np.eye(4))
        assert np.linalg.norm(w - w0) <= 1e-4 * np.linalg.norm(w0)

    def test_phase_convention(self):
        rng = np.random.default_rng(1)
        w0 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        W = np.outer(w0, w0.conj())
        w1, _ = extract_rank_one(W)
        assert w1[0].imag == 0 and w1[0].real > 0
        for alpha in (0.01, 2.0, 1e4):
            wa, _ = extract_rank_one(alpha * W)
            assert np.abs(wa - math.sqrt(alpha) * w1).max() <= 1e-10 * max(1.0, math.sqrt(alpha))
        # a global phase on w0 does not change W, nor the extraction
        w2, _ = extract_rank_one(np.outer(1j * w0, (1j * w0).conj()))
        assert np.allclose(w1, w2, atol=1e-12)

    def test_zero(self):
        w, zero = extract_rank_one(np.zeros((3, 3)))
        assert zero and np.all(w == 0)
        assert math.isnan(rank_ratio(np.zeros((3, 3))))

    def test_full_rank_ratio(self):
        W = random_hermitian(np.random.default_rng(2), 3, psd=True)
        assert 0 < rank_ratio(W) <= 1


def test_relaxed_returns_rank_one(feasible_set):
    params, chans = feasible_set
    for chan in chans:
        sol, cert = solve_relaxed(params, chan)
        assert sol.status is SolutionStatus.OPTIMAL
        assert cert is not None
        assert np.allclose(np.outer(sol.w_extracted, sol.w_extracted.conj()), sol.W,
                           atol=1e-5 * np.trace(sol.W).real)


def test_sub1_always_extracts(feasible_set):
    params, chans = feasible_set
    for chan in chans:
        s = solve_sub1(params, chan)
        if s.status is SolutionStatus.OPTIMAL:
            assert s.w_extracted is not None and s.rank_ratio <= 1e-6


def test_scheme2_branch_global(instance):
    params, chan = instance
    res = solve_scheme2(params, chan)
    assert res.provenance is Provenance.GLOBAL_OPTIMAL
    assert res.solution.objective == res.relaxed.objective
    assert res.solution.info["provenance"] == "GlobalOptimal"
    assert res.solution.scheme == "Scheme2"


def test_scheme2_branch_lower_bound(instance, monkeypatch):
    params, chan = instance
    real = schemes.solve_relaxed

    def rank_deficient(*a, **k):
        sol, cert = real(*a, **k)
        sol.status = SolutionStatus.RANK_DEFICIENT
        sol.w_extracted = None
        return sol, cert

    monkeypatch.setattr(schemes, "solve_relaxed", rank_deficient)
    res = solve_scheme2(params, chan)
    assert res.provenance is Provenance.LOWER_BOUND
    assert res.solution.objective == res.sub1.objective


def test_scheme2_inclusion_assert(instance, monkeypatch):
    params, chan = instance
    from secure_swipt.model import BeamformingSolution

    monkeypatch.setattr(schemes, "solve_relaxed", lambda *a, **k: (
        BeamformingSolution.empty(params.n_t, SolutionStatus.INFEASIBLE), None))
    with pytest.raises(AssertionError):
        solve_scheme2(params, chan)


def test_scheme2_both_infeasible(defaults):
    from secure_swipt.channel import ChannelConfig, draw_channel, trial_seed
    for t in range(50):
        chan = draw_channel(defaults, ChannelConfig(), trial_seed(0, t))
        res = solve_scheme2(defaults, chan)
        if res.relaxed.status is SolutionStatus.INFEASIBLE:
            assert res.solution.status is SolutionStatus.INFEASIBLE
            assert res.provenance is None and res.solution.objective == math.inf
            return
    pytest.fail("no infeasible draw in 50 trials")


def test_scheme2_parallel_matches(instance):
    params, chan = instance
    a = solve_scheme2(params, chan)
    b = solve_scheme2(params, chan, parallel=True)
    assert a.solution.objective == b.solution.objective


def test_ordering_and_feasibility(feasible_set):
    params, chans = feasible_set
    for chan in chans:
        res = solve_scheme2(params, chan)
        r, s2, s1 = res.relaxed.objective, res.solution.objective, res.sub1.objective
        assert r <= s2 * (1 + 1e-6) and s2 <= s1 * (1 + 1e-6)
        for sol in (res.relaxed, res.sub1):
            if sol.has_point:
                assert check_feasibility(params, chan, sol).feasible


def test_baseline2_rho(instance):
    params, chan = instance
    b = solve_baseline(params, chan, 2)
    assert b.rho == 0.5


def test_baseline_choice_validated(instance):
    with pytest.raises(ValueError):
        solve_baseline(*instance, 3)


def test_baselines_cost_more_on_average(feasible_set):
    params, chans = feasible_set
    rows = []
    for chan in chans:
        objs = [run_scheme(n, params, chan) .objective for n in ("scheme2", "baseline1", "baseline2")]
        if all(np.isfinite(objs)):
            rows.append(objs)
    rows = np.array(rows)
    assert len(rows) >= 3
    m = rows.mean(axis=0)
    assert m[1] >= m[0] and m[2] >= m[1] * (1 - 1e-6)


def test_secrecy_guarantee(feasible_set):
    params, chans = feasible_set
    floor = secrecy_floor(params)
    for chan in chans:
        for name in SCHEMES:
            sol = run_scheme(name, params, chan)
            if sol.has_point:
                assert secrecy_capacity(params, chan, sol) >= floor - 1e-6


def test_unknown_scheme(instance):
    with pytest.raises(ValueError):
        run_scheme("nope", *instance)


def test_rank_invariant_error(instance, monkeypatch):
    params, chan = instance
    real = schemes.solve_encoding

    def fake(enc, *a, **k):
        sol, raw = real(enc, *a, **k)
        sol.status = SolutionStatus.RANK_DEFICIENT
        return sol, raw

    monkeypatch.setattr(schemes, "solve_encoding", fake)
    with pytest.raises(schemes.RankInvariantError):
        solve_sub1(params, chan)


def test_structure_error_is_numerical_failure(instance, monkeypatch):
    from secure_swipt import sdpcore

    def broken(enc, raw):
        raise sdpcore.StructureError("bad block")

    monkeypatch.setattr(schemes, "decode", broken)
    sol, _ = schemes.solve_encoding(schemes.build_relaxed(*instance))
    assert sol.status is SolutionStatus.NUMERICAL_FAILURE and math.isnan(sol.objective)
