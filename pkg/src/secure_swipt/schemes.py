"""Resource-allocation schemes built on the SDP encodings.

``solve_relaxed`` drops the rank constraint on ``W``. ``solve_sub1`` counts
idle-receiver harvesting from artificial noise only, which guarantees a
rank-one ``W``. ``solve_scheme2`` runs both and keeps the relaxed answer
when it is rank-one (then it is globally optimal), the Sub1 answer otherwise.
The baselines confine artificial noise to the null space of the desired
channel, with ``rho`` optimized (baseline 1) or fixed to 0.5 (baseline 2).
"""
from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import sdpcore
from .model import BeamformingSolution, ChannelRealization, SolutionStatus, SystemParams
from .problems import ProblemEncoding, build_baseline, build_relaxed, build_sub1, decode

__all__ = [
    "RANK_TOL",
    "RankInvariantError",
    "Provenance",
    "Scheme2Result",
    "extract_rank_one",
    "rank_ratio",
    "solve_encoding",
    "solve_relaxed",
    "solve_sub1",
    "solve_scheme2",
    "solve_baseline",
    "SCHEMES",
    "run_scheme",
]

RANK_TOL = 1e-6


class RankInvariantError(RuntimeError):
    """An Optimal Sub1 solve returned a W that is not rank one."""


class Provenance(str, enum.Enum):
    GLOBAL_OPTIMAL = "GlobalOptimal"
    LOWER_BOUND = "LowerBound"


def rank_ratio(W: np.ndarray) -> float:
    """lambda_2 / lambda_1 of a Hermitian PSD matrix (0 for rank <= 1, nan for W = 0)."""
    ev = np.linalg.eigvalsh(0.5 * (W + W.conj().T))[::-1]
    if ev.size == 0 or ev[0] <= 0:
        return math.nan
    if ev.size == 1:
        return 0.0
    return float(max(ev[1], 0.0) / ev[0])


def extract_rank_one(W: np.ndarray, rank_tol: float = RANK_TOL):
    """Beamformer ``w`` with ``W ~= w w^H``.

    Returns
    -------
    w : ndarray or None
        ``sqrt(lambda_1) u_1`` with the first non-negligible entry made real
        positive, or None when ``lambda_2 / lambda_1 > rank_tol``.
    zero : bool
        True when ``Tr(W) = 0``; ``w`` is then the zero vector.
    """
    W = np.asarray(W, dtype=complex)
    W = 0.5 * (W + W.conj().T)
    n = W.shape[0]
    if np.trace(W).real <= 0.0:
        return np.zeros(n, dtype=complex), True
    ev, U = np.linalg.eigh(W)
    lam1 = ev[-1]
    if n > 1 and max(ev[-2], 0.0) / lam1 > rank_tol:
        return None, False
    u = U[:, -1]
    lead = u[np.argmax(np.abs(u) > 1e-12 * np.abs(u).max())]
    w = math.sqrt(lam1) * u * (abs(lead) / lead)
    return w, False


def solve_encoding(enc: ProblemEncoding, tol: float = 1e-8, rank_tol: float = RANK_TOL,
                   max_iter: int = 200):
    """Solve an encoding and decode it into a :class:`BeamformingSolution`.

    Returns ``(solution, sdp_solution)``; the raw solver output is kept for
    dual recovery.
    """
    n_t = enc.sdp.blocks[enc.blocks["W"]].dim // 2
    t0 = time.perf_counter()
    raw = sdpcore.solve(enc.sdp, tol=tol, max_iter=max_iter)
    info = {"iterations": raw.iterations, "residuals": dict(raw.residuals),
            "solver_status": raw.status.value, "solve_ms": 1e3 * (time.perf_counter() - t0)}
    if raw.status is sdpcore.SdpStatus.PRIMAL_INFEASIBLE:
        return BeamformingSolution.empty(n_t, SolutionStatus.INFEASIBLE, enc.kind.value, info=info), raw
    if not raw.optimal:
        return (BeamformingSolution.empty(n_t, SolutionStatus.NUMERICAL_FAILURE, enc.kind.value,
                                          info=info), raw)
    try:
        sol = decode(enc, raw)
    except sdpcore.StructureError as exc:
        info["error"] = str(exc)
        return (BeamformingSolution.empty(n_t, SolutionStatus.NUMERICAL_FAILURE, enc.kind.value,
                                          info=info), raw)
    sol.info.update(info)
    sol.info["power_scale"] = enc.power_scale
    sol.info["dual_objective"] = raw.dual_objective * enc.power_scale
    sol.rank_ratio = rank_ratio(sol.W)
    w, _ = extract_rank_one(sol.W, rank_tol)
    if w is not None:
        sol.w_extracted = w
        sol.status = SolutionStatus.OPTIMAL
    else:
        sol.status = SolutionStatus.RANK_DEFICIENT
    return sol, raw


def solve_relaxed(params: SystemParams, chan: ChannelRealization, tol: float = 1e-8,
                  rank_tol: float = RANK_TOL):
    """Rank-relaxed problem.

    Returns ``(solution, certificate)``; the certificate is None unless the
    solve reached optimality.
    """
    from .certify import recover_duals

    enc = build_relaxed(params, chan)
    sol, raw = solve_encoding(enc, tol, rank_tol)
    cert = recover_duals(enc, raw) if sol.has_point else None
    return sol, cert


def solve_sub1(params: SystemParams, chan: ChannelRealization, tol: float = 1e-8,
               rank_tol: float = RANK_TOL) -> BeamformingSolution:
    sol, _ = solve_encoding(build_sub1(params, chan), tol, rank_tol)
    if sol.status is SolutionStatus.RANK_DEFICIENT:
        raise RankInvariantError(
            f"Sub1 solve returned rank ratio {sol.rank_ratio:.3e} > {rank_tol:g}")
    return sol


@dataclass
class Scheme2Result:
    solution: BeamformingSolution
    provenance: Optional[Provenance]
    relaxed: BeamformingSolution
    sub1: BeamformingSolution
    certificate: object = None


def solve_scheme2(params: SystemParams, chan: ChannelRealization, tol: float = 1e-8,
                  rank_tol: float = RANK_TOL, parallel: bool = False) -> Scheme2Result:
    """Run the relaxed problem and Sub1, keep the relaxed answer if rank one."""
    if parallel:
        with ThreadPoolExecutor(max_workers=2) as ex:
            f_rel = ex.submit(solve_relaxed, params, chan, tol, rank_tol)
            f_sub = ex.submit(solve_sub1, params, chan, tol, rank_tol)
            (rel, cert), sub = f_rel.result(), f_sub.result()
    else:
        rel, cert = solve_relaxed(params, chan, tol, rank_tol)
        sub = solve_sub1(params, chan, tol, rank_tol)

    if rel.status is SolutionStatus.INFEASIBLE and sub.has_point:
        # Sub1's feasible set sits inside the relaxed one
        raise AssertionError("Sub1 feasible while the relaxed problem is infeasible")
    if rel.status is SolutionStatus.OPTIMAL:
        chosen, prov = rel, Provenance.GLOBAL_OPTIMAL
    elif sub.has_point:
        chosen, prov = sub, Provenance.LOWER_BOUND
    else:
        status = (SolutionStatus.INFEASIBLE if SolutionStatus.INFEASIBLE in (rel.status, sub.status)
                  else SolutionStatus.NUMERICAL_FAILURE)
        chosen, prov = BeamformingSolution.empty(params.n_t, status, "Scheme2"), None
    out = BeamformingSolution(chosen.W, chosen.V, chosen.rho, chosen.status, chosen.w_extracted,
                              chosen.rank_ratio, "Scheme2", dict(chosen.info))
    out.info["provenance"] = prov.value if prov else None
    return Scheme2Result(out, prov, rel, sub, cert)


def solve_baseline(params: SystemParams, chan: ChannelRealization, which: int,
                   tol: float = 1e-8, rank_tol: float = RANK_TOL) -> BeamformingSolution:
    """Null-space artificial noise; ``which=1`` optimizes rho, ``which=2`` fixes it at 0.5."""
    if which not in (1, 2):
        raise ValueError("which must be 1 or 2")
    enc = build_baseline(params, chan, fixed_rho=None if which == 1 else 0.5)
    sol, _ = solve_encoding(enc, tol, rank_tol)
    return sol


SCHEMES = ("relaxed", "scheme2", "sub1", "baseline1", "baseline2")


def run_scheme(name: str, params: SystemParams, chan: ChannelRealization,
               tol: float = 1e-8) -> BeamformingSolution:
    """Dispatch by scheme name (see ``SCHEMES``)."""
    if name == "relaxed":
        return solve_relaxed(params, chan, tol)[0]
    if name == "sub1":
        return solve_sub1(params, chan, tol)
    if name == "scheme2":
        return solve_scheme2(params, chan, tol).solution
    if name == "baseline1":
        return solve_baseline(params, chan, 1, tol)
    if name == "baseline2":
        return solve_baseline(params, chan, 2, tol)
    raise ValueError(f"unknown scheme {name!r}; choose from {', '.join(SCHEMES)}")
