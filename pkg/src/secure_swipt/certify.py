"""Optimality certificates for the relaxed problem.

Multipliers, all in physical units (objective in watts)::

    lambda  desired-receiver SINR          mu      desired-receiver harvesting
    beta_k  idle-receiver SINR cap         delta_k idle-receiver harvesting
    psi     transmit power cap             theta   power-consumption budget

Stationarity of the Lagrangian in ``W`` and ``V`` gives::

    Y = (1 + psi + eps theta) I + sum_k (beta_k - delta_k) g_k g_k^H - (lambda + mu) h h^H
    Z = (1 + psi + eps theta) I - sum_k (beta_k tol_k + delta_k) g_k g_k^H
        + (lambda Gamma - mu) h h^H

with ``Y W = 0``, ``Z V = 0``, ``Y, Z >= 0``. When every ``beta_k >= delta_k``
the first two terms of ``Y`` form a positive definite matrix, so ``Y`` has
rank at least ``N_t - 1`` and ``W`` is rank one.

The split ratio enters only through ``lambda Gamma sigma_s^2 / rho +
mu P_min / (eta (1 - rho))``, whose minimizer gives :func:`rho_star_formula`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import sdpcore
from .model import BeamformingSolution, ChannelRealization, SystemParams
from .problems import EncodingKind, ProblemEncoding

__all__ = [
    "DualCertificate",
    "recover_duals",
    "kkt_residuals",
    "dual_objective",
    "check_proposition1",
    "rho_star_formula",
    "rank_bound_check",
    "active_set",
    "certify",
]

PROP1_TOL = 1e-8
RANK_TOL_Y = 1e-6


@dataclass
class DualCertificate:
    """Lagrange multipliers and dual matrices of one optimal solve.

    ``Y`` and ``Z`` are the solver's dual slack matrices for ``W`` and ``V``
    (``Z`` lives in null-space coordinates for the baselines). ``h`` and
    ``g`` are kept so the certificate can be checked on its own.
    """

    lambda_: float
    beta: np.ndarray
    mu: float
    delta: np.ndarray
    theta: float
    psi: float
    Y: np.ndarray
    Z: np.ndarray
    h: np.ndarray
    g: tuple
    kind: str = EncodingKind.RELAXED.value
    fixed_rho: Optional[float] = None
    nullspace: Optional[np.ndarray] = None
    solver_gap: float = math.nan
    ill_posed: bool = False
    residuals: dict = field(default_factory=dict)

    @property
    def h_norm2(self) -> float:
        return float(np.vdot(self.h, self.h).real)

    @property
    def g_norm2(self) -> np.ndarray:
        return np.array([float(np.vdot(gk, gk).real) for gk in self.g])

    def normalized(self) -> dict:
        """Multipliers times their constraint's channel gain: unitless, scale-free."""
        return {
            "lambda": self.lambda_ * self.h_norm2,
            "mu": self.mu * self.h_norm2,
            "beta": self.beta * self.g_norm2,
            "delta": self.delta * self.g_norm2,
            "psi": self.psi,
            "theta": self.theta,
        }


def recover_duals(enc: ProblemEncoding, raw: sdpcore.SdpSolution, chan: Optional[ChannelRealization] = None
                  ) -> DualCertificate:
    """Read multipliers off the solver's dual vector through the named rows.

    The 2x2 epigraph blocks carry no multiplier of their own: ``lambda`` and
    ``mu`` are the duals of the C1 and C3 rows, which is how they enter the
    stationarity conditions.
    """
    if not raw.optimal:
        raise ValueError("dual recovery needs an optimal solve")
    known = {"C1", "C3", "C5", "C6", "C7_lo", "C7_hi", "L_t1", "L_t2", "L_rho"}
    K1 = len(enc.channel_scale["g"])
    mult = {}
    ill = False
    for name, i in enc.rows.items():
        base = name.split("_")[0]
        if name not in known and base not in ("C2", "C4", "C10"):
            ill = ill or abs(raw.y[i]) > 1e-8
            continue
        mult[name] = float(raw.y[i]) * enc.dual_factor[name]
    beta = np.array([mult.get(f"C2_{k}", 0.0) for k in range(1, K1 + 1)])
    delta = np.array([mult.get(f"C4_{k}", mult.get(f"C10_{k}", 0.0)) for k in range(1, K1 + 1)])
    Y = 2.0 * sdpcore.extract_complex(raw.S[enc.blocks["W"]])
    Z = 2.0 * sdpcore.extract_complex(raw.S[enc.blocks["V"]])
    chan = chan if chan is not None else enc.meta["chan"]
    ps = enc.power_scale
    gap = abs(raw.primal_objective - raw.dual_objective) * ps
    return DualCertificate(
        lambda_=mult.get("C1", 0.0), beta=beta, mu=mult.get("C3", 0.0), delta=delta,
        theta=mult.get("C6", 0.0), psi=mult.get("C5", 0.0), Y=Y, Z=Z,
        h=np.array(chan.h), g=tuple(np.array(gk) for gk in chan.g), kind=enc.kind.value,
        fixed_rho=enc.fixed_rho, nullspace=enc.nullspace, solver_gap=gap, ill_posed=ill,
    )


def _outer(v):
    return np.outer(v, np.conj(v))


def stationarity_matrices(cert: DualCertificate, params: SystemParams):
    """``(Y, Z)`` rebuilt from the scalar multipliers alone."""
    n = cert.h.size
    base = (1.0 + cert.psi + params.epsilon * cert.theta) * np.eye(n)
    hh = _outer(cert.h)
    sub1 = cert.kind == EncodingKind.SUB1.value
    Y = base - (cert.lambda_ + cert.mu) * hh
    Z = base + (cert.lambda_ * params.gamma_req - cert.mu) * hh
    for k, gk in enumerate(cert.g):
        gg = _outer(gk)
        Y = Y + (cert.beta[k] - (0.0 if sub1 else cert.delta[k])) * gg
        Z = Z - (cert.beta[k] * params.gamma_tol[k] + cert.delta[k]) * gg
    if cert.nullspace is not None:
        N = cert.nullspace
        Z = N.conj().T @ Z @ N
    return Y, Z


def _split_term(lam, mu, params: SystemParams, fixed_rho=None) -> float:
    a = lam * params.gamma_req * params.sigma_s2
    b = mu * params.p_min / params.eta if params.p_min > 0 else 0.0
    if fixed_rho is not None:
        return a / fixed_rho + (b / (1.0 - fixed_rho) if b > 0 else 0.0)
    return (math.sqrt(max(a, 0.0)) + math.sqrt(max(b, 0.0))) ** 2


def dual_objective(cert: DualCertificate, params: SystemParams) -> float:
    """Lagrange dual function value (watts) at the certificate's multipliers."""
    sa, ss = params.sigma_ant2, params.sigma_s2
    d = cert.lambda_ * params.gamma_req * sa + _split_term(cert.lambda_, cert.mu, params, cert.fixed_rho)
    if params.p_min > 0:
        d -= cert.mu * sa
    for k in range(len(cert.g)):
        d -= cert.beta[k] * params.gamma_tol[k] * (sa + ss)
        if params.p_min_k[k] > 0:
            d += cert.delta[k] * (params.p_min_k[k] / params.eta - sa)
    d -= cert.psi * params.p_max
    d -= cert.theta * (params.p_pg - params.p_c)
    return float(d)


def _row_values(params: SystemParams, chan: ChannelRealization, sol: BeamformingSolution, kind: str):
    """Constraint values ``f(x) >= 0`` paired with their multiplier name."""
    q = lambda v, M: float(np.real(np.vdot(v, M @ v)))  # noqa: E731
    rho = sol.rho
    out = [("lambda", None, q(chan.h, sol.W) - params.gamma_req * (
        q(chan.h, sol.V) + params.sigma_ant2 + params.sigma_s2 / rho))]
    if params.p_min > 0:
        out.append(("mu", None, q(chan.h, sol.W + sol.V) + params.sigma_ant2
                    - params.p_min / (params.eta * (1.0 - rho))))
    sub1 = kind == EncodingKind.SUB1.value
    for k, gk in enumerate(chan.g):
        tk = params.gamma_tol[k]
        out.append(("beta", k, tk * (q(gk, sol.V) + params.sigma_ant2 + params.sigma_s2) - q(gk, sol.W)))
        if params.p_min_k[k] > 0:
            recv = q(gk, sol.V) if sub1 else q(gk, sol.W + sol.V)
            out.append(("delta", k, recv + params.sigma_ant2 - params.p_min_k[k] / params.eta))
    ptx = sol.objective
    out.append(("psi", None, params.p_max - ptx))
    out.append(("theta", None, params.p_pg - params.p_c - params.epsilon * ptx))
    return out


def kkt_residuals(params: SystemParams, chan: ChannelRealization, sol: BeamformingSolution,
                  cert: DualCertificate) -> dict:
    """Scaled KKT residuals of an optimal ``(W, V, rho)`` and its multipliers.

    Returns
    -------
    dict
        ``stationarity_W``, ``stationarity_V``: gap between the solver's dual
        matrices and the ones rebuilt from the multipliers, relative to the
        size of the terms. ``complementarity``: largest of
        ``Tr(Y W) / obj``, ``Tr(Z V) / obj`` and ``|multiplier * slack| / obj``.
        ``dual_feasibility``: most negative normalized multiplier or
        eigenvalue. ``gap``: ``|obj - dual| / (1 + obj)`` with the dual
        function evaluated at the multipliers. ``complementarity_raw``:
        ``Tr(Y W) + Tr(Z V)`` in watts.
    """
    Yf, Zf = stationarity_matrices(cert, params)
    nm = cert.normalized()
    ident = 1.0 + cert.psi + params.epsilon * cert.theta
    size_W = ident * math.sqrt(cert.h.size) + nm["lambda"] + nm["mu"] + float(
        np.sum(np.abs(nm["beta"] - nm["delta"])))
    size_V = ident * math.sqrt(cert.h.size) + nm["lambda"] * params.gamma_req + nm["mu"] + float(
        np.sum(nm["beta"] * np.asarray(params.gamma_tol) + nm["delta"]))
    obj = max(sol.objective, 1e-300)
    V = sol.V
    if cert.nullspace is not None:
        V = cert.nullspace.conj().T @ V @ cert.nullspace
    stat_W = float(np.linalg.norm(cert.Y - Yf)) / size_W
    stat_V = float(np.linalg.norm(cert.Z - Zf)) / size_V
    tyw = float(np.trace(Yf @ sol.W).real)
    tzv = float(np.trace(Zf @ V).real)
    comp = [abs(tyw) / (size_W * obj), abs(tzv) / (size_V * obj)]
    for name, k, val in _row_values(params, chan, sol, cert.kind):
        m = getattr(cert, "lambda_" if name == "lambda" else name)
        m = m[k] if k is not None else m
        comp.append(abs(m * val) / obj)
    dual_neg = [0.0,
                -float(np.linalg.eigvalsh(Yf)[0]) / size_W,
                -float(np.linalg.eigvalsh(Zf)[0]) / size_V]
    for key, val in nm.items():
        dual_neg.append(-float(np.min(val)) if np.size(val) else 0.0)
    dual = dual_objective(cert, params)
    res = {
        "stationarity_W": stat_W,
        "stationarity_V": stat_V,
        "complementarity": float(max(comp)),
        "complementarity_raw": tyw + tzv,
        "dual_feasibility": float(max(dual_neg)),
        "gap": abs(sol.objective - dual) / (1.0 + abs(sol.objective)),
        "dual_objective": dual,
    }
    cert.residuals = res
    return res


def check_proposition1(cert: DualCertificate, solution: BeamformingSolution,
                       rank_tol: float = 1e-6, tol: float = PROP1_TOL) -> dict:
    """Check that ``beta_k >= delta_k`` for all ``k`` implies rank-one ``W``.

    The comparison uses gain-normalized multipliers so ``tol`` does not depend
    on channel scale. Only the implication is checked; rank one without the
    condition is legitimate.
    """
    nm = cert.normalized()
    holds = bool(np.all(nm["beta"] >= nm["delta"] - tol))
    ratio = solution.rank_ratio
    rank_one = bool(np.isfinite(ratio) and ratio <= rank_tol)
    return {"condition_holds": holds, "rank_one": rank_one,
            "consistent": (not holds) or rank_one, "remark1_case": (not holds) and rank_one}


def rho_star_formula(lambda_: float, mu: float, params: SystemParams) -> Optional[float]:
    """Minimizer over ``rho`` of the split-ratio terms of the Lagrangian.

    None when both multipliers vanish (the ratio is then not pinned down).
    """
    a = max(lambda_, 0.0) * params.sigma_s2 * params.gamma_req
    b = max(mu, 0.0) * params.p_min / params.eta
    if a <= 0.0 and b <= 0.0:
        return None
    return math.sqrt(a) / (math.sqrt(a) + math.sqrt(b))


def active_set(cert: DualCertificate, tol: float = 1e-6) -> dict:
    """Constraints whose normalized multiplier exceeds ``tol``."""
    nm = cert.normalized()
    return {
        "C1": nm["lambda"] > tol,
        "C3": nm["mu"] > tol,
        "C2": [bool(v > tol) for v in nm["beta"]],
        "C4": [bool(v > tol) for v in nm["delta"]],
        "C5": nm["psi"] > tol,
        "C6": nm["theta"] > tol,
    }


def rank_bound_check(cert: DualCertificate, params: SystemParams,
                     rel_tol: float = RANK_TOL_Y, W: Optional[np.ndarray] = None) -> dict:
    """Rank facts behind the rank-one argument.

    ``A = (1 + psi + eps theta) I + sum_k (beta_k - delta_k) g_k g_k^H``
    must be positive definite when every ``beta_k >= delta_k``; ``Y`` must
    have rank ``N_t - 1`` or ``N_t``, and exactly ``N_t - 1`` when ``W != 0``.
    """
    n = cert.h.size
    A = (1.0 + cert.psi + params.epsilon * cert.theta) * np.eye(n)
    for k, gk in enumerate(cert.g):
        A = A + (cert.beta[k] - cert.delta[k]) * _outer(gk)
    a_min = float(np.linalg.eigvalsh(A)[0])
    a_scale = float(np.linalg.eigvalsh(A)[-1])
    nm = cert.normalized()
    cond = bool(np.all(nm["beta"] >= nm["delta"] - PROP1_TOL))
    a_full = a_min > rel_tol * max(a_scale, 1.0)
    ev = np.linalg.eigvalsh(cert.Y)
    y_rank = int(np.sum(ev > rel_tol * max(ev[-1], 1e-300)))
    w_nonzero = W is None or float(np.trace(W).real) > 0
    ok = y_rank in (n - 1, n) and (not w_nonzero or y_rank == n - 1)
    return {"A_min_eig": a_min, "A_full_rank": bool(a_full), "condition_holds": cond,
            "A_ok": (not cond) or bool(a_full), "Y_rank": y_rank, "Y_rank_ok": bool(ok)}


def certify(params: SystemParams, chan: ChannelRealization, sol: BeamformingSolution,
            cert: DualCertificate) -> dict:
    """Everything above in one report."""
    res = kkt_residuals(params, chan, sol, cert)
    lam_mu = rho_star_formula(cert.lambda_, cert.mu, params)
    return {
        "residuals": res,
        "proposition1": check_proposition1(cert, sol),
        "rank_bound": rank_bound_check(cert, params, W=sol.W),
        "rho_solver": sol.rho,
        "rho_star": lam_mu,
        "active": active_set(cert),
        "multipliers": {k: (v.tolist() if isinstance(v, np.ndarray) else v)
                        for k, v in cert.normalized().items()},
    }
