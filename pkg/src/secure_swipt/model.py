"""Domain types and closed-form link formulas.

All quantities are linear (watts, linear SINR); dB/dBm appear only in the
conversion helpers and at I/O boundaries. Channels follow the convention
``y = h^H x``, so the received power of a covariance ``Q`` is ``h^H Q h``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "db_to_lin",
    "lin_to_db",
    "dbm_to_watt",
    "watt_to_dbm",
    "SystemParams",
    "ChannelRealization",
    "SolutionStatus",
    "BeamformingSolution",
    "FeasibilityReport",
    "desired_sinr",
    "eavesdropper_sinr",
    "eavesdropper_sinr_bound",
    "secrecy_capacity",
    "secrecy_floor",
    "harvested_power_desired",
    "harvested_power_idle",
    "total_harvested_power",
    "check_feasibility",
    "CONSTRAINT_NAMES",
]


def db_to_lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(w):
    return 10.0 * np.log10(w) + 30.0


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class SystemParams:
    """Scalar constants of the power-minimization problem (linear units)."""

    n_t: int
    k_receivers: int
    sigma_s2: float
    sigma_ant2: float
    eta: float
    gamma_req: float
    gamma_tol: tuple
    p_min: float
    p_min_k: tuple
    p_max: float
    p_pg: float
    p_c: float
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "gamma_tol", tuple(float(v) for v in np.broadcast_to(
            np.asarray(self.gamma_tol, dtype=float), (self.k_receivers - 1,))))
        object.__setattr__(self, "p_min_k", tuple(float(v) for v in np.broadcast_to(
            np.asarray(self.p_min_k, dtype=float), (self.k_receivers - 1,))))
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise ValueError("n_t must be an integer >= 2")
        if int(self.k_receivers) != self.k_receivers or self.k_receivers < 2:
            raise ValueError("k_receivers must be an integer >= 2")
        powers = [self.sigma_s2, self.sigma_ant2, self.p_min, self.p_max, self.p_pg, self.p_c,
                  *self.p_min_k]
        if any(not np.isfinite(p) or p < 0 for p in powers):
            raise ValueError("powers must be finite and nonnegative")
        if not 0 < self.eta <= 1:
            raise ValueError("eta must lie in (0, 1]")
        if self.gamma_req <= 0:
            raise ValueError("gamma_req must be positive")
        if any(g < 0 for g in self.gamma_tol):
            raise ValueError("gamma_tol must be nonnegative")
        if self.epsilon < 1:
            raise ValueError("epsilon must be >= 1")
        if self.p_pg <= self.p_c:
            raise ValueError("p_pg must exceed p_c")
        if self.gamma_req <= max(self.gamma_tol):
            raise ValueError("gamma_req must exceed every gamma_tol")

    @property
    def n_idle(self) -> int:
        return self.k_receivers - 1

    @property
    def power_cap(self) -> float:
        """Radiated-power cap implied jointly by the mask and the grid budget."""
        return min(self.p_max, (self.p_pg - self.p_c) / self.epsilon)

    @classmethod
    def paper_defaults(cls, n_t: int = 6, k_receivers: int = 4, gamma_req_db: float = 9.0,
                       **overrides) -> "SystemParams":
        """Parameter set of the indoor simulation setup.

        ``sigma_s2`` is quantization noise (-23 dBm) plus thermal noise
        (-111 dBm) summed in watts. ``p_max`` defaults to the grid-implied cap
        ``(P_PG - P_C) / epsilon``.
        """
        p_pg = float(dbm_to_watt(40.0))
        p_c = float(dbm_to_watt(30.0))
        eps = 1.0 / 0.38
        kw = dict(
            n_t=n_t,
            k_receivers=k_receivers,
            sigma_s2=float(dbm_to_watt(-23.0) + dbm_to_watt(-111.0)),
            sigma_ant2=float(dbm_to_watt(-114.0)),
            eta=0.5,
            gamma_req=float(db_to_lin(gamma_req_db)),
            gamma_tol=(float(db_to_lin(-10.0)),) * (k_receivers - 1),
            p_min=float(dbm_to_watt(0.0)),
            p_min_k=(float(dbm_to_watt(0.0)),) * (k_receivers - 1),
            p_max=(p_pg - p_c) / eps,
            p_pg=p_pg,
            p_c=p_c,
            epsilon=eps,
        )
        kw.update(overrides)
        return cls(**kw)

    def with_(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "n_t": self.n_t, "k_receivers": self.k_receivers, "sigma_s2": self.sigma_s2,
            "sigma_ant2": self.sigma_ant2, "eta": self.eta, "gamma_req": self.gamma_req,
            "gamma_tol": list(self.gamma_tol), "p_min": self.p_min, "p_min_k": list(self.p_min_k),
            "p_max": self.p_max, "p_pg": self.p_pg, "p_c": self.p_c, "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SystemParams":
        d = dict(d)
        d["gamma_tol"] = tuple(d["gamma_tol"]) if np.ndim(d["gamma_tol"]) else d["gamma_tol"]
        d["p_min_k"] = tuple(d["p_min_k"]) if np.ndim(d["p_min_k"]) else d["p_min_k"]
        return cls(**d)


@dataclass(frozen=True)
class ChannelRealization:
    """Desired channel ``h`` and idle-receiver channels ``g[k]`` (path loss included)."""

    h: np.ndarray
    g: tuple
    seed: Optional[int] = None

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex).reshape(-1)
        g = tuple(np.asarray(gk, dtype=complex).reshape(-1) for gk in self.g)
        for v in (h, *g):
            if v.size != h.size:
                raise ValueError("all channel vectors must have the same length")
            if not np.all(np.isfinite(v)) or not np.any(v):
                raise ValueError("channel vectors must be finite and nonzero")
            v.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)

    @property
    def n_t(self) -> int:
        return self.h.size

    @property
    def n_idle(self) -> int:
        return len(self.g)

    def check(self, params: SystemParams) -> None:
        if self.n_t != params.n_t or self.n_idle != params.n_idle:
            raise ValueError(f"channel has n_t={self.n_t}, {self.n_idle} idle receivers; params "
                             f"expect n_t={params.n_t}, {params.n_idle}")

    def scaled(self, alpha: float) -> "ChannelRealization":
        return ChannelRealization(self.h * alpha, tuple(gk * alpha for gk in self.g), self.seed)

    def truncated(self, n_idle: int) -> "ChannelRealization":
        return ChannelRealization(self.h, self.g[:n_idle], self.seed)


class SolutionStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    RANK_DEFICIENT = "RankDeficient"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass
class BeamformingSolution:
    """Transmit covariance pair and power split.

    ``W`` is the information covariance (``w w^H`` when rank one), ``V`` the
    artificial-noise covariance, both Hermitian and in watts.
    """

    W: np.ndarray
    V: np.ndarray
    rho: float
    status: SolutionStatus = SolutionStatus.OPTIMAL
    w_extracted: Optional[np.ndarray] = None
    rank_ratio: float = math.nan
    scheme: str = ""
    info: dict = field(default_factory=dict)

    @property
    def objective(self) -> float:
        """``Tr(W) + Tr(V)`` in watts; inf when infeasible, nan after a numerical failure."""
        if self.status is SolutionStatus.INFEASIBLE:
            return math.inf
        if self.status is SolutionStatus.NUMERICAL_FAILURE:
            return math.nan
        return float(np.trace(self.W).real + np.trace(self.V).real)

    @property
    def has_point(self) -> bool:
        return self.status in (SolutionStatus.OPTIMAL, SolutionStatus.RANK_DEFICIENT)

    @classmethod
    def from_matrices(cls, W, V, rho, **kw) -> "BeamformingSolution":
        W = np.asarray(W, dtype=complex)
        V = np.asarray(V, dtype=complex)
        return cls(0.5 * (W + W.conj().T), 0.5 * (V + V.conj().T), float(rho), **kw)

    @classmethod
    def empty(cls, n_t: int, status: SolutionStatus, scheme: str = "", **kw):
        z = np.zeros((n_t, n_t), dtype=complex)
        return cls(z, z.copy(), math.nan, status=status, scheme=scheme, **kw)


def _quad(v, Q) -> float:
    return float(np.real(np.vdot(v, Q @ v)))


# ---------------------------------------------------------------------------
# Link formulas
# ---------------------------------------------------------------------------
def desired_sinr(params: SystemParams, chan: ChannelRealization, sol) -> float:
    """SINR at the desired receiver for split ratio ``sol.rho``.

    ``rho = 0`` sends nothing to the decoder; the limiting value 0 is returned.
    """
    rho = float(sol.rho)
    if rho <= 0.0:
        return 0.0
    sig = _quad(chan.h, sol.W)
    den = rho * (params.sigma_ant2 + _quad(chan.h, sol.V)) + params.sigma_s2
    if den <= 0.0:
        return math.inf if sig > 0 else 0.0
    return max(0.0, rho * sig / den)


def eavesdropper_sinr(params: SystemParams, chan: ChannelRealization, k: int, sol,
                      rho_k: float) -> float:
    """SINR of idle receiver ``k`` (1-based) if it routes ``rho_k`` to decoding."""
    gk = _idle(chan, k)
    sig = _quad(gk, sol.W)
    den = rho_k * (params.sigma_ant2 + _quad(gk, sol.V)) + params.sigma_s2
    return max(0.0, rho_k * sig / den) if den > 0 else 0.0


def eavesdropper_sinr_bound(params: SystemParams, chan: ChannelRealization, k: int, sol) -> float:
    """Worst case over the idle receiver's split ratio (all power to decoding)."""
    gk = _idle(chan, k)
    sig = _quad(gk, sol.W)
    den = params.sigma_ant2 + _quad(gk, sol.V) + params.sigma_s2
    return max(0.0, sig / den) if den > 0 else (math.inf if sig > 0 else 0.0)


def _idle(chan: ChannelRealization, k: int) -> np.ndarray:
    if not 1 <= k <= chan.n_idle:
        raise IndexError(f"idle receiver index {k} outside 1..{chan.n_idle}")
    return chan.g[k - 1]


def secrecy_capacity(params: SystemParams, chan: ChannelRealization, sol) -> float:
    """``[log2(1 + SINR) - max_k log2(1 + SINR_k^UP)]^+`` in bit/s/Hz."""
    c = math.log2(1.0 + desired_sinr(params, chan, sol))
    ce = max((math.log2(1.0 + eavesdropper_sinr_bound(params, chan, k, sol))
              for k in range(1, chan.n_idle + 1)), default=0.0)
    return max(0.0, c - ce)


def secrecy_floor(params: SystemParams) -> float:
    """Secrecy rate guaranteed by any point meeting the SINR constraints."""
    return max(0.0, math.log2(1.0 + params.gamma_req) - math.log2(1.0 + max(params.gamma_tol)))


def harvested_power_desired(params: SystemParams, chan: ChannelRealization, sol) -> float:
    rho = float(sol.rho)
    rx = _quad(chan.h, sol.W) + _quad(chan.h, sol.V) + params.sigma_ant2
    return (1.0 - rho) * params.eta * rx


def harvested_power_idle(params: SystemParams, chan: ChannelRealization, k: int, sol) -> float:
    gk = _idle(chan, k)
    return params.eta * (_quad(gk, sol.W) + _quad(gk, sol.V) + params.sigma_ant2)


def total_harvested_power(params: SystemParams, chan: ChannelRealization, sol) -> float:
    return harvested_power_desired(params, chan, sol) + sum(
        harvested_power_idle(params, chan, k, sol) for k in range(1, chan.n_idle + 1))


# ---------------------------------------------------------------------------
# Feasibility
# ---------------------------------------------------------------------------
CONSTRAINT_NAMES = ("C1", "C2", "C3", "C4", "C5", "C6", "C7", "C8")


@dataclass
class FeasibilityReport:
    """Normalized signed slack per constraint; negative means violated.

    ``C2`` and ``C4`` hold the worst receiver; ``per_receiver`` keeps every
    one of them.
    """

    slacks: dict
    per_receiver: dict
    tol: float
    degenerate: bool = False

    @property
    def satisfied(self) -> dict:
        return {k: v >= -self.tol for k, v in self.slacks.items()}

    @property
    def feasible(self) -> bool:
        return all(self.satisfied.values())

    def violated(self) -> list:
        return [k for k, ok in self.satisfied.items() if not ok]


def check_feasibility(params: SystemParams, chan: ChannelRealization, sol,
                      tol: float = 1e-7) -> FeasibilityReport:
    """Evaluate the original constraint set on ``(W, V, rho)``.

    Receiver constraints are written in received-power form and divided by
    that receiver's power scale ``|channel|^2 Tr(W + V) + sigma_ant^2 +
    sigma_s^2``; the power budgets are divided by their caps; ``C7`` is
    ``min(rho, 1 - rho)`` and ``C8`` the smallest eigenvalue over trace.
    These are the units in which the solver works, so ``tol`` is an absolute
    slack there.
    """
    chan.check(params)
    rho = float(sol.rho)
    ptx = float(np.trace(sol.W).real + np.trace(sol.V).real)
    noise = params.sigma_ant2 + params.sigma_s2
    gam = params.gamma_req

    def scale(v):
        return float(np.vdot(v, v).real) * ptx + noise

    s = {}
    sh = scale(chan.h)
    if rho > 0:
        c1 = _quad(chan.h, sol.W) - gam * (params.sigma_ant2 + _quad(chan.h, sol.V)
                                           + params.sigma_s2 / rho)
    else:
        c1 = -gam * params.sigma_s2 * math.inf if params.sigma_s2 > 0 else 0.0
    s["C1"] = c1 / (max(1.0, gam) * sh)
    c2, c4 = [], []
    for k, gk in enumerate(chan.g, 1):
        sk = scale(gk)
        tk = params.gamma_tol[k - 1]
        ww, vv = _quad(gk, sol.W), _quad(gk, sol.V)
        c2.append((tk * (params.sigma_ant2 + vv + params.sigma_s2) - ww) / sk)
        c4.append((params.eta * (ww + vv + params.sigma_ant2) - params.p_min_k[k - 1])
                  / (params.eta * sk))
    s["C2"] = min(c2, default=math.inf)
    s["C3"] = (harvested_power_desired(params, chan, sol) - params.p_min) / (params.eta * sh)
    s["C4"] = min(c4, default=math.inf)
    s["C5"] = (params.p_max - ptx) / max(params.p_max, 1e-300)
    budget = params.p_pg - params.p_c
    s["C6"] = (budget - params.epsilon * ptx) / budget
    s["C7"] = min(rho, 1.0 - rho) if np.isfinite(rho) else -math.inf
    eig = []
    for Q in (sol.W, sol.V):
        tr = max(float(np.trace(Q).real), 1e-300)
        eig.append(float(np.linalg.eigvalsh(0.5 * (Q + Q.conj().T))[0]) / tr)
    s["C8"] = min(eig)
    return FeasibilityReport(s, {"C2": c2, "C4": c4}, tol, degenerate=rho in (0.0, 1.0))
