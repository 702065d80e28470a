"""Encode the power-minimization problems as block SDPs.

Each builder produces a :class:`ProblemEncoding` wrapping an
:class:`~secure_swipt.sdpcore.SdpProblem` plus everything needed to decode
the answer and map solver duals back to the physical constraints.

Internal units
--------------
Transmit covariances are divided by a power scale ``p_s`` (a lower bound on
the optimal radiated power), and every receiver constraint is divided by that
receiver's received-power scale ``q = p_s * |channel|^2``. Channel directions
then enter as unit vectors, and noise, SINR and harvesting constants become
numbers of order one. Without this the interior-point iterates would have
to resolve 1e-15 W noise next to 1 W transmit powers.

Split-ratio terms
-----------------
``Gamma sigma_s^2 / rho`` (SINR) and ``P_min / (eta (1 - rho))`` (harvesting)
are represented by epigraph variables ``t1, t2`` held in 2x2 PSD blocks::

    [[t1, c1], [c1, rho]]     >= 0   <=>  t1 * rho     >= c1^2
    [[t2, c2], [c2, 1 - rho]] >= 0   <=>  t2 * (1-rho) >= c2^2
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import sdpcore
from .model import BeamformingSolution, ChannelRealization, SystemParams
from .sdpcore import Block, BlockKind, SdpProblem

__all__ = [
    "EncodingKind",
    "ProblemEncoding",
    "build_relaxed",
    "build_sub1",
    "build_baseline",
    "build_fixed_rho",
    "null_space_basis",
    "decode",
    "power_scale",
]


class EncodingKind(str, enum.Enum):
    RELAXED = "Relaxed"
    SUB1 = "Sub1"
    BASELINE1 = "Baseline1"
    BASELINE2 = "Baseline2"


@dataclass
class ProblemEncoding:
    """An SDP plus the map back to ``(W, V, rho)`` and named constraints.

    ``rows`` maps constraint names (``C1``, ``C2_1``..., ``C3``, ``C4_k`` or
    ``C10_k``, ``C5``, ``C6``, ``C7_lo``, ``C7_hi`` and the block links
    ``L_t1``, ``L_t2``, ``L_rho``) to solver rows. ``dual_factor[name]``
    converts that row's solver dual into the Lagrange multiplier of the
    constraint in physical units (sign included). ``slack_index`` gives the
    position of each inequality's slack in the diagonal block.
    """

    sdp: SdpProblem
    kind: EncodingKind
    power_scale: float
    channel_scale: dict
    blocks: dict
    rows: dict
    slack_index: dict
    dual_factor: dict
    senses: dict
    fixed_rho: Optional[float] = None
    nullspace: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def rho_free(self) -> bool:
        return self.fixed_rho is None


def power_scale(params: SystemParams, chan: ChannelRealization) -> float:
    """Largest of the elementary lower bounds on the optimal radiated power."""
    hh = float(np.vdot(chan.h, chan.h).real)
    cands = [params.gamma_req * (params.sigma_s2 + params.sigma_ant2) / hh,
             params.p_min / (params.eta * hh)]
    for gk, pk in zip(chan.g, params.p_min_k):
        cands.append(pk / (params.eta * float(np.vdot(gk, gk).real)))
    ps = max(cands)
    if not np.isfinite(ps) or ps <= 0:
        ps = params.power_cap
    return ps


def null_space_basis(h: np.ndarray) -> np.ndarray:
    """Orthonormal basis (n x n-1) of the orthogonal complement of ``h``.

    Householder QR of ``[h | I]``: the first column of Q spans ``h``, the
    remaining ones the complement. Each column is rotated so its first
    non-negligible entry is real positive, making the basis reproducible.
    """
    h = np.asarray(h, dtype=complex).reshape(-1)
    n = h.size
    Q, _ = np.linalg.qr(np.column_stack([h, np.eye(n)]), mode="complete")
    N = Q[:, 1:n]
    lead = N[np.argmax(np.abs(N) > 1e-12, axis=0), np.arange(n - 1)]
    return N * (np.abs(lead) / lead)


def _herm(A: np.ndarray) -> np.ndarray:
    # real-embedded data with <herm(A), T(X)> = Re tr(A X)
    A = np.asarray(A, dtype=complex)
    A = 0.5 * (A + A.conj().T)
    T = sdpcore.embed_hermitian(A, atol=1e-9)
    return 0.5 * (T + T.T) / 2.0


_E00 = np.array([[1.0, 0.0], [0.0, 0.0]])
_E11 = np.array([[0.0, 0.0], [0.0, 1.0]])
_E01 = np.array([[0.0, 0.5], [0.5, 0.0]])


class _Rows:
    """Accumulates named rows with per-variable coefficients."""

    def __init__(self):
        self.items = []

    def add(self, name, sense, rhs, factor=1.0, **coef):
        self.items.append((name, sense, float(rhs), float(factor), coef))


def _encode(params: SystemParams, chan: ChannelRealization, kind: EncodingKind,
            fixed_rho: Optional[float] = None, nullspace_an: bool = False) -> ProblemEncoding:
    chan.check(params)
    n = params.n_t
    ps = power_scale(params, chan)
    hn2 = float(np.vdot(chan.h, chan.h).real)
    hu = chan.h / math.sqrt(hn2)
    gn2 = [float(np.vdot(gk, gk).real) for gk in chan.g]
    gu = [gk / math.sqrt(v) for gk, v in zip(chan.g, gn2)]
    qh = ps * hn2
    qg = [ps * v for v in gn2]

    N = null_space_basis(chan.h) if nullspace_an else None
    nv = n - 1 if nullspace_an else n

    def vdata(A):
        return N.conj().T @ A @ N if N is not None else A

    hhW = np.outer(hu, hu.conj())
    hhV = vdata(hhW)
    ggW = [np.outer(g, g.conj()) for g in gu]
    ggV = [vdata(M) for M in ggW]
    IW, IV = np.eye(n), np.eye(nv)

    gam, eta = params.gamma_req, params.eta
    rows = _Rows()
    use_b1 = fixed_rho is None
    use_b2 = use_b1 and params.p_min > 0
    if fixed_rho is not None and not 0.0 < fixed_rho <= 1.0:
        raise ValueError("fixed_rho must lie in (0, 1]")

    # C1: Tr(hhW) - gam Tr(hhV) - t1 >= gam sigma_ant^2   (t1 rho >= gam sigma_s^2)
    c1_rhs = gam * params.sigma_ant2 / qh
    c1_coef = dict(W=hhW, V=-gam * hhV)
    if use_b1:
        c1_coef["B1"] = -_E00
    else:
        c1_rhs += gam * params.sigma_s2 / (fixed_rho * qh)
    rows.add("C1", "ge", c1_rhs, ps / qh, **c1_coef)

    for k, (gw, gv, q) in enumerate(zip(ggW, ggV, qg), 1):
        tol_k = params.gamma_tol[k - 1]
        rows.add(f"C2_{k}", "le", tol_k * (params.sigma_ant2 + params.sigma_s2) / q, ps / q,
                 W=gw, V=-tol_k * gv)

    if params.p_min > 0:
        if use_b2:
            rows.add("C3", "ge", -params.sigma_ant2 / qh, ps / qh, W=hhW, V=hhV, B2=-_E00)
        else:
            if fixed_rho >= 1.0:
                rhs = math.inf
            else:
                rhs = (params.p_min / (eta * (1.0 - fixed_rho)) - params.sigma_ant2) / qh
            rows.add("C3", "ge", rhs, ps / qh, W=hhW, V=hhV)

    sub1 = kind is EncodingKind.SUB1
    for k, (gw, gv, q) in enumerate(zip(ggW, ggV, qg), 1):
        pk = params.p_min_k[k - 1]
        if pk <= 0:
            continue
        rhs = (pk / eta - params.sigma_ant2) / q
        if sub1:
            rows.add(f"C10_{k}", "ge", rhs, ps / q, V=gv)
        else:
            rows.add(f"C4_{k}", "ge", rhs, ps / q, W=gw, V=gv)

    rows.add("C5", "le", params.p_max / ps, 1.0, W=IW, V=IV)
    rows.add("C6", "le", (params.p_pg - params.p_c) / (params.epsilon * ps), 1.0 / params.epsilon,
             W=IW, V=IV)

    c1 = math.sqrt(gam * params.sigma_s2 / qh)
    if use_b1:
        rows.add("C7_lo", "ge", 0.0, 1.0, B1=_E11)
        rows.add("C7_hi", "le", 1.0, 1.0, B1=_E11)
        rows.add("L_t1", "eq", c1, 1.0, B1=_E01)
    if use_b2:
        c2 = math.sqrt(params.p_min / (eta * qh))
        rows.add("L_t2", "eq", c2, 1.0, B2=_E01)
        rows.add("L_rho", "eq", 1.0, 1.0, B1=_E11, B2=_E11)

    for name, sense, rhs, *_ in rows.items:
        if not np.isfinite(rhs):
            raise ValueError(f"row {name} has infinite right-hand side")

    # assemble
    blocks = [Block(2 * n, BlockKind.HERMITIAN), Block(2 * nv, BlockKind.HERMITIAN)]
    bmap = {"W": 0, "V": 1}
    if use_b1:
        bmap["B1"] = len(blocks)
        blocks.append(Block(2))
    if use_b2:
        bmap["B2"] = len(blocks)
        blocks.append(Block(2))
    ineq = [it[0] for it in rows.items if it[1] != "eq"]
    slack_index = {name: i for i, name in enumerate(ineq)}
    bmap["slack"] = len(blocks)
    blocks.append(Block(len(ineq), BlockKind.DIAGONAL))

    m = len(rows.items)
    A = [np.zeros((m, b.dim, b.dim)) if b.is_matrix else np.zeros((m, b.dim)) for b in blocks]
    C = [np.zeros((b.dim, b.dim)) if b.is_matrix else np.zeros(b.dim) for b in blocks]
    C[0] = _herm(IW)
    C[1] = _herm(IV)
    b = np.zeros(m)
    names, rowmap, factors, senses = [], {}, {}, {}
    for i, (name, sense, rhs, factor, coef) in enumerate(rows.items):
        # rows with a large right-hand side are divided by it
        r = max(1.0, abs(rhs))
        rhs, factor = rhs / r, factor / r
        for var, data in coef.items():
            j = bmap[var]
            A[j][i] = (_herm(data) if var in ("W", "V") else data) / r
        if sense != "eq":
            A[bmap["slack"]][i, slack_index[name]] = -1.0 if sense == "ge" else 1.0
        b[i] = rhs
        names.append(name)
        rowmap[name] = i
        factors[name] = factor if sense != "le" else -factor
        senses[name] = sense
    sdp = SdpProblem(blocks, C, A, b, names)
    return ProblemEncoding(
        sdp=sdp, kind=kind, power_scale=ps,
        channel_scale={"h": qh, "g": qg, "h_norm2": hn2, "g_norm2": gn2},
        blocks=bmap, rows=rowmap, slack_index=slack_index, dual_factor=factors,
        senses=senses, fixed_rho=fixed_rho, nullspace=N, meta={"chan": chan},
    )


def build_relaxed(params: SystemParams, chan: ChannelRealization) -> ProblemEncoding:
    """Rank-relaxed problem: W, V Hermitian PSD, rho free."""
    return _encode(params, chan, EncodingKind.RELAXED)


def build_sub1(params: SystemParams, chan: ChannelRealization) -> ProblemEncoding:
    """As :func:`build_relaxed`, with idle-receiver harvesting counted from AN only."""
    return _encode(params, chan, EncodingKind.SUB1)


def build_baseline(params: SystemParams, chan: ChannelRealization,
                   fixed_rho: Optional[float] = None) -> ProblemEncoding:
    """Artificial noise confined to the null space of ``h``.

    ``fixed_rho=None`` gives baseline 1 (rho optimized); a value gives
    baseline 2 (0.5 in the reference setup).
    """
    kind = EncodingKind.BASELINE1 if fixed_rho is None else EncodingKind.BASELINE2
    return _encode(params, chan, kind, fixed_rho=fixed_rho, nullspace_an=True)


def build_fixed_rho(params: SystemParams, chan: ChannelRealization, rho: float,
                    kind: EncodingKind = EncodingKind.RELAXED) -> ProblemEncoding:
    """Relaxed (or Sub1) problem with the split ratio pinned; purely linear in W, V."""
    enc = _encode(params, chan, kind, fixed_rho=rho)
    return enc


def decode(enc: ProblemEncoding, sol: sdpcore.SdpSolution) -> BeamformingSolution:
    """Map solver variables back to physical ``(W, V, rho)`` in watts."""
    ps = enc.power_scale
    W = ps * sdpcore.extract_complex(sol.X[enc.blocks["W"]])
    Q = ps * sdpcore.extract_complex(sol.X[enc.blocks["V"]])
    V = enc.nullspace @ Q @ enc.nullspace.conj().T if enc.nullspace is not None else Q
    if enc.fixed_rho is not None:
        rho = enc.fixed_rho
    else:
        rho = float(np.clip(sol.X[enc.blocks["B1"]][1, 1], 0.0, 1.0))
    return BeamformingSolution.from_matrices(W, V, rho, scheme=enc.kind.value)
