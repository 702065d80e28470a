"""Independent reference solvers used to check the SDP pipeline.

``brute_force`` handles two transmit antennas and one idle receiver. Each
covariance can be taken rank one there (a 2x2 PSD matrix touched by three
linear functionals has a rank-one optimal extreme point), so a candidate is
two unit directions, the split ratio, and two powers. Directions are
searched on a grid refined around the best cells; for fixed directions the
split ratio is found by a scan plus golden section, and for fixed directions
and ``rho`` the powers solve a two-variable LP, done exactly by enumerating
vertices.

``golden_section_rho`` minimizes over ``rho`` with the split ratio pinned in
a purely linear SDP, which checks the 2x2-block modeling of ``1/rho``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import BeamformingSolution, ChannelRealization, SolutionStatus, SystemParams
from .problems import EncodingKind, build_fixed_rho
from .schemes import solve_encoding

__all__ = ["GridResult", "brute_force", "lp2_min", "golden_section_rho"]

_HALF_PI = 0.5 * math.pi
_TWO_PI = 2.0 * math.pi


def _direction(theta, phi):
    # unit vectors in C^2 up to a global phase
    return np.stack([np.cos(theta) + 0j, np.sin(theta) * np.exp(1j * phi)], axis=-1)


def lp2_min(A, b):
    """Minimize ``x + a`` subject to ``A @ [x, a] >= b`` and ``x, a >= 0``, batched.

    Parameters
    ----------
    A : ndarray, shape (B, m, 2)
    b : ndarray, shape (B, m)

    Returns
    -------
    value : ndarray, shape (B,)
        ``inf`` where infeasible.
    x, a : ndarray, shape (B,)
    """
    B = A.shape[0]
    A = np.concatenate([A, np.broadcast_to(np.eye(2), (B, 2, 2))], axis=1)
    b = np.concatenate([b, np.zeros((B, 2))], axis=1)
    m = A.shape[1]
    best = np.full(B, np.inf)
    bx = np.full(B, np.nan)
    ba = np.full(B, np.nan)
    for i, j in itertools.combinations(range(m), 2):
        a11, a12 = A[:, i, 0], A[:, i, 1]
        a21, a22 = A[:, j, 0], A[:, j, 1]
        det = a11 * a22 - a12 * a21
        ok = np.abs(det) > 1e-14 * (np.abs(a11 * a22) + np.abs(a12 * a21) + 1e-300)
        safe = np.where(ok, det, 1.0)
        x = np.where(ok, (b[:, i] * a22 - a12 * b[:, j]) / safe, 0.0)
        a = np.where(ok, (a11 * b[:, j] - a21 * b[:, i]) / safe, 0.0)
        # relative feasibility tolerance so vertices on a constraint count
        lhs = A[:, :, 0] * x[:, None] + A[:, :, 1] * a[:, None]
        scale = np.abs(A[:, :, 0] * x[:, None]) + np.abs(A[:, :, 1] * a[:, None]) + np.abs(b)
        feas = ok & np.all(lhs >= b - 1e-12 * scale, axis=1) & (x >= -1e-15) & (a >= -1e-15)
        val = np.where(feas, x + a, np.inf)
        better = val < best
        best = np.where(better, val, best)
        bx = np.where(better, x, bx)
        ba = np.where(better, a, ba)
    return best, bx, ba


def _lp_data(params: SystemParams, chan: ChannelRealization, u, v, rho):
    """Constraint rows ``A [p_w, p_v] >= b`` for directions ``u, v`` and split ``rho``.

    The power caps are left out: they bound the objective itself, so the
    capped optimum is the uncapped one when that fits under the cap and
    infeasible otherwise. Searching the uncapped problem also gives the
    search a finite merit at points whose power exceeds the cap.
    """
    h, g = chan.h, chan.g[0]
    hu = np.abs(u @ h.conj()) ** 2
    hv = np.abs(v @ h.conj()) ** 2
    gu = np.abs(u @ g.conj()) ** 2
    gv = np.abs(v @ g.conj()) ** 2
    gam, tol = params.gamma_req, params.gamma_tol[0]
    sa, ss = params.sigma_ant2, params.sigma_s2
    rows, rhs = [], []
    rows.append(np.stack([hu, -gam * hv], -1))
    rhs.append(gam * (sa + ss / rho))
    rows.append(np.stack([-gu, tol * gv], -1))
    rhs.append(np.broadcast_to(-tol * (sa + ss), hu.shape))
    if params.p_min > 0:
        rows.append(np.stack([hu, hv], -1))
        rhs.append(params.p_min / (params.eta * (1.0 - rho)) - sa)
    if params.p_min_k[0] > 0:
        rows.append(np.stack([gu, gv], -1))
        rhs.append(np.broadcast_to(params.p_min_k[0] / params.eta - sa, hu.shape))
    A = np.stack(rows, axis=1)
    b = np.stack([np.broadcast_to(r, hu.shape) for r in rhs], axis=1)
    return A, b


@dataclass
class GridResult:
    objective: float
    theta_w: float
    phi_w: float
    theta_v: float
    phi_v: float
    rho: float
    p_w: float
    p_v: float
    evaluations: int

    def solution(self) -> BeamformingSolution:
        if not np.isfinite(self.objective):
            return BeamformingSolution.empty(2, SolutionStatus.INFEASIBLE, "Grid")
        u = _direction(self.theta_w, self.phi_w)
        v = _direction(self.theta_v, self.phi_v)
        W = self.p_w * np.outer(u, u.conj())
        V = self.p_v * np.outer(v, v.conj())
        return BeamformingSolution.from_matrices(W, V, self.rho, scheme="Grid",
                                                 w_extracted=math.sqrt(self.p_w) * u, rank_ratio=0.0)


def _evaluate(params, chan, pts):
    # pts: (B, 5) columns theta_w, phi_w, theta_v, phi_v, rho
    u = _direction(pts[:, 0], pts[:, 1])
    v = _direction(pts[:, 2], pts[:, 3])
    A, b = _lp_data(params, chan, u, v, pts[:, 4])
    return lp2_min(A, b)


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _profile_rho(params, chan, ang, scan: int = 9, rho_tol: float = 1e-5):
    """Best ``rho`` for each row of directions ``ang`` (B, 4).

    For fixed directions the optimal power is convex in ``rho``: a short scan
    brackets the minimum and a batched golden-section search narrows it.
    Returns ``(value, x, a, rho)``.
    """
    B = len(ang)

    def f(rho):
        return _evaluate(params, chan, np.column_stack([ang, rho]))

    grid = np.linspace(0.0, 1.0, scan + 2)[1:-1]
    vals = np.stack([f(np.full(B, r))[0] for r in grid], axis=1)
    k = np.argmin(vals, axis=1)
    h = grid[1] - grid[0]
    lo = np.clip(grid[k] - h, 1e-6, 1.0 - 1e-6)
    hi = np.clip(grid[k] + h, 1e-6, 1.0 - 1e-6)
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c)[0], f(d)[0]
    while np.max(hi - lo) > rho_tol:
        left = fc <= fd
        lo = np.where(left, lo, c)
        hi = np.where(left, d, hi)
        new_c = np.where(left, hi - _INVPHI * (hi - lo), d)
        new_d = np.where(left, c, lo + _INVPHI * (hi - lo))
        fp = f(np.where(left, new_c, new_d))[0]
        fc, fd = np.where(left, fp, fd), np.where(left, fc, fp)
        c, d = new_c, new_d
    rho = np.where(fc <= fd, c, d)
    # a scan point can still win when the feasible interval is narrower than the bracket
    rho = np.where(vals[np.arange(B), k] < np.minimum(fc, fd), grid[k], rho)
    val, x, a = f(rho)
    return val, x, a, rho


def _coarse_axes(coarse):
    axes = []
    for i, n in enumerate(coarse):
        if i in (1, 3):
            axes.append(np.linspace(0.0, _TWO_PI, n, endpoint=False))
        else:
            axes.append(np.linspace(0.0, _HALF_PI, n))
    step = np.array([_HALF_PI / (coarse[0] - 1), _TWO_PI / coarse[1], _HALF_PI / (coarse[2] - 1),
                     _TWO_PI / coarse[3]])
    return axes, step


_OFFSETS = np.array(list(itertools.product((-1, 0, 1), repeat=4)), dtype=float)


def _wrap(ang):
    ang = ang.copy()
    ang[:, 0] = np.clip(ang[:, 0], 0.0, _HALF_PI)
    ang[:, 2] = np.clip(ang[:, 2], 0.0, _HALF_PI)
    ang[:, 1] %= _TWO_PI
    ang[:, 3] %= _TWO_PI
    return ang


def brute_force(params: SystemParams, chan: ChannelRealization, resolution: float = 1e-2,
                coarse: tuple = (13, 24, 7, 12), starts: int = 8, max_moves: int = 100
                ) -> GridResult:
    """Grid search for ``N_t = 2`` and a single idle receiver.

    The two directions are searched on a coarse grid, then the ``starts``
    best distinct beam directions are refined by pattern search with halving
    steps down to ``resolution`` of each angle's range. ``rho`` is profiled
    out at every point (:func:`_profile_rho`) and the powers come from the
    exact LP, so the only grid error is in the angles.

    Parameters
    ----------
    resolution : float
        Final angular step as a fraction of each angle's range.
    coarse : tuple
        Initial points per axis (theta_w, phi_w, theta_v, phi_v); doubled
        once if no coarse point is feasible.
    starts : int
        Number of independent refinements.
    max_moves : int
        Pattern moves allowed per level before the step is halved.
    """
    if params.n_t != 2 or params.k_receivers != 2:
        raise ValueError("brute force is implemented for N_t = 2 and K = 2 only")
    spans = np.array([_HALF_PI, _TWO_PI, _HALF_PI, _TWO_PI])
    evals = 0

    def run(ang):
        nonlocal evals
        evals += len(ang)
        return _profile_rho(params, chan, ang)

    for _ in range(2):
        axes, step = _coarse_axes(coarse)
        ang = np.array(np.meshgrid(*axes, indexing="ij")).reshape(4, -1).T
        val, x, a, rho = run(ang)
        if np.any(np.isfinite(val)):
            break
        coarse = tuple(2 * n - (1 if i in (0, 2) else 0) for i, n in enumerate(coarse))
    # best cell per beam direction, then the best directions
    per_w = val.reshape(len(axes[0]) * len(axes[1]), -1)
    cell = np.argmin(per_w, axis=1)
    idx = np.arange(per_w.shape[0]) * per_w.shape[1] + cell
    idx = idx[np.argsort(val[idx], kind="stable")][:starts]
    idx = idx[np.isfinite(val[idx])]
    if idx.size == 0:
        return GridResult(math.inf, *([math.nan] * 7), evals)

    target = resolution * spans
    best = None
    for i in idx:
        p, v, px, pa, pr = ang[i], val[i], x[i], a[i], rho[i]
        st = step.copy()
        while True:
            for _ in range(max_moves):
                cand = _wrap(p[None, :] + _OFFSETS * st)
                cv, cx, ca, cr = run(cand)
                j = int(np.argmin(cv))
                if not cv[j] < v * (1.0 - 1e-12):
                    break
                p, v, px, pa, pr = cand[j], cv[j], cx[j], ca[j], cr[j]
            if np.all(st <= target * (1.0 + 1e-12)):
                break
            st = np.maximum(st / 2.0, target)
        if best is None or v < best[1]:
            best = (p, v, px, pa, pr)
    p, v, px, pa, pr = best
    if v > params.power_cap * (1.0 + 1e-12):
        return GridResult(math.inf, *([math.nan] * 7), evals)
    return GridResult(float(v), *map(float, p), float(pr), float(px), float(pa), evals)


def golden_section_rho(params: SystemParams, chan: ChannelRealization, tol: float = 1e-6,
                       scan: int = 21, kind: EncodingKind = EncodingKind.RELAXED):
    """Minimize the fixed-``rho`` optimum over ``rho`` in (0, 1).

    The optimal value is convex in ``rho`` (partial minimization of a
    jointly convex problem), so after a coarse scan locates a feasible
    bracket a golden-section search converges to the minimum.

    Returns
    -------
    (objective, rho, evaluations); objective is inf if no scanned ``rho`` is feasible
    (a denser, edge-refined scan is tried before giving up).
    """
    cache = {}

    def f(r):
        if r not in cache:
            sol, _ = solve_encoding(build_fixed_rho(params, chan, r, kind))
            cache[r] = sol.objective if sol.has_point else math.inf
        return cache[r]

    grid = np.linspace(0.0, 1.0, scan + 2)[1:-1]
    vals = np.array([f(float(r)) for r in grid])
    if not np.any(np.isfinite(vals)):
        # the feasible interval can be narrow and hug either end; refine there
        edge = np.geomspace(1e-4, grid[0], scan)
        extra = np.concatenate([edge, 1.0 - edge, np.linspace(0.0, 1.0, 8 * scan + 2)[1:-1]])
        grid = np.unique(np.concatenate([grid, extra]))
        vals = np.array([f(float(r)) for r in grid])
        if not np.any(np.isfinite(vals)):
            return math.inf, math.nan, len(cache)
    k = int(np.argmin(vals))
    a = grid[k - 1] if k > 0 else 1e-9
    b = grid[k + 1] if k + 1 < len(grid) else 1.0 - 1e-9
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    r = c if fc <= fd else d
    return min(fc, fd), float(r), len(cache)
