"""Small dense block semidefinite programming.

Standard form handled here::

    minimize    sum_j <C_j, X_j>
    subject to  sum_j <A_ij, X_j> = b_i,   i = 1..m
                X_j in K_j

where each cone ``K_j`` is the real symmetric PSD cone, a complex Hermitian
PSD cone stored through its real 2n x 2n embedding, or the nonnegative orthant
("diagonal" block). The dual is ``max b'y  s.t.  C - A*(y) = S in K``.

The solver is a primal-dual path-following method on the homogeneous
self-dual embedding, with Nesterov-Todd scaling and a Mehrotra
predictor-corrector. Everything is dense; the intended problems have a few
blocks of size <= 32 and at most a few dozen equality rows.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg as sla

__all__ = [
    "BlockKind",
    "Block",
    "SdpProblem",
    "SdpSolution",
    "SdpStatus",
    "solve",
    "embed_hermitian",
    "extract_complex",
    "complex_structure",
    "StructureError",
    "dump_problem",
    "load_problem",
    "dump_solution",
]


class BlockKind(str, enum.Enum):
    REAL_SYM = "RealSym"
    HERMITIAN = "HermitianEmbedded"
    DIAGONAL = "Diagonal"


class SdpStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    ILL_POSED = "IllPosed"
    ITER_LIMIT = "IterLimit"
    NUMERICAL_FAILURE = "NumericalFailure"


class StructureError(ValueError):
    """Raised when a real matrix is too far from the embedded-Hermitian form."""


@dataclass(frozen=True)
class Block:
    """One cone of the product. ``dim`` is the real size of the variable."""

    dim: int
    kind: BlockKind = BlockKind.REAL_SYM

    @property
    def is_matrix(self) -> bool:
        return self.kind is not BlockKind.DIAGONAL


# ---------------------------------------------------------------------------
# Hermitian <-> real symmetric embedding
# ---------------------------------------------------------------------------
def complex_structure(n: int) -> np.ndarray:
    """The operator J = [[0, -I], [I, 0]] acting on the 2n embedding."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def embed_hermitian(M, atol: float = 1e-12) -> np.ndarray:
    """Map a Hermitian n x n matrix to ``[[Re M, -Im M], [Im M, Re M]]``.

    The map is an algebra homomorphism, so eigenvalues of the result are those
    of ``M``, each repeated twice, and ``<T(A), T(X)> = 2 Re tr(A^H X)``.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.conj().T).max(initial=0.0) > atol * scale:
        raise ValueError("matrix is not Hermitian")
    re, im = M.real, M.imag
    return np.block([[re, -im], [im, re]])


def extract_complex(X, atol: float = 1e-6) -> np.ndarray:
    """Inverse of :func:`embed_hermitian` after projecting onto the structure.

    The two copies of the real and imaginary parts are averaged, which is the
    orthogonal projection onto matrices commuting with ``J``. Deviation larger
    than ``atol`` (relative to the largest entry) raises :class:`StructureError`.
    """
    X = np.asarray(X, dtype=float)
    n2 = X.shape[0]
    if X.ndim != 2 or n2 != X.shape[1] or n2 % 2:
        raise ValueError("expected a square matrix of even size")
    n = n2 // 2
    X = 0.5 * (X + X.T)
    a, b = X[:n, :n], X[:n, n:]
    c, d = X[n:, :n], X[n:, n:]
    re = 0.5 * (a + d)
    im = 0.5 * (c - b)
    dev = max(np.abs(a - d).max(initial=0.0), np.abs(c + b).max(initial=0.0))
    scale = max(1.0, float(np.abs(X).max(initial=0.0)))
    if dev > 2 * atol * scale:
        raise StructureError(f"embedded block deviates from Hermitian structure by {dev:.3e}")
    out = re + 1j * im
    return 0.5 * (out + out.conj().T)


# ---------------------------------------------------------------------------
# Problem / solution containers
# ---------------------------------------------------------------------------
def _check_symmetric(M: np.ndarray, what: str) -> None:
    if not np.array_equal(M, np.swapaxes(M, -1, -2)):
        raise ValueError(f"{what} is not exactly symmetric")


@dataclass
class SdpProblem:
    """Block SDP in equality standard form.

    Parameters
    ----------
    blocks : sequence of Block
    C : list of arrays
        Objective data, ``(n, n)`` for matrix blocks and ``(n,)`` for
        diagonal blocks.
    A : list of arrays
        Constraint data per block, ``(m, n, n)`` or ``(m, n)``.
    b : array (m,)
    row_names : optional list of labels used by the text dump.
    """

    blocks: Sequence[Block]
    C: list
    A: list
    b: np.ndarray
    row_names: Optional[list] = None

    def __post_init__(self):
        self.blocks = tuple(self.blocks)
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        m = self.b.size
        if len(self.C) != len(self.blocks) or len(self.A) != len(self.blocks):
            raise ValueError("C and A must have one entry per block")
        C, A = [], []
        for j, (blk, Cj, Aj) in enumerate(zip(self.blocks, self.C, self.A)):
            Cj = np.asarray(Cj, dtype=float)
            Aj = np.asarray(Aj, dtype=float)
            n = blk.dim
            if blk.is_matrix:
                if Cj.shape != (n, n) or Aj.shape != (m, n, n):
                    raise ValueError(f"block {j}: expected C {(n, n)} and A {(m, n, n)}, "
                                     f"got {Cj.shape} and {Aj.shape}")
                _check_symmetric(Cj, f"C[{j}]")
                _check_symmetric(Aj, f"A[{j}]")
                if blk.kind is BlockKind.HERMITIAN:
                    if n % 2:
                        raise ValueError(f"block {j}: embedded Hermitian block needs even size")
                    J = complex_structure(n // 2)
                    data = np.concatenate([Cj[None], Aj])
                    comm = data @ J - J @ data
                    scale = max(1.0, float(np.abs(data).max(initial=0.0)))
                    if np.abs(comm).max(initial=0.0) > 1e-12 * scale:
                        raise ValueError(f"block {j}: data does not commute with J")
            else:
                if Cj.shape != (n,) or Aj.shape != (m, n):
                    raise ValueError(f"block {j}: expected C {(n,)} and A {(m, n)}")
            C.append(Cj)
            A.append(Aj)
        self.C, self.A = C, A
        if self.row_names is not None and len(self.row_names) != m:
            raise ValueError("row_names length must equal number of rows")

    @property
    def m(self) -> int:
        return self.b.size

    @property
    def degree(self) -> int:
        return sum(blk.dim for blk in self.blocks)

    def apply_A(self, X) -> np.ndarray:
        out = np.zeros(self.m)
        for blk, Aj, Xj in zip(self.blocks, self.A, X):
            if blk.is_matrix:
                out += np.tensordot(Aj, Xj, axes=([1, 2], [0, 1]))
            else:
                out += Aj @ Xj
        return out

    def apply_At(self, y) -> list:
        out = []
        for blk, Aj in zip(self.blocks, self.A):
            out.append(np.tensordot(y, Aj, axes=1))
        return out

    def objective(self, X) -> float:
        return _inner(self.C, X)


@dataclass
class SdpSolution:
    X: list
    y: np.ndarray
    S: list
    status: SdpStatus
    iterations: int
    residuals: dict = field(default_factory=dict)
    primal_objective: float = math.nan
    dual_objective: float = math.nan

    @property
    def optimal(self) -> bool:
        return self.status is SdpStatus.OPTIMAL


def _inner(U, V) -> float:
    return float(sum(np.vdot(u, v) for u, v in zip(U, V)))


def _norm(U) -> float:
    return math.sqrt(sum(float(np.vdot(u, u)) for u in U))


# ---------------------------------------------------------------------------
# Nesterov-Todd scaling, one object per block per iteration
# ---------------------------------------------------------------------------
class _MatScaling:
    """NT scaling G for a matrix block: X = G L G', S = G^-T L G^-1, L diagonal."""

    __slots__ = ("G", "Ginv", "lam", "W")

    def __init__(self, X, S):
        Lx = _factor(X)
        Ls = _factor(S)
        _, sv, Vt = np.linalg.svd(Ls.T @ Lx)
        sv = np.maximum(sv, 1e-300)
        rs = np.sqrt(sv)
        self.G = (Lx @ Vt.T) / rs
        self.Ginv = rs[:, None] * (Vt @ np.linalg.inv(Lx))
        self.lam = sv
        self.W = self.G @ self.G.T

    def H(self, M):
        return self.W @ M @ self.W

    def scale_x(self, dX):
        return self.Ginv @ dX @ self.Ginv.T

    def scale_s(self, dS):
        return self.G.T @ dS @ self.G

    def lyap(self, R):
        # solve L o U = R (Jordan product) then map back: G U G'
        U = 2.0 * R / (self.lam[:, None] + self.lam[None, :])
        return self.G @ U @ self.G.T

    def max_step(self, dXs, dSs):
        r = 1.0 / np.sqrt(self.lam)
        ex = np.linalg.eigvalsh(r[:, None] * dXs * r[None, :])[0]
        es = np.linalg.eigvalsh(r[:, None] * dSs * r[None, :])[0]
        return min(_ratio(ex), _ratio(es))


class _DiagScaling:
    __slots__ = ("g", "lam", "W")

    def __init__(self, x, s):
        self.g = np.sqrt(x / s)
        self.lam = np.sqrt(x * s)
        self.W = self.g * self.g

    def H(self, v):
        return self.W * v

    def scale_x(self, dx):
        return dx / self.g

    def scale_s(self, ds):
        return ds * self.g

    def lyap(self, r):
        return self.g * r / self.lam

    def max_step(self, dxs, dss):
        ex = np.min(dxs / self.lam, initial=np.inf)
        es = np.min(dss / self.lam, initial=np.inf)
        return min(_ratio(ex), _ratio(es))


def _ratio(e) -> float:
    return -1.0 / e if e < 0 else math.inf


def _factor(M):
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        w, Q = np.linalg.eigh(0.5 * (M + M.T))
        w = np.maximum(w, 1e-300)
        return Q * np.sqrt(w)


def _project(blk: Block, M):
    """Symmetrize; embedded Hermitian blocks are also projected onto the J-commutant."""
    if not blk.is_matrix:
        return M
    M = 0.5 * (M + M.T)
    if blk.kind is BlockKind.HERMITIAN:
        n = blk.dim // 2
        P = 0.5 * (M[:n, :n] + M[n:, n:])
        Q = 0.5 * (M[n:, :n] - M[:n, n:])
        M = np.block([[P, -Q], [Q, P]])
    return M


def _identity(blocks):
    return [np.eye(b.dim) if b.is_matrix else np.ones(b.dim) for b in blocks]


def _scaled_sq(sc):
    # L o L for the scaled point, as a block-shaped array
    if isinstance(sc, _MatScaling):
        return np.diag(sc.lam ** 2)
    return sc.lam ** 2


def _jordan(U, V, is_matrix):
    if is_matrix:
        P = U @ V
        return 0.5 * (P + P.T)
    return U * V


def _spd_solve_factory(M):
    """Cholesky of the Schur complement, with a small diagonal shift on failure."""
    d = np.diag(M)
    shift = 0.0
    base = 1e-12 * max(1.0, float(d.max(initial=1.0)))
    for _ in range(8):
        try:
            cf = sla.cho_factor(M + shift * np.eye(M.shape[0]), lower=True, check_finite=False)
            return lambda r: sla.cho_solve(cf, r, check_finite=False)
        except (np.linalg.LinAlgError, ValueError):
            shift = base if shift == 0.0 else shift * 100.0
    lu = sla.lu_factor(M + shift * np.eye(M.shape[0]), check_finite=False)
    return lambda r: sla.lu_solve(lu, r, check_finite=False)


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------
def solve(problem: SdpProblem, tol: float = 1e-8, max_iter: int = 200,
          step_fraction: float = 0.98, verbose: bool = False) -> SdpSolution:
    """Solve a block SDP with the homogeneous self-dual interior-point method.

    Returns an :class:`SdpSolution`. On ``Optimal`` the primal/dual iterates
    are the de-homogenized solution. On ``PrimalInfeasible`` ``y`` (with
    ``S = -A*(y)``) is a normalized Farkas ray with ``b'y = 1``; on
    ``DualInfeasible`` ``X`` is a ray with ``A(X) = 0`` and ``<C, X> = -1``.
    """
    P = problem
    blocks = P.blocks
    m = P.m
    nu = P.degree
    b, C = P.b, P.C
    bnorm = float(np.linalg.norm(b))
    cnorm = _norm(C)

    X = _identity(blocks)
    S = _identity(blocks)
    y = np.zeros(m)
    tau = kappa = 1.0

    status = SdpStatus.ITER_LIMIT
    res = {}
    it = 0
    for it in range(max_iter + 1):
        AX = P.apply_A(X)
        Aty = P.apply_At(y)
        cx = P.objective(X)
        by = float(b @ y)
        rp = tau * b - AX
        rd = [tau * Cj - Atj - Sj for Cj, Atj, Sj in zip(C, Aty, S)]
        rg = kappa + cx - by
        mu = (_inner(X, S) + tau * kappa) / (nu + 1)

        pres = float(np.linalg.norm(rp)) / tau / (1.0 + bnorm)
        dres = _norm(rd) / tau / (1.0 + cnorm)
        pobj, dobj = cx / tau, by / tau
        gap = abs(pobj - dobj) / (1.0 + abs(pobj))
        res = {"primal": pres, "dual": dres, "gap": gap, "mu": mu, "tau": tau, "kappa": kappa}
        if verbose:
            print(f"{it:3d} pobj={pobj: .8e} dobj={dobj: .8e} pres={pres:.2e} "
                  f"dres={dres:.2e} gap={gap:.2e} tau={tau:.2e} kappa={kappa:.2e}")
        if pres <= tol and dres <= tol and gap <= tol:
            status = SdpStatus.OPTIMAL
            break
        # infeasibility certificates
        if by > 0:
            ray = [Atj + Sj for Atj, Sj in zip(Aty, S)]
            if _norm(ray) / max(1.0, cnorm) <= tol * by / max(1.0, bnorm):
                status = SdpStatus.PRIMAL_INFEASIBLE
                break
        if cx < 0:
            if float(np.linalg.norm(AX)) / max(1.0, bnorm) <= tol * (-cx) / max(1.0, cnorm):
                status = SdpStatus.DUAL_INFEASIBLE
                break
        if mu < tol * 1e-4 and tau < tol * 1e-2 * min(1.0, kappa):
            status = SdpStatus.ILL_POSED
            break
        if it == max_iter:
            break
        if not all(np.all(np.isfinite(v)) for v in X + S) or not np.isfinite(tau * kappa):
            status = SdpStatus.NUMERICAL_FAILURE
            break

        try:
            scal = [(_MatScaling if blk.is_matrix else _DiagScaling)(Xj, Sj)
                    for blk, Xj, Sj in zip(blocks, X, S)]
        except (np.linalg.LinAlgError, ValueError, FloatingPointError):
            status = SdpStatus.NUMERICAL_FAILURE
            break

        # Schur complement M = A H A*
        M = np.zeros((m, m))
        for blk, Aj, sc in zip(blocks, P.A, scal):
            if blk.is_matrix:
                WA = sc.W @ Aj @ sc.W
                M += np.tensordot(Aj, WA, axes=([1, 2], [1, 2]))
            else:
                M += (Aj * sc.W) @ Aj.T
        M = 0.5 * (M + M.T)
        msolve = _spd_solve_factory(M)
        HC = [sc.H(Cj) for sc, Cj in zip(scal, C)]
        u = P.apply_A(HC)
        p = msolve(u + b)
        cHc = _inner(C, HC)
        den = float((u - b) @ p) - cHc - kappa / tau

        def direction(r1, r2, r3, r4, r5):
            Hr2 = [sc.H(v) for sc, v in zip(scal, r2)]
            t = [a - c for a, c in zip(r4, Hr2)]
            q = msolve(r1 - P.apply_A(t))
            dtau = (r3 - r5 / tau - _inner(C, t) - float((u - b) @ q)) / den
            dy = q + dtau * p
            Atdy = P.apply_At(dy)
            dS = [v - a + dtau * Cj for v, a, Cj in zip(r2, Atdy, C)]
            dX = [v - sc.H(s) for v, sc, s in zip(r4, scal, dS)]
            dkappa = (r5 - kappa * dtau) / tau
            return dX, dy, dS, dtau, dkappa

        def max_step(dX, dS, dtau, dkappa):
            a = math.inf
            scaled = []
            for sc, dx, ds in zip(scal, dX, dS):
                dxs, dss = sc.scale_x(dx), sc.scale_s(ds)
                scaled.append((dxs, dss))
                a = min(a, sc.max_step(dxs, dss))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a, scaled

        # predictor
        r4a = [-Xj for Xj in X]
        dXa, dya, dSa, dtaua, dkappaa = direction(rp, rd, -rg, r4a, -tau * kappa)
        alpha_a, scaled_a = max_step(dXa, dSa, dtaua, dkappaa)
        alpha_a = min(1.0, alpha_a)
        sigma = min(1.0, max(0.0, (1.0 - alpha_a) ** 3))

        # corrector
        r4 = []
        for blk, sc, (dxs, dss) in zip(blocks, scal, scaled_a):
            if blk.is_matrix:
                R = sigma * mu * np.eye(blk.dim) - _scaled_sq(sc) - _jordan(dxs, dss, True)
            else:
                R = sigma * mu - _scaled_sq(sc) - dxs * dss
            r4.append(sc.lyap(R))
        r5 = sigma * mu - tau * kappa - dtaua * dkappaa
        g = 1.0 - sigma
        dX, dy, dS, dtau, dkappa = direction(g * rp, [g * v for v in rd], -g * rg, r4, r5)
        alpha, _ = max_step(dX, dS, dtau, dkappa)
        alpha = min(1.0, step_fraction * alpha)
        if not np.isfinite(alpha) or alpha < 1e-10:
            status = SdpStatus.NUMERICAL_FAILURE
            break

        X = [Xj + alpha * d for Xj, d in zip(X, dX)]
        S = [Sj + alpha * d for Sj, d in zip(S, dS)]
        X = [_project(blk, v) for blk, v in zip(blocks, X)]
        S = [_project(blk, v) for blk, v in zip(blocks, S)]
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa

    if status is SdpStatus.PRIMAL_INFEASIBLE:
        by = float(b @ y)
        Aty = P.apply_At(y)
        return SdpSolution([Xj * 0.0 for Xj in X], y / by, [-a / by for a in Aty], status, it,
                           res, math.nan, 1.0)
    if status is SdpStatus.DUAL_INFEASIBLE:
        cx = P.objective(X)
        return SdpSolution([Xj / -cx for Xj in X], y * 0.0, [Sj * 0.0 for Sj in S], status, it,
                           res, -1.0, math.nan)
    Xo = [Xj / tau for Xj in X]
    So = [Sj / tau for Sj in S]
    yo = y / tau
    return SdpSolution(Xo, yo, So, status, it, res, P.objective(Xo), float(b @ yo))


# ---------------------------------------------------------------------------
# Text dump: SDPA-like sparse triplets with optional row names
# ---------------------------------------------------------------------------
_KIND_CODES = {BlockKind.REAL_SYM: "S", BlockKind.HERMITIAN: "H", BlockKind.DIAGONAL: "D"}


def dump_problem(problem: SdpProblem, zero_tol: float = 0.0) -> str:
    """Render a problem as text.

    Layout: ``blocks`` line, one ``block <idx> <kind> <dim>`` per block, the
    ``rows`` count, ``rhs`` values, ``name`` lines, then ``entry <row> <block>
    <i> <j> <value>`` triplets (row 0 is the objective, indices 1-based, upper
    triangle only).
    """
    P = problem
    lines = ["# sdp problem", f"blocks {len(P.blocks)}"]
    for j, blk in enumerate(P.blocks, 1):
        lines.append(f"block {j} {_KIND_CODES[blk.kind]} {blk.dim}")
    lines.append(f"rows {P.m}")
    lines.append("rhs " + " ".join(repr(float(v)) for v in P.b))
    if P.row_names:
        for i, name in enumerate(P.row_names, 1):
            lines.append(f"name {i} {name}")
    for row in range(P.m + 1):
        for j, blk in enumerate(P.blocks):
            data = P.C[j] if row == 0 else P.A[j][row - 1]
            if blk.is_matrix:
                ii, jj = np.nonzero(np.triu(np.abs(data) > zero_tol))
                for a, c in zip(ii, jj):
                    lines.append(f"entry {row} {j + 1} {a + 1} {c + 1} {float(data[a, c])!r}")
            else:
                for a in np.nonzero(np.abs(data) > zero_tol)[0]:
                    lines.append(f"entry {row} {j + 1} {a + 1} {a + 1} {float(data[a])!r}")
    return "\n".join(lines) + "\n"


def load_problem(text: str) -> SdpProblem:
    """Parse the output of :func:`dump_problem`."""
    codes = {v: k for k, v in _KIND_CODES.items()}
    blocks, b, names, entries = [], None, {}, []
    m = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *rest = line.split()
        if key == "block":
            blocks.append(Block(int(rest[2]), codes[rest[1]]))
        elif key == "rows":
            m = int(rest[0])
        elif key == "rhs":
            b = np.array([float(v) for v in rest])
        elif key == "name":
            names[int(rest[0])] = rest[1]
        elif key == "entry":
            entries.append((int(rest[0]), int(rest[1]), int(rest[2]), int(rest[3]), float(rest[4])))
        elif key != "blocks":
            raise ValueError(f"unrecognized line: {raw!r}")
    if m is None:
        raise ValueError("missing 'rows' line")
    if b is None:
        b = np.zeros(m)
    C = [np.zeros((bl.dim, bl.dim)) if bl.is_matrix else np.zeros(bl.dim) for bl in blocks]
    A = [np.zeros((m, bl.dim, bl.dim)) if bl.is_matrix else np.zeros((m, bl.dim)) for bl in blocks]
    for row, j, a, c, v in entries:
        bl = blocks[j - 1]
        target = C[j - 1] if row == 0 else A[j - 1][row - 1]
        if bl.is_matrix:
            target[a - 1, c - 1] = v
            target[c - 1, a - 1] = v
        else:
            target[a - 1] = v
    row_names = [names.get(i, f"r{i}") for i in range(1, m + 1)] if names else None
    return SdpProblem(blocks, C, A, b, row_names)


def dump_solution(problem: SdpProblem, sol: SdpSolution, zero_tol: float = 1e-14) -> str:
    """Render a solution as text: status line, ``y`` values, then
    ``X``/``S`` triplets per block (same indexing as :func:`dump_problem`)."""
    lines = ["# sdp solution", f"status {sol.status.value}", f"iterations {sol.iterations}",
             f"pobj {float(sol.primal_objective)!r}", f"dobj {float(sol.dual_objective)!r}",
             "y " + " ".join(repr(float(v)) for v in sol.y)]
    for tag, mats in (("X", sol.X), ("S", sol.S)):
        for j, (blk, data) in enumerate(zip(problem.blocks, mats)):
            if blk.is_matrix:
                ii, jj = np.nonzero(np.triu(np.abs(data) > zero_tol))
                for a, c in zip(ii, jj):
                    lines.append(f"{tag} {j + 1} {a + 1} {c + 1} {float(data[a, c])!r}")
            else:
                for a in np.nonzero(np.abs(data) > zero_tol)[0]:
                    lines.append(f"{tag} {j + 1} {a + 1} {a + 1} {float(data[a])!r}")
    return "\n".join(lines) + "\n"
