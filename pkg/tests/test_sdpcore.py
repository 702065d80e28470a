import numpy as np
import pytest

from secure_swipt.sdpcore import (
    Block, BlockKind, SdpProblem, SdpStatus, StructureError, complex_structure, dump_problem,
    dump_solution, embed_hermitian, extract_complex, load_problem, solve,
)

from conftest import random_hermitian


def _sym(rng, n):
    A = rng.standard_normal((n, n))
    return 0.5 * (A + A.T)


def random_instance(rng, n=6, m=5):
    """Strictly feasible primal and dual: b = A(X0), C = S0 + A*(y0)."""
    A = np.array([_sym(rng, n) for _ in range(m)])
    G = rng.standard_normal((n, n))
    X0 = G @ G.T + np.eye(n)
    G = rng.standard_normal((n, n))
    S0 = G @ G.T + np.eye(n)
    y0 = rng.standard_normal(m)
    b = np.tensordot(A, X0, axes=([1, 2], [0, 1]))
    C = S0 + np.tensordot(y0, A, axes=1)
    return SdpProblem([Block(n)], [C], [A], b)


def admm_reference(prob, rho=1.0, iters=40000):
    """Plain ADMM on X = Z with an affine projection and a PSD projection."""
    C, A, b = prob.C[0], prob.A[0], prob.b
    n, m = C.shape[0], b.size
    Am = A.reshape(m, -1)
    AAt = Am @ Am.T
    Z = np.eye(n)
    U = np.zeros((n, n))
    for _ in range(iters):
        V = (Z - U - C / rho).ravel()
        X = (V - Am.T @ np.linalg.solve(AAt, Am @ V - b)).reshape(n, n)
        w, Q = np.linalg.eigh(X + U)
        Z = (Q * np.maximum(w, 0)) @ Q.T
        U = U + X - Z
    return float(np.sum(C * Z))


class TestSolver:
    def test_diagonal(self):
        # min Tr X, X11 >= 1, X22 >= 2 written with a slack diagonal block
        E = lambda i, j: np.outer(np.eye(2)[i], np.eye(2)[j])
        A0 = np.array([E(0, 0), E(1, 1)])
        A1 = np.array([[-1.0, 0.0], [0.0, -1.0]])
        prob = SdpProblem([Block(2), Block(2, BlockKind.DIAGONAL)], [np.eye(2), np.zeros(2)],
                          [A0, A1], [1.0, 2.0])
        sol = solve(prob)
        assert sol.status is SdpStatus.OPTIMAL
        assert sol.primal_objective == pytest.approx(3.0, abs=1e-7)
        assert np.allclose(sol.X[0], np.diag([1, 2]), atol=1e-6)

    def test_contradictory_equalities(self):
        prob = SdpProblem([Block(1)], [np.ones((1, 1))], [np.ones((2, 1, 1))], [1.0, 2.0])
        sol = solve(prob)
        assert sol.status is SdpStatus.PRIMAL_INFEASIBLE
        # Farkas ray: b'y = 1 with -A*(y) PSD
        assert prob.b @ sol.y == pytest.approx(1.0)
        assert -np.tensordot(sol.y, prob.A[0], axes=1)[0, 0] >= -1e-9

    def test_dual_infeasible(self):
        # min -x, x >= 0 with no constraint binding x
        prob = SdpProblem([Block(2, BlockKind.DIAGONAL)], [np.array([-1.0, 0.0])],
                          [np.array([[0.0, 1.0]])], [1.0])
        assert solve(prob).status is SdpStatus.DUAL_INFEASIBLE

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_random_against_first_order(self, seed):
        prob = random_instance(np.random.default_rng(seed))
        sol = solve(prob)
        assert sol.status is SdpStatus.OPTIMAL
        r = sol.residuals
        assert max(r["primal"], r["dual"]) <= 1e-8
        assert abs(sol.primal_objective - sol.dual_objective) <= 1e-8 * (1 + abs(sol.primal_objective))
        ref = admm_reference(prob)
        assert sol.primal_objective == pytest.approx(ref, rel=1e-4)

    def test_weak_duality(self):
        prob = random_instance(np.random.default_rng(11))
        sol = solve(prob)
        assert sol.primal_objective >= sol.dual_objective - 1e-8 * (1 + abs(sol.primal_objective))

    def test_scaling(self):
        prob = random_instance(np.random.default_rng(3))
        base = solve(prob)
        alpha = 7.5
        pb = SdpProblem(prob.blocks, prob.C, prob.A, alpha * prob.b)
        pc = SdpProblem(prob.blocks, [alpha * prob.C[0]], prob.A, prob.b)
        sb, sc = solve(pb), solve(pc)
        rel = lambda a, b: np.linalg.norm(a - b) / np.linalg.norm(b)
        assert rel(sb.X[0], alpha * base.X[0]) <= 1e-4
        assert rel(sc.y, alpha * base.y) <= 1e-4
        assert rel(sb.y, base.y) <= 1e-4
        assert sc.primal_objective == pytest.approx(alpha * base.primal_objective, rel=1e-7)

    def test_iteration_limit(self):
        prob = random_instance(np.random.default_rng(4))
        assert solve(prob, max_iter=2).status is SdpStatus.ITER_LIMIT

    def test_embedded_complex_hand_case(self):
        # min Tr X over Hermitian X >= 0 with h^H X h = 1: X = h h^H / |h|^4
        h = np.array([1.0, 2j])
        hh = np.outer(h, h.conj())
        prob = SdpProblem([Block(4, BlockKind.HERMITIAN)], [embed_hermitian(np.eye(2)) / 2],
                          [embed_hermitian(hh)[None] / 2], [1.0])
        sol = solve(prob)
        assert sol.status is SdpStatus.OPTIMAL
        X = extract_complex(sol.X[0])
        assert np.allclose(X, hh / 25.0, atol=1e-7)
        assert sol.primal_objective == pytest.approx(0.2, rel=1e-8)


class TestValidation:
    def test_non_symmetric_rejected(self):
        C = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            SdpProblem([Block(2)], [C], [np.zeros((1, 2, 2))], [0.0])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            SdpProblem([Block(2)], [np.eye(3)], [np.zeros((1, 2, 2))], [0.0])

    def test_hermitian_block_needs_structure(self):
        C = np.diag([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(ValueError):
            SdpProblem([Block(4, BlockKind.HERMITIAN)], [C], [np.zeros((1, 4, 4))], [0.0])


class TestEmbedding:
    def test_identity(self):
        assert np.array_equal(embed_hermitian(np.eye(3)), np.eye(6))
        assert np.allclose(extract_complex(np.eye(6)), np.eye(3))

    def test_hand_expansion(self):
        M = np.array([[0, -1j], [1j, 0]])
        T = np.array([[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]], float)
        assert np.array_equal(embed_hermitian(M), T)

    def test_eigenvalues_doubled(self):
        M = random_hermitian(np.random.default_rng(0), 4)
        ev = np.linalg.eigvalsh(M)
        assert np.allclose(np.linalg.eigvalsh(embed_hermitian(M)), np.repeat(ev, 2), atol=1e-12)

    def test_inner_product(self):
        rng = np.random.default_rng(1)
        A, X = random_hermitian(rng, 3), random_hermitian(rng, 3)
        lhs = np.sum(embed_hermitian(A) * embed_hermitian(X)) / 2
        assert lhs == pytest.approx(np.trace(A.conj().T @ X).real)

    def test_commutes_with_j(self):
        M = random_hermitian(np.random.default_rng(2), 3)
        T, J = embed_hermitian(M), complex_structure(3)
        assert np.allclose(T @ J, J @ T)

    def test_roundtrip(self):
        rng = np.random.default_rng(3)
        for n in (1, 2, 5):
            M = random_hermitian(rng, n)
            assert np.abs(extract_complex(embed_hermitian(M)) - M).max() <= 1e-12

    def test_perturbation(self):
        rng = np.random.default_rng(4)
        M = random_hermitian(rng, 3, psd=True)
        P = _sym(rng, 6)
        J = complex_structure(3)
        assert np.abs(P @ J - J @ P).max() > 0.1
        X = embed_hermitian(M) + 1e-8 * P
        assert np.abs(extract_complex(X) - M).max() <= 1e-7

    def test_psd_both_ways(self):
        M = random_hermitian(np.random.default_rng(5), 3, psd=True)
        assert np.linalg.eigvalsh(embed_hermitian(M)).min() >= -1e-12
        assert np.linalg.eigvalsh(extract_complex(embed_hermitian(M))).min() >= -1e-12

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError):
            embed_hermitian(np.array([[1, 1j], [1j, 1]]))

    def test_structure_violation(self):
        X = np.diag([1.0, 2.0, 3.0, 4.0])
        with pytest.raises(StructureError):
            extract_complex(X)


class TestDump:
    def test_roundtrip(self):
        prob = random_instance(np.random.default_rng(6), n=3, m=2)
        prob.row_names = ["a", "b"]
        text = dump_problem(prob)
        back = load_problem(text)
        assert back.blocks == prob.blocks
        assert np.allclose(back.C[0], prob.C[0]) and np.allclose(back.A[0], prob.A[0])
        assert np.allclose(back.b, prob.b)
        assert dump_problem(back) == text

    def test_solution_dump_mentions_status(self):
        prob = random_instance(np.random.default_rng(7), n=3, m=2)
        assert "Optimal" in dump_solution(prob, solve(prob))
