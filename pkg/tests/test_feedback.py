import numpy as np
import pytest

from bosonic_ising.feedback import (
    DensityMatrixViolation, FeedbackParams, build_site_operators, check_density_matrix,
    classical_zero_temperature_generator, diagonal_generator, diagonal_populations,
    dissipator, evolve_density_matrix, feedback_generator_residual, ising_hamiltonian,
    lindblad_rhs, offdiagonal_mass,
)
from bosonic_ising.master import StateIndexer


def random_state(d, rng):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def random_J(M, rng):
    A = rng.normal(size=(M, M))
    J = A + A.T
    np.fill_diagonal(J, 0)
    return J


class TestOperators:
    def test_single_boson(self):
        ops = build_site_operators(1, 1)
        np.testing.assert_array_equal(ops.Sz[0], np.diag([-1.0, 1.0]))
        np.testing.assert_array_equal(ops.Sminus[0], [[0, 1], [0, 0]])

    def test_two_bosons(self):
        ops = build_site_operators(2, 1)
        np.testing.assert_allclose(ops.Sminus[0], [[0, np.sqrt(2), 0], [0, 0, np.sqrt(2)], [0, 0, 0]])

    def test_commutator_gives_sz(self):
        # [S^+, S^-] = S^z for the occupation representation used here
        for N in (1, 2, 5):
            ops = build_site_operators(N, 1)
            Sp, Sm = ops.Splus[0], ops.Sminus[0]
            np.testing.assert_allclose(Sp @ Sm - Sm @ Sp, ops.Sz[0], atol=1e-12)

    def test_ordering_matches_indexer(self):
        ops = build_site_operators(2, 3)
        idx = StateIndexer(2, 3)
        for n, k in enumerate(idx.all_states()):
            for i in range(3):
                assert ops.Sz[i][n, n] == 2 * k[i] - 2

    def test_sites_commute(self):
        ops = build_site_operators(2, 2)
        A, B = ops.Sminus[0], ops.Splus[1]
        np.testing.assert_allclose(A @ B, B @ A, atol=1e-14)

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            build_site_operators(7, 5)


class TestFeedbackIdentity:
    @pytest.mark.parametrize("N,M", [(1, 2), (2, 2), (1, 3)])
    def test_residual(self, N, M, rng):
        ops = build_site_operators(N, M)
        worst = 0.0
        for _ in range(100):
            worst = max(worst, feedback_generator_residual(random_J(M, rng), random_state(ops.dim, rng), ops,
                                                           Gamma=rng.uniform(0.1, 3)))
        assert worst < 1e-12

    def test_infers_operators(self, rng):
        J = random_J(2, rng)
        assert feedback_generator_residual(J, random_state(9, rng)) < 1e-12

    def test_asymmetric_rejected(self, rng):
        J = np.array([[0, 1.0], [1.0 + 1e-9, 0]])
        with pytest.raises(ValueError):
            feedback_generator_residual(J, np.eye(4) / 4)

    def test_hamiltonian_counts_ordered_pairs(self):
        ops = build_site_operators(1, 2)
        H = ising_hamiltonian(ops, [[0, 1.5], [1.5, 0]])
        # S1 S2 products over (-,-), (+,-), (-,+), (+,+) times 2 * 1.5
        np.testing.assert_allclose(np.diag(H), [3, -3, -3, 3])


class TestLindblad:
    def test_maximally_mixed_single_boson(self):
        ops = build_site_operators(1, 1)
        out = lindblad_rhs(ops, FeedbackParams(alpha=1.0), np.zeros((1, 1)), np.eye(2) / 2)
        np.testing.assert_allclose(out, np.diag([0.5, -0.5]), atol=1e-15)

    def test_excited_decays(self):
        ops = build_site_operators(1, 1)
        out = lindblad_rhs(ops, FeedbackParams(alpha=1.0), np.zeros((1, 1)), np.diag([0.0, 1.0]))
        np.testing.assert_allclose(out, np.diag([1.0, -1.0]), atol=1e-15)

    def test_dissipator_traceless(self, rng):
        rho = random_state(4, rng)
        C = rng.normal(size=(4, 4))
        assert abs(np.trace(dissipator(C, rho))) < 1e-13

    @pytest.mark.parametrize("params", [FeedbackParams(), FeedbackParams(1.3, 0.5, 0.7, 0.4),
                                        FeedbackParams(0.0, 1.0, 2.0, 1.0)])
    def test_trace_and_hermiticity_preserved(self, params, rng):
        ops = build_site_operators(2, 2)
        out = lindblad_rhs(ops, params, random_J(2, rng), random_state(ops.dim, rng))
        assert abs(np.trace(out)) < 1e-12
        np.testing.assert_allclose(out, out.conj().T, atol=1e-12)

    def test_params_validation(self):
        with pytest.raises(ValueError):
            FeedbackParams(Gamma=1.0, gamma_meas=0.0)
        with pytest.raises(ValueError):
            FeedbackParams(eta=0.0)

    def test_shape_mismatch(self):
        ops = build_site_operators(1, 2)
        with pytest.raises(ValueError):
            lindblad_rhs(ops, FeedbackParams(), np.zeros((2, 2)), np.eye(3) / 3)


class TestEvolution:
    def test_matches_classical_relaxation(self):
        from scipy.linalg import expm

        N, M = 4, 1
        ops = build_site_operators(N, M)
        p0 = np.zeros(N + 1)
        p0[N] = 1.0
        t = np.linspace(0, 0.5, 6)
        traj = evolve_density_matrix(ops, FeedbackParams(alpha=1.0), np.zeros((1, 1)), np.diag(p0), t)
        G = classical_zero_temperature_generator(N, M, 1.0)
        for tk, rho in zip(t, traj.rho):
            np.testing.assert_allclose(diagonal_populations(rho), expm(G * tk) @ p0, atol=1e-6)

    def test_zero_length(self, rng):
        ops = build_site_operators(1, 2)
        rho0 = random_state(4, rng)
        traj = evolve_density_matrix(ops, FeedbackParams(), random_J(2, rng), rho0, [0.0])
        np.testing.assert_array_equal(traj.rho[0], rho0)

    def test_dephasing_kills_coherence(self):
        ops = build_site_operators(1, 2)
        J = np.array([[0, 1.0], [1.0, 0]])
        psi = np.ones(4) / 2
        params = FeedbackParams(Gamma=1.0, eta=1.0, gamma_meas=1.0, alpha=0.0)
        traj = evolve_density_matrix(ops, params, J, np.outer(psi, psi), [0.0, 1.0, 5.0])
        mass = [offdiagonal_mass(r) for r in traj.rho]
        assert mass[0] > mass[1] > mass[2]
        # populations frozen without decay
        np.testing.assert_allclose(np.real(np.diag(traj.rho[-1])), 0.25, atol=1e-8)

    def test_invalid_start(self):
        ops = build_site_operators(1, 1)
        with pytest.raises(DensityMatrixViolation):
            evolve_density_matrix(ops, FeedbackParams(), np.zeros((1, 1)), np.diag([1.5, -0.5]), [0, 1])


class TestDiagonalClosure:
    def test_populations(self):
        p = diagonal_populations(np.diag([0.25, 0.75]) + 0.1j * np.array([[0, 1], [-1, 0]]))
        np.testing.assert_allclose(p, [0.25, 0.75])
        with pytest.raises(DensityMatrixViolation):
            diagonal_populations(np.diag([0.5, 0.6]))

    def test_check_density_matrix(self):
        check_density_matrix(np.eye(3) / 3)
        with pytest.raises(DensityMatrixViolation):
            check_density_matrix(np.array([[0.5, 0.6], [0.6, 0.5]]))

    def test_diagonal_states_close(self, rng):
        ops = build_site_operators(2, 2)
        params = FeedbackParams(0.8, 0.6, 0.5, 1.0)
        J = random_J(2, rng)
        G = diagonal_generator(ops, params, J)
        for _ in range(10):
            p = rng.dirichlet(np.ones(ops.dim))
            out = lindblad_rhs(ops, params, J, np.diag(p))
            assert offdiagonal_mass(out) < 1e-10
            np.testing.assert_allclose(np.real(np.diag(out)), G @ p, atol=1e-12)

    @pytest.mark.parametrize("N,M", [(1, 1), (3, 1), (2, 2)])
    def test_generator_correspondence(self, N, M, rng):
        ops = build_site_operators(N, M)
        params = FeedbackParams(1.0, 1.0, 0.3, 0.7)
        G = diagonal_generator(ops, params, random_J(M, rng))
        np.testing.assert_allclose(G, classical_zero_temperature_generator(N, M, 0.7), atol=1e-12)
