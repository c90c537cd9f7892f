"""Directions, steering, fading draws, channel composition, and the spectrum."""

import math

import numpy as np
import pytest

from mimo_sim.array_geometry import AntennaLayout, make_regular, sample_bpp
from mimo_sim.channel_model import (
    compose_channel,
    correlation,
    draw_directions,
    draw_large_scale,
    draw_small_scale,
    matrix_correlation_coefficient,
    steering_element,
    steering_matrix,
)
from mimo_sim.em_coupling import coupling_for_layout
from mimo_sim.errors import InvalidArgumentError


class TestDrawDirections:
    def test_ranges(self):
        dirs = draw_directions(1, seed=4)
        assert 0 <= dirs.phi[0] < 2 * math.pi
        assert -math.pi / 2 <= dirs.theta[0] <= math.pi / 2

    def test_uniformity(self):
        dirs = draw_directions(100_000, seed=5)
        se = 1.0 / math.sqrt(2 * dirs.P)  # std of cos(phi) is 1/sqrt(2)
        assert abs(np.mean(np.cos(dirs.phi))) < 3 * se

    def test_deterministic(self):
        a, b = draw_directions(50, seed=9), draw_directions(50, seed=9)
        assert np.array_equal(a.phi, b.phi) and np.array_equal(a.theta, b.theta)

    def test_cosine_flag(self):
        dirs = draw_directions(200_000, seed=6, elevation="cosine")
        # cosine-weighted elevation means sin(theta) is uniform on [-1, 1]
        s = np.sin(dirs.theta)
        assert abs(np.mean(s)) < 0.01
        assert np.var(s) == pytest.approx(1.0 / 3.0, abs=0.01)
        with pytest.raises(InvalidArgumentError):
            draw_directions(5, seed=0, elevation="bogus")


class TestSteeringElement:
    def test_zero_elevation(self):
        assert steering_element(3.0, 1.0, 2.0, 0.0, 0.12) == 1.0 + 0.0j

    def test_center_reference(self):
        assert steering_element(0.0, 0.3, 1.1, 0.7, 0.12) == 1.0 + 0.0j

    def test_quarter_wavelength(self):
        lam = 0.12
        val = steering_element(lam / 4, 0.0, 0.0, math.pi / 2, lam)
        assert val == pytest.approx(-1j, abs=1e-12)

    def test_invalid_wavelength(self):
        with pytest.raises(InvalidArgumentError):
            steering_element(1.0, 0.0, 0.0, 0.0, 0.0)


class TestSteeringMatrix:
    def test_all_ones_at_zero_elevation(self, lam):
        lay = sample_bpp(6, lam, seed=1)
        dirs = draw_directions(10, seed=2)
        dirs = type(dirs)(phi=dirs.phi, theta=np.zeros(10))
        A = steering_matrix(lay, dirs, lam)
        assert np.allclose(A, np.ones((6, 10)))

    def test_column_norms(self, lam):
        lay = sample_bpp(16, lam, seed=3)
        A = steering_matrix(lay, draw_directions(32, seed=4), lam)
        assert np.allclose(np.linalg.norm(A, axis=0), math.sqrt(16))
        assert np.allclose(np.abs(A), 1.0)

    def test_matches_elementwise(self, lam):
        lay = sample_bpp(2, lam, seed=5)
        dirs = draw_directions(7, seed=6)
        A = steering_matrix(lay, dirs, lam)
        for m in range(2):
            for q in range(7):
                ref = steering_element(
                    float(lay.d[m]), float(lay.psi[m]), float(dirs.phi[q]),
                    float(dirs.theta[q]), lam,
                )
                assert A[m, q] == pytest.approx(ref, abs=1e-14)


class TestFadingDraws:
    def test_small_scale_stats(self):
        H = draw_small_scale(400, 250, seed=8)
        v = np.abs(H.ravel()) ** 2
        assert np.mean(v) == pytest.approx(1.0, abs=3 / math.sqrt(v.size))
        assert abs(np.mean(H.ravel())) < 3 / math.sqrt(v.size)

    def test_small_scale_deterministic(self):
        assert np.array_equal(draw_small_scale(5, 3, seed=1), draw_small_scale(5, 3, seed=1))

    def test_large_scale_formula(self):
        # no shadowing, l pinned by a degenerate range
        beta = draw_large_scale(4, 10.0, (100.0, 100.0), 3.8, 0.0, seed=2)
        assert np.allclose(beta, 10.0**-3.8, rtol=1e-12)
        beta = draw_large_scale(1, 10.0, (10.0, 10.0), 3.8, 0.0, seed=3)
        assert beta[0] == pytest.approx(1.0, rel=1e-12)

    def test_large_scale_positive(self):
        beta = draw_large_scale(1000, 10.0, (10.0, 150.0), 3.8, 8.0, seed=4)
        assert np.all(beta > 0)

    def test_invalid_range(self):
        with pytest.raises(InvalidArgumentError):
            draw_large_scale(2, 10.0, (5.0, 150.0), 3.8, 8.0, seed=0)


class TestComposeChannel:
    def test_identity_coupling_theta_degenerate(self):
        M, P, K = 4, 6, 2
        A = np.ones((M, P), dtype=complex)
        H = draw_small_scale(P, K, seed=5)
        cs = compose_channel(np.eye(M), A, H, np.eye(K))
        expected_row = H.sum(axis=0)
        for m in range(M):
            assert np.allclose(cs.G[m], expected_row)

    def test_large_scale_sqrt(self):
        M, P, K = 3, 5, 1
        C = np.eye(M)
        A = np.exp(1j * np.linspace(0, 1, M * P)).reshape(M, P)
        H = draw_small_scale(P, K, seed=6)
        g1 = compose_channel(C, A, H, np.array([[1.0]])).G
        g4 = compose_channel(C, A, H, np.array([[4.0]])).G
        assert np.linalg.norm(g4) == pytest.approx(2 * np.linalg.norm(g1), rel=1e-12)

    def test_matches_naive_loops(self):
        rng = np.random.default_rng(7)
        M, P, K = 4, 3, 2
        C = rng.normal(size=(M, M)) + 1j * rng.normal(size=(M, M))
        A = np.exp(1j * rng.uniform(0, 2 * math.pi, size=(M, P)))
        H = draw_small_scale(P, K, seed=8)
        beta = np.array([0.5, 2.0])
        G = compose_channel(C, A, H, np.diag(beta)).G
        naive = np.zeros((M, K), dtype=complex)
        for m in range(M):
            for k in range(K):
                acc = 0.0
                for mm in range(M):
                    for p in range(P):
                        acc += C[m, mm] * A[mm, p] * H[p, k]
                naive[m, k] = acc * math.sqrt(beta[k])
        assert np.max(np.abs(G - naive)) < 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            compose_channel(np.eye(3), np.ones((4, 2)), np.ones((2, 1)), np.eye(1))

    def test_residual_invariant(self):
        rng = np.random.default_rng(9)
        C = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        A = np.exp(1j * rng.uniform(0, 2 * math.pi, size=(5, 7)))
        H = draw_small_scale(7, 3, seed=10)
        D = np.diag(rng.uniform(0.5, 2.0, 3))
        cs = compose_channel(C, A, H, D)
        resid = np.linalg.norm(cs.G - cs.C @ cs.A @ cs.H @ np.sqrt(cs.D))
        assert resid / np.linalg.norm(cs.G) < 1e-10


class TestCorrelation:
    def test_orthogonal_columns(self):
        A = np.zeros((4, 2), dtype=complex)
        A[0, 0] = 2.0
        A[1, 1] = 3.0
        sp = correlation(np.eye(4), A)
        assert np.allclose(np.sort(sp.eigenvalues_tau), [0.0, 0.0, 4.0, 9.0])

    def test_eta_examples(self):
        assert matrix_correlation_coefficient(np.eye(5)) == pytest.approx(0.0, abs=1e-15)
        psi = np.array([[1.0, 0.5], [0.5, 1.0]])
        assert matrix_correlation_coefficient(psi) == pytest.approx(0.25, rel=1e-12)
        assert matrix_correlation_coefficient(np.ones((3, 3))) == pytest.approx(2.0, rel=1e-12)

    def test_eta_scale_invariance(self, rng):
        psi = rng.normal(size=(6, 6))
        psi = psi @ psi.T
        v1 = matrix_correlation_coefficient(psi)
        assert matrix_correlation_coefficient(17.3 * psi) == pytest.approx(v1, rel=1e-12)

    def test_eta_zero_diagonal(self):
        with pytest.raises(InvalidArgumentError):
            matrix_correlation_coefficient(np.array([[0.0, 1.0], [1.0, 0.0]]))

    def test_trace_identity(self, lam, coupling):
        lay = sample_bpp(30, lam, seed=11)
        mats = coupling_for_layout(lay, coupling)
        A = steering_matrix(lay, draw_directions(40, seed=12), lam)
        sp = correlation(mats.C, A)
        assert np.sum(sp.eigenvalues_tau) == pytest.approx(
            np.real(np.trace(sp.Psi)), rel=1e-8
        )

    def test_rank_deficiency_reported(self, lam, coupling):
        # more antennas than directions: exactly M - P negligible eigenvalues
        lay = sample_bpp(12, 3 * lam, seed=13)
        mats = coupling_for_layout(lay, coupling)
        A = steering_matrix(lay, draw_directions(5, seed=14), lam)
        sp = correlation(mats.C, A)
        assert sp.effective_rank == 5
        assert sp.clamped == 7
        assert np.all(sp.eigenvalues_tau[:7] == 0.0)

    def test_eta_nonnegative_random(self, rng):
        for _ in range(20):
            a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            psi = a @ a.conj().T
            assert matrix_correlation_coefficient(psi) >= 0

    def test_psi_hermitian_psd(self, lam, coupling):
        lay = make_regular(9, lam)
        mats = coupling_for_layout(lay, coupling)
        A = steering_matrix(lay, draw_directions(20, seed=15), lam)
        sp = correlation(mats.C, A)
        assert np.allclose(sp.Psi, sp.Psi.conj().T)
        assert np.all(sp.eigenvalues_tau >= 0)
