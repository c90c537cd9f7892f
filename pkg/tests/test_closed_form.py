"""Closed-form propositions against literal transcriptions, quadrature, and MC."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

import mimo_sim.closed_form as cf
from mimo_sim.errors import DegeneracyError, InvalidArgumentError, NumericFailureError


@pytest.fixture(scope="module")
def tau8():
    rng = np.random.default_rng(5)
    return cf.prepare_spectrum(np.sort(rng.uniform(0.5, 9.0, size=8)))


@pytest.fixture(scope="module")
def tau_wide():
    rng = np.random.default_rng(12)
    return cf.prepare_spectrum(np.sort(10.0 ** rng.uniform(-5, 1, size=40)))


def mc_gram_eigs(tau, K, trials, seed):
    """Empirical unordered eigenvalues of the one-sided-correlated Gram matrix."""
    rng = np.random.default_rng(seed)
    m = tau.size
    out = np.empty((trials, K))
    for t in range(trials):
        H = rng.normal(scale=math.sqrt(0.5), size=(m, K)) + 1j * rng.normal(
            scale=math.sqrt(0.5), size=(m, K)
        )
        W = (H.conj().T * tau) @ H
        out[t] = np.linalg.eigvalsh(W)
    return out


class TestPrepareSpectrum:
    def test_drops_near_zeros(self):
        tau, info = cf.prepare_spectrum(
            np.array([0.0, 1e-14, 0.5, 1.0]), return_info=True
        )
        assert info["dropped"] == 2
        assert tau.size == 2

    def test_spreads_clusters(self):
        tau, info = cf.prepare_spectrum(np.array([1.0, 1.0, 1.0, 5.0]), return_info=True)
        assert info["spread"] == 3
        gaps = np.diff(tau)
        assert np.all(gaps >= 0.5 * cf.MIN_RELATIVE_GAP * tau[-1])

    def test_rejects_empty(self):
        with pytest.raises(InvalidArgumentError):
            cf.prepare_spectrum(np.array([-1.0, 0.0]))

    def test_degenerate_input_rejected_downstream(self):
        with pytest.raises(DegeneracyError):
            cf.xi_pdf_single(1.0, np.array([1.0, 1.0, 2.0]))
        with pytest.raises(DegeneracyError):
            cf.xi_pdf_single(1.0, np.array([-0.5, 1.0, 2.0]))


class TestSingleUserDensity:
    def test_matches_hypoexponential(self):
        tau = np.array([1.0, 2.0, 4.0])

        def hypo(x):
            acc = 0.0
            for p in range(3):
                w = np.prod([tau[p] - tau[q] for q in range(3) if q != p])
                acc += tau[p] * math.exp(-x / tau[p]) / w
            return acc

        for x in np.linspace(0.05, 30, 25):
            assert cf.xi_pdf_single(float(x), tau) == pytest.approx(hypo(float(x)), abs=1e-13)

    def test_normalization(self):
        tau = np.array([1.0, 2.0, 4.0])
        val, _ = quad(lambda x: cf.xi_pdf_single(x, tau), 0, 300, limit=300)
        assert abs(val - 1.0) < 1e-6

    def test_vanishes_at_infinity(self):
        tau = np.array([1.0, 2.0, 4.0])
        assert cf.xi_pdf_single(500.0, tau) < 1e-30

    def test_ks_against_monte_carlo(self, tau8):
        eigs = np.sort(mc_gram_eigs(tau8, 1, 30_000, seed=3).ravel())
        kern = cf._kernel_for(tau8, 1)
        idx = np.linspace(0, eigs.size - 1, 300).astype(int)
        cdf = np.array([kern.cdf_scaled(v / kern.scale) for v in eigs[idx]])
        emp = (idx + 0.5) / eigs.size
        assert np.max(np.abs(cdf - emp)) < 0.02

    def test_literal_transcription_agrees(self, tau8):
        for x in (0.4, 2.0, 9.0, 25.0):
            lit = cf.literal_xi_pdf_multi(x, tau8, 1)
            assert cf.xi_pdf_single(x, tau8) == pytest.approx(lit, rel=1e-12, abs=1e-300)


class TestMultiUserDensity:
    def test_k1_reduction(self, tau8):
        xs = np.linspace(0.01, 40, 100)
        single = cf.xi_pdf_single(xs, tau8)
        multi = cf.xi_pdf_multi(xs, tau8, 1)
        assert np.max(np.abs(single - multi)) < 1e-9

    def test_normalization_k2(self):
        tau = cf.prepare_spectrum(np.array([1.0, 2.0, 3.0, 4.0, 6.0, 9.0]))
        val, _ = quad(lambda x: cf.xi_pdf_multi(x, tau, 2), 0, 400, limit=400)
        assert abs(val - 1.0) < 1e-5

    def test_ks_against_monte_carlo_k2(self):
        tau = cf.prepare_spectrum(np.array([1.0, 2.0, 3.0, 4.0, 6.0, 9.0]))
        eigs = np.sort(mc_gram_eigs(tau, 2, 10_000, seed=7).ravel())
        kern = cf._kernel_for(tau, 2)
        idx = np.linspace(0, eigs.size - 1, 300).astype(int)
        cdf = np.array([kern.cdf_scaled(v / kern.scale) for v in eigs[idx]])
        emp = (idx + 0.5) / eigs.size
        assert np.max(np.abs(cdf - emp)) < 0.02

    def test_literal_transcription_agrees(self, tau8):
        for K in (2, 3):
            for x in (0.5, 3.0, 11.0):
                a = cf.xi_pdf_multi(x, tau8, K)
                b = cf.literal_xi_pdf_multi(x, tau8, K)
                assert a == pytest.approx(b, rel=1e-12, abs=1e-300)

    def test_nonnegative_on_grid(self, tau_wide):
        xs = np.concatenate([np.linspace(0, 5, 500), np.linspace(5, 60, 500)])
        vals = cf.xi_pdf_multi(xs, tau_wide, 4)
        assert np.all(vals >= 0)

    def test_wide_spectrum_normalization(self, tau_wide):
        kern = cf._kernel_for(tau_wide, 4)
        x_hi = tau_wide.sum() + 60.0
        while 1.0 - kern.cdf_scaled(x_hi / kern.scale) > 1e-10:
            x_hi *= 2.0
        val, _ = quad(lambda x: cf.xi_pdf_multi(x, tau_wide, 4), 0, x_hi, limit=800)
        assert abs(val - 1.0) < 1e-5


class TestErgodicGain:
    def test_identical_configurations(self, tau8):
        pair = cf.SpectrumPair(tau8, tau8)
        assert cf.ergodic_gain(pair, 2.0, 0.5) == 0.0

    def test_trace_identity(self):
        tau = cf.prepare_spectrum(np.array([1.0, 3.0]))
        assert cf.expected_xi_single(tau) == pytest.approx(4.0, rel=1e-14)

    def test_literal_formula_equals_trace(self):
        rng = np.random.default_rng(20)
        for m in (2, 3, 5, 8, 12):
            tau = cf.prepare_spectrum(np.sort(rng.uniform(0.2, 7.0, size=m)))
            lit = cf.literal_expected_xi_single(tau)
            assert lit == pytest.approx(float(np.sum(tau)), rel=1e-12)

    def test_gain_matches_quadrature_mean(self, tau8):
        mean, _ = quad(lambda x: x * cf.xi_pdf_single(x, tau8), 0, 600, limit=400)
        assert mean == pytest.approx(cf.expected_xi_single(tau8), rel=1e-6)


class TestExpectedInverseSum:
    def test_matches_literal(self, tau8):
        for K in (1, 2, 3):
            a = cf.expected_inverse_xi_sum(tau8, K)
            b = cf.literal_expected_inverse_xi_sum(tau8, K)
            assert a == pytest.approx(b, rel=1e-12)

    def test_matches_quadrature(self, tau8):
        for K in (1, 2):
            q = quad(
                lambda x: cf.xi_pdf_multi(x, tau8, K) / x, 1e-12, 500, limit=500
            )[0] * K
            assert cf.expected_inverse_xi_sum(tau8, K) == pytest.approx(q, rel=1e-6)

    def test_uncorrelated_wishart_identity(self):
        # near-equal eigenvalues: E trace(W^-1) = K/(M-K) for central Wishart
        tau = cf.prepare_spectrum(np.ones(12) + np.linspace(0, 1e-5, 12))
        for K in (1, 2, 4, 6):
            assert cf.expected_inverse_xi_sum(tau, K) == pytest.approx(
                K / (12 - K), rel=1e-3
            )

    def test_matches_monte_carlo(self, tau8):
        rng = np.random.default_rng(31)
        trials = 40_000
        vals = np.empty(trials)
        for t in range(trials):
            H = rng.normal(scale=math.sqrt(0.5), size=(8, 2)) + 1j * rng.normal(
                scale=math.sqrt(0.5), size=(8, 2)
            )
            W = (H.conj().T * tau8) @ H
            vals[t] = np.sum(1.0 / np.linalg.eigvalsh(W))
        se = vals.std() / math.sqrt(trials)
        assert cf.expected_inverse_xi_sum(tau8, 2) == pytest.approx(
            vals.mean(), abs=4 * se
        )


class TestRateLowerBound:
    def test_k1_structure(self, tau8):
        params = cf.SystemParams(snr_ut=3.0, K=1, beta=np.array([0.7]), M=8)
        bound = cf.rate_lower_bound(params, tau8)[0]
        direct = math.log2(1.0 + 3.0 * 0.7 / cf.expected_inverse_xi_sum(tau8, 1))
        assert bound == pytest.approx(direct, rel=1e-12)

    def test_high_snr_slope(self, tau8):
        beta = np.array([0.4, 0.9])
        r1 = cf.rate_lower_bound(
            cf.SystemParams(snr_ut=10.0**3.0, K=2, beta=beta, M=8), tau8
        )
        r2 = cf.rate_lower_bound(
            cf.SystemParams(snr_ut=2 * 10.0**3.0, K=2, beta=beta, M=8), tau8
        )
        assert np.all(np.abs((r2 - r1) - 1.0) < 0.1)

    def test_sum_rate(self, tau8):
        params = cf.SystemParams(snr_ut=5.0, K=2, beta=np.array([0.4, 0.9]), M=8)
        assert cf.sum_rate_lower_bound(params, tau8) == pytest.approx(
            float(np.sum(cf.rate_lower_bound(params, tau8))), rel=1e-14
        )

    def test_jensen_direction_vs_monte_carlo(self, tau8):
        params = cf.SystemParams(snr_ut=4.0, K=2, beta=np.array([0.5, 1.1]), M=8)
        bound = cf.rate_lower_bound(params, tau8)
        rng = np.random.default_rng(8)
        trials = 20_000
        rates = np.empty((trials, 2))
        for t in range(trials):
            H = rng.normal(scale=math.sqrt(0.5), size=(8, 2)) + 1j * rng.normal(
                scale=math.sqrt(0.5), size=(8, 2)
            )
            W = (H.conj().T * tau8) @ H
            diag = np.real(np.diag(np.linalg.inv(W)))
            rates[t] = np.log2(1.0 + params.snr_ut * params.beta / diag)
        mc = rates.mean(axis=0)
        se = rates.std(axis=0) / math.sqrt(trials)
        assert np.all(bound <= mc + 3 * se)


class TestSer:
    def test_low_snr_limit_qpsk(self, tau8):
        params = cf.SystemParams(snr_ut=1e-12, K=2, beta=np.array([1.0, 1.0]), M=8)
        assert cf.ser_closed_form(params, tau8) == pytest.approx(1.0, abs=1e-5)

    def test_monotone_in_snr(self, tau8):
        beta = np.array([0.3, 0.6])
        vals = [
            cf.ser_closed_form(
                cf.SystemParams(snr_ut=10.0 ** (db / 10.0), K=2, beta=beta, M=8), tau8
            )
            for db in np.linspace(-10, 15, 10)
        ]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_matches_density_quadrature(self, tau8):
        params = cf.SystemParams(snr_ut=2.5, K=2, beta=np.array([0.2, 0.9]), M=8)
        from mimo_sim.special_functions import erfc

        acc = 0.0
        for k in range(2):
            omega, varpi = params.modulation[k]
            a = varpi * params.snr_ut * params.beta[k]
            val, _ = quad(
                lambda x: erfc(math.sqrt(a * x)) * cf.xi_pdf_multi(x, tau8, 2),
                0,
                500,
                limit=500,
            )
            acc += 0.5 * omega * val
        assert cf.ser_closed_form(params, tau8) == pytest.approx(acc / 2, rel=1e-7)


class TestOutage:
    def test_vanishing_threshold(self, tau8):
        params = cf.SystemParams(
            snr_ut=1.0, K=2, beta=np.array([1.0, 1.0]), M=8, snr_th=1e-9
        )
        assert cf.outage_closed_form(params, tau8) < 1e-8

    def test_huge_threshold(self, tau8):
        params = cf.SystemParams(
            snr_ut=1.0, K=2, beta=np.array([1.0, 1.0]), M=8, snr_th=1e9
        )
        assert cf.outage_closed_form(params, tau8) == pytest.approx(1.0, abs=1e-9)

    def test_closed_vs_quadrature(self, tau8):
        params = cf.SystemParams(
            snr_ut=2.0, K=2, beta=np.array([0.8, 1.3]), M=8, snr_th=1.5
        )
        oc = cf.outage_closed_form(params, tau8)
        oq = cf.outage_quadrature(params, tau8)
        assert abs(oc - oq) < 1e-8

    def test_exponent_adjudication(self, tau8):
        params = cf.SystemParams(
            snr_ut=0.7, K=2, beta=np.array([0.8, 1.3]), M=8, snr_th=2.0
        )
        oq = cf.outage_quadrature(params, tau8)
        corrected = cf.literal_outage(params, tau8, exponent_shift=0)
        printed = cf.literal_outage(params, tau8, exponent_shift=-2)
        assert abs(corrected - oq) < 1e-9
        assert abs(printed - oq) > 1e-3

    def test_monotone_in_threshold(self, tau8):
        beta = np.array([0.8, 1.3])
        vals = [
            cf.outage_closed_form(
                cf.SystemParams(snr_ut=1.0, K=2, beta=beta, M=8, snr_th=th), tau8
            )
            for th in np.logspace(-1, 1.6, 8)
        ]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestAsymptotics:
    def test_snr_identity_coupling(self):
        A = np.exp(1j * np.linspace(0, 5, 12)).reshape(4, 3)
        val = cf.asymptotic_snr(A, np.eye(4), snr_ut=2.0, beta_k=0.5)
        assert val == pytest.approx(2.0 * 0.5 * 12, rel=1e-12)

    def test_scaling_in_coupling(self):
        rng = np.random.default_rng(3)
        A = np.exp(1j * rng.uniform(0, 2 * math.pi, size=(5, 4)))
        C = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        v1 = cf.asymptotic_snr(A, C, 1.0, 1.0)
        v2 = cf.asymptotic_snr(A, 3.0 * C, 1.0, 1.0)
        assert v2 == pytest.approx(9.0 * v1, rel=1e-12)

    def test_rate_additive_equal_betas(self):
        A = np.ones((6, 2), dtype=complex)
        params4 = cf.SystemParams(snr_ut=1.5, K=4, beta=np.full(4, 0.2), M=6)
        params1 = cf.SystemParams(snr_ut=1.5, K=1, beta=np.array([0.2]), M=6)
        assert cf.asymptotic_rate(params4, A, np.eye(6)) == pytest.approx(
            4 * cf.asymptotic_rate(params1, A, np.eye(6)), rel=1e-12
        )

    def test_rate_k1_closed_value(self):
        M, P = 6, 2
        A = np.ones((M, P), dtype=complex)
        params = cf.SystemParams(snr_ut=2.0, K=1, beta=np.array([0.3]), M=M)
        assert cf.asymptotic_rate(params, A, np.eye(M)) == pytest.approx(
            math.log2(1 + 2.0 * 0.3 * M * P), rel=1e-12
        )

    def test_ser_limits(self):
        A = np.ones((6, 3), dtype=complex)
        params = cf.SystemParams(snr_ut=1e-30, K=2, beta=np.array([1.0, 1.0]), M=6)
        assert cf.asymptotic_ser(params, A, np.eye(6)) == pytest.approx(1.0, abs=1e-9)
        params_hi = cf.SystemParams(snr_ut=1e9, K=2, beta=np.array([1.0, 1.0]), M=6)
        assert cf.asymptotic_ser(params_hi, A, np.eye(6)) == 0.0

    def test_gain_identities(self):
        A = np.ones((8, 3), dtype=complex)
        A_hat = np.ones((2, 3), dtype=complex)
        assert cf.asymptotic_gain(A, np.eye(8), A, np.eye(8), 2.0, 0.5) == 0.0
        val = cf.asymptotic_gain(A, np.eye(8), A_hat, np.eye(2), 2.0, 0.5)
        assert val == pytest.approx(2.0 * 0.5 * 3 * (8 - 2), rel=1e-12)


class TestStability:
    def test_perturbation_stability(self, tau8):
        rng = np.random.default_rng(44)
        pert = cf.prepare_spectrum(tau8 * (1.0 + 1e-6 * rng.uniform(-1, 1, tau8.size)))
        params = cf.SystemParams(
            snr_ut=2.0, K=2, beta=np.array([0.8, 1.3]), M=8, snr_th=1.5
        )
        for fn in (
            lambda t: cf.expected_inverse_xi_sum(t, 2),
            lambda t: cf.ser_closed_form(params, t),
            lambda t: cf.outage_closed_form(params, t),
            lambda t: cf.expected_xi_single(t),
        ):
            a, b = fn(tau8), fn(pert)
            assert abs(a - b) / abs(a) < 1e-3

    def test_wide_spectrum_rate(self, tau_wide):
        params = cf.SystemParams(snr_ut=31.6, K=4, beta=np.full(4, 1e-3), M=40)
        val = cf.sum_rate_lower_bound(params, tau_wide)
        assert math.isfinite(val) and val > 0

    def test_invalid_params(self):
        with pytest.raises(InvalidArgumentError):
            cf.SystemParams(snr_ut=-1.0, K=2, beta=np.array([1.0, 1.0]), M=8)
        with pytest.raises(InvalidArgumentError):
            cf.SystemParams(snr_ut=1.0, K=8, beta=np.ones(8), M=8)
