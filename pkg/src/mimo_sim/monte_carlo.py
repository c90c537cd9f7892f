"""Seeded Monte Carlo oracle for ZF and MRC link metrics.

Estimates ergodic rate, SER, outage, received gain, and empirical eigenvalue
distributions over many small-scale fading realizations.  Every trial derives
its RNG stream from (seed, metric-tag, trial-index), so serial and parallel
runs produce bit-identical results.
"""

from __future__ import annotations

import hashlib
import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc as _erfc_vec

from .array_geometry import AntennaLayout
from .channel_model import (
    CorrelationSpectrum,
    correlation,
    draw_directions,
    draw_small_scale,
    steering_matrix,
)
from .em_coupling import CouplingParams, coupling_for_layout
from .errors import (
    InvalidArgumentError,
    NumericFailureError,
    SingularChannelError,
)

RESAMPLE_CAP = 10
"""Maximum redraws of a rank-deficient trial before the run fails loudly."""


@dataclass(frozen=True)
class MetricEstimate:
    """A scalar Monte Carlo estimate with its standard error and provenance."""

    value: float
    std_error: float
    trials: int
    seed: int
    config_digest: str
    detail: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidArgumentError("trials must be >= 1")
        if self.std_error < 0 or not math.isfinite(self.value):
            raise InvalidArgumentError("estimate must be finite with std_error >= 0")


@dataclass(frozen=True)
class LinkScenario:
    """Frozen link geometry and system parameters for one experiment.

    The incident directions model static scatterers: they are drawn once from
    ``directions_seed`` and reused across all fading trials.
    """

    layout: AntennaLayout
    coupling: CouplingParams
    P: int
    K: int
    snr_ut: float
    beta: np.ndarray
    modulation: np.ndarray | None = None
    elevation: str = "uniform"
    directions_seed: int = 0
    coupled: bool = True  # False replaces the coupling matrix with identity

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if beta.size == 1 and self.K > 1:
            beta = np.full(self.K, float(beta[0]))
        object.__setattr__(self, "beta", beta)
        mod = self.modulation
        if mod is None:
            mod = np.tile([2.0, 0.5], (self.K, 1))
        else:
            mod = np.asarray(mod, dtype=float)
            if mod.shape == (2,):
                mod = np.tile(mod, (self.K, 1))
        object.__setattr__(self, "modulation", mod)
        if self.snr_ut <= 0 or self.K < 1 or self.P < 1:
            raise InvalidArgumentError("need snr_ut > 0, K >= 1, P >= 1")
        if beta.shape != (self.K,) or np.any(beta <= 0):
            raise InvalidArgumentError("beta must be K positive factors")

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(self.layout.d.tobytes())
        h.update(self.layout.psi.tobytes())
        for part in (
            self.layout.radius_R,
            self.coupling.wavelength_lambda,
            self.coupling.dipole_length_l,
            complex(self.coupling.self_impedance_Z0),
            complex(self.coupling.load_impedance_ZL),
            self.P,
            self.K,
            self.snr_ut,
            self.elevation,
            self.directions_seed,
            self.coupled,
        ):
            h.update(repr(part).encode())
        h.update(self.beta.tobytes())
        h.update(self.modulation.tobytes())
        return h.hexdigest()[:12]

    def prepared(self) -> "_PreparedScenario":
        cached = _PREPARED_CACHE.get(id(self))
        if cached is None or cached.owner is not self:
            cached = _PreparedScenario(self)
            if len(_PREPARED_CACHE) > 32:
                _PREPARED_CACHE.clear()
            _PREPARED_CACHE[id(self)] = cached
        return cached


_PREPARED_CACHE: dict[int, "_PreparedScenario"] = {}


class _PreparedScenario:
    """Per-scenario precomputation: coupling, steering, and the Gram kernel."""

    def __init__(self, scenario: LinkScenario):
        self.owner = scenario
        lam = scenario.coupling.wavelength_lambda
        if scenario.coupled:
            self.C = coupling_for_layout(scenario.layout, scenario.coupling).C
        else:
            self.C = np.eye(scenario.layout.M, dtype=complex)
        self.dirs = draw_directions(
            scenario.P, scenario.directions_seed, elevation=scenario.elevation
        )
        self.A = steering_matrix(scenario.layout, self.dirs, lam)
        self.CA = self.C @ self.A
        # P x P Gram kernel: every per-trial quantity flows through H^H Q H
        self.Q = self.CA.conj().T @ self.CA
        self.Q = 0.5 * (self.Q + self.Q.conj().T)
        evals, evecs = np.linalg.eigh(self.Q)
        evals = np.clip(evals, 0.0, None)
        self.Q_half = evecs * np.sqrt(evals) @ evecs.conj().T
        self.spectrum: CorrelationSpectrum = correlation(self.C, self.A)
        self.trace_q = float(np.sum(np.abs(self.CA) ** 2))


def trial_rng(seed: int, tag: str, index: int, attempt: int = 0) -> np.random.Generator:
    """Deterministic per-trial RNG substream."""
    key = (int(seed), zlib.crc32(tag.encode()), int(index), int(attempt))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def zf_snr(G: np.ndarray, snr_ut: float) -> np.ndarray:
    """Post-detection SNR per UT for the zero-forcing receiver.

    snr_ut / [(G^H G)^{-1}]_kk; raises SingularChannelError when the channel
    Gram matrix is rank deficient.
    """
    G = np.asarray(G, dtype=complex)
    W = G.conj().T @ G
    try:
        Winv = np.linalg.inv(W)
    except np.linalg.LinAlgError as exc:
        raise SingularChannelError("channel Gram matrix is singular") from exc
    diag = np.real(np.diag(Winv))
    if not np.all(np.isfinite(diag)) or np.any(diag <= 0):
        raise SingularChannelError("channel Gram matrix is numerically rank deficient")
    return snr_ut / diag


def mrc_snr(C, A, H, D, k: int, snr_ut: float) -> float:
    """Post-detection SNR of UT ``k`` (0-based) under maximum ratio combining.

    Signal power over inter-user interference plus noise; with K=1 the
    interference sum is empty and the result is snr_ut * beta_1 * h^H Q h.
    """
    C = np.asarray(C, dtype=complex)
    A = np.asarray(A, dtype=complex)
    H = np.asarray(H, dtype=complex)
    D = np.asarray(D, dtype=float)
    beta = np.diag(D) if D.ndim == 2 else np.asarray(D, dtype=float)
    K = H.shape[1]
    if not 0 <= k < K:
        raise InvalidArgumentError(f"UT index must be in [0, {K - 1}], got {k}")
    CA = C @ A
    Y = CA @ H  # M x K
    W = Y.conj().T @ Y  # W[i, j] = h_i^H Q h_j
    signal = float(np.real(W[k, k]))
    interference = float(
        np.sum([beta[i] * abs(W[k, i]) ** 2 for i in range(K) if i != k])
    )
    denom = snr_ut * interference + signal
    if denom <= 0:
        raise NumericFailureError("MRC denominator vanished")
    return snr_ut * beta[k] * signal**2 / denom


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("MIMO_SIM_THREADS", "1")))
    except ValueError:
        return 1


def _per_trial_zf_snrs(prep: _PreparedScenario, scenario: LinkScenario, rng_factory, t):
    """ZF SNRs for trial t, resampling rank-deficient draws up to the cap."""
    for attempt in range(RESAMPLE_CAP + 1):
        rng = rng_factory(t, attempt)
        H = draw_small_scale(scenario.P, scenario.K, rng)
        Y = prep.Q_half @ H
        W = Y.conj().T @ Y
        try:
            Winv = np.linalg.inv(W)
        except np.linalg.LinAlgError:
            continue
        diag = np.real(np.diag(Winv))
        if np.all(np.isfinite(diag)) and np.all(diag > 0):
            return scenario.snr_ut * scenario.beta / diag, H, W
    raise NumericFailureError(
        f"trial {t}: exceeded {RESAMPLE_CAP} resamples of a rank-deficient channel"
    )


def _run_trials(n_trials: int, worker) -> np.ndarray:
    """Evaluate worker(t) for every trial, serial or threaded, in slot order."""
    results = [None] * n_trials
    threads = _thread_count()
    if threads == 1:
        for t in range(n_trials):
            results[t] = worker(t)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for t, val in zip(range(n_trials), pool.map(worker, range(n_trials))):
                results[t] = val
    return np.asarray(results, dtype=float)


def _estimate(values: np.ndarray, trials: int, seed: int, digest: str, detail=None):
    se = float(np.std(values, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return MetricEstimate(
        value=float(np.mean(values)),
        std_error=se,
        trials=trials,
        seed=seed,
        config_digest=digest,
        detail=detail or {},
    )


def mc_rate(scenario: LinkScenario, trials: int, seed: int) -> MetricEstimate:
    """Monte Carlo ergodic ZF sum rate (bits/s/Hz); per-UT means in ``detail``."""
    if trials < 100:
        raise InvalidArgumentError(f"need trials >= 100, got {trials}")
    prep = scenario.prepared()
    per_ut = np.empty((trials, scenario.K))

    def worker(t):
        snrs, _, _ = _per_trial_zf_snrs(
            prep, scenario, lambda tt, a: trial_rng(seed, "rate", tt, a), t
        )
        per_ut[t] = np.log2(1.0 + snrs)
        return float(np.sum(per_ut[t]))

    sums = _run_trials(trials, worker)
    detail = {
        "per_ut_rate": per_ut.mean(axis=0),
        "per_ut_se": per_ut.std(axis=0, ddof=1) / math.sqrt(trials),
    }
    return _estimate(sums, trials, seed, scenario.digest(), detail)


def _per_trial_modeled_snrs(prep, scenario: LinkScenario, rng: np.random.Generator):
    """Per-UT modeled SNR matrix snr_ut*beta_k*xi over the K empirical
    unordered Gram eigenvalues xi of one fading draw (shape K x K)."""
    H = draw_small_scale(scenario.P, scenario.K, rng)
    Y = prep.Q_half @ H
    ev = np.linalg.eigvalsh(Y.conj().T @ Y)
    return scenario.snr_ut * scenario.beta[:, None] * ev[None, :]


def mc_ser(scenario: LinkScenario, trials: int, seed: int, flow: str = "zf") -> MetricEstimate:
    """Semi-analytic Monte Carlo SER: per-realization Gaussian error expression
    omega_k * Q(sqrt(2 varpi_k SNR_k)) averaged over fading and UTs.

    ``flow`` selects the per-UT SNR statistic: "zf" uses the zero-forcing
    post-detection SNR of the simulated link; "eigenvalue" uses the modeled
    SNR snr_ut*beta_k*xi with xi an empirical unordered eigenvalue of the
    channel Gram matrix, which is the statistic the closed forms describe
    (the two coincide for K=1).
    """
    if trials < 1:
        raise InvalidArgumentError("trials must be >= 1")
    if flow not in ("zf", "eigenvalue"):
        raise InvalidArgumentError(f"unknown flow {flow!r}")
    prep = scenario.prepared()
    omega = scenario.modulation[:, 0]
    varpi = scenario.modulation[:, 1]

    def worker(t):
        if flow == "zf":
            snrs, _, _ = _per_trial_zf_snrs(
                prep, scenario, lambda tt, a: trial_rng(seed, "ser", tt, a), t
            )
            # omega * Q(sqrt(2 v s)) = omega/2 * erfc(sqrt(v s))
            return float(np.mean(0.5 * omega * _erfc_vec(np.sqrt(varpi * snrs))))
        snr_mat = _per_trial_modeled_snrs(prep, scenario, trial_rng(seed, "ser", t))
        per_ut = np.mean(0.5 * omega[:, None] * _erfc_vec(np.sqrt(varpi[:, None] * snr_mat)), axis=1)
        return float(np.mean(per_ut))

    vals = _run_trials(trials, worker)
    return _estimate(vals, trials, seed, scenario.digest())


def mc_outage(
    scenario: LinkScenario, snr_th: float, trials: int, seed: int, flow: str = "zf"
) -> MetricEstimate:
    """Empirical outage probability: fraction of (trial, UT) pairs whose SNR
    statistic falls at or below the threshold.  See :func:`mc_ser` for the
    ``flow`` choices."""
    if snr_th < 0:
        raise InvalidArgumentError("snr_th must be >= 0")
    if flow not in ("zf", "eigenvalue"):
        raise InvalidArgumentError(f"unknown flow {flow!r}")
    prep = scenario.prepared()

    def worker(t):
        if flow == "zf":
            snrs, _, _ = _per_trial_zf_snrs(
                prep, scenario, lambda tt, a: trial_rng(seed, "outage", tt, a), t
            )
            return float(np.mean(snrs <= snr_th))
        snr_mat = _per_trial_modeled_snrs(prep, scenario, trial_rng(seed, "outage", t))
        return float(np.mean(snr_mat <= snr_th))

    vals = _run_trials(trials, worker)
    return _estimate(vals, trials, seed, scenario.digest())


def mc_gain(
    scenario: LinkScenario,
    scenario_min: LinkScenario,
    trials: int,
    seed: int,
) -> MetricEstimate:
    """Monte Carlo ergodic received gain over the reference configuration.

    Both configurations see the same scatterer field and the same small-scale
    draws (common random numbers), so the per-trial difference
    snr_ut*beta_1*(xi - xi_min) estimates the gain with reduced variance.
    """
    if scenario.P != scenario_min.P:
        raise InvalidArgumentError("configurations must share the direction count P")
    prep = scenario.prepared()
    prep_min = scenario_min.prepared()
    snr, b1 = scenario.snr_ut, float(scenario.beta[0])

    def worker(t):
        rng = trial_rng(seed, "gain", t)
        h = draw_small_scale(scenario.P, 1, rng)
        xi = float(np.sum(np.abs(prep.Q_half @ h) ** 2))
        xi_min = float(np.sum(np.abs(prep_min.Q_half @ h) ** 2))
        return snr * b1 * (xi - xi_min)

    vals = _run_trials(trials, worker)
    return _estimate(vals, trials, seed, scenario.digest())


@dataclass(frozen=True)
class EigenHistogram:
    """Pooled correlation-matrix eigenvalues over an ensemble of layouts."""

    bin_edges: np.ndarray
    counts: np.ndarray
    rank_means: np.ndarray
    pooled: np.ndarray
    layouts: int
    seed: int


def eigen_histogram(
    M: int,
    R: float,
    layouts: int,
    seed: int,
    coupling: CouplingParams,
    P: int = 100,
    elevation: str = "uniform",
    bins: int = 60,
) -> EigenHistogram:
    """Pool the eigenvalues of Psi over independently sampled BPP layouts.

    Each layout draws its own scatterer directions; ``rank_means`` holds the
    ensemble mean of each sorted eigenvalue (the cluster means for M=2).
    """
    if layouts < 100:
        raise InvalidArgumentError(f"need layouts >= 100, got {layouts}")
    from .array_geometry import sample_bpp  # local import to avoid cycle at module load

    all_eigs = np.empty((layouts, M))
    for i in range(layouts):
        rng = trial_rng(seed, "eigen-hist", i)
        lay = sample_bpp(M, R, rng)
        dirs = draw_directions(P, rng, elevation=elevation)
        mats = coupling_for_layout(lay, coupling)
        A = steering_matrix(lay, dirs, coupling.wavelength_lambda)
        all_eigs[i] = correlation(mats.C, A).eigenvalues_tau
    pooled = all_eigs.ravel()
    counts, edges = np.histogram(pooled, bins=bins)
    return EigenHistogram(
        bin_edges=edges,
        counts=counts,
        rank_means=all_eigs.mean(axis=0),
        pooled=pooled,
        layouts=layouts,
        seed=seed,
    )
