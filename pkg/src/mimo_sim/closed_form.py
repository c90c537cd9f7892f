"""Closed-form link metrics driven by the correlation-matrix spectrum.

Implements the ergodic received gain, the zero-forcing ergodic-rate lower
bound, the average symbol error rate, the average outage probability, and
their large-array limits.  All finite-M results are functions of the
eigenvalues tau of Psi = C A A^H C^H through the conditional eigenvalue
densities of the one-sided-correlated Wishart form H^H A^H C^H C A H.

Numerical strategy
------------------
The textbook expressions involve the inverse of an n x n Vandermonde matrix
(n = M - K) whose entries overflow double precision and whose alternating
sums cancel catastrophically.  Every bracket here is reduced, exactly, to

* divided differences of smooth kernels over the node set
  (tau_1..tau_n, sigma_i), via the polynomial interpolation-error identity
  g(sigma) - sum_p l_p(sigma) g(tau_p) = [prod_p (sigma - tau_p)] * DD[g];
* complete homogeneous symmetric polynomials h_r of the nodes (Newton's
  identities, all terms positive);
* K x K cofactor combinations of the matrix hhat[i, j] = h_{j-1}(tau, sigma_i),
  whose determinant equals the Vandermonde determinant of the top-K
  eigenvalues.

Evaluation runs in mpmath at a working precision chosen from a float-domain
estimate of the divided-difference weight cancellation.  Literal
transcriptions of the raw formulas (valid for small M only) are kept as
oracles; see tests.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .constants import EULER_GAMMA
from .errors import (
    DegeneracyError,
    InvalidArgumentError,
    NumericFailureError,
)
from .special_functions import erfc as _erfc_float

logger = logging.getLogger(__name__)

MIN_RELATIVE_GAP = 1e-6
"""Minimum eigenvalue spacing (relative to the largest) after preparation."""

DROP_TOLERANCE = 1e-10
"""Eigenvalues below this fraction of the largest are dropped (rank deficiency)."""

_MAX_DPS = 4000


@dataclass(frozen=True)
class SpectrumPair:
    """Operating and reference eigenvalue spectra for the received-gain metric."""

    tau: np.ndarray
    tau_hat: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tau", np.asarray(self.tau, dtype=float))
        object.__setattr__(self, "tau_hat", np.asarray(self.tau_hat, dtype=float))


@dataclass(frozen=True)
class SystemParams:
    """System-level inputs for the multi-user closed forms.

    ``modulation`` holds one (omega, varpi) pair per user terminal; the
    default is QPSK (omega=2, varpi=0.5) for every UT.
    """

    snr_ut: float
    K: int
    beta: np.ndarray
    M: int
    snr_th: float = 0.5
    modulation: np.ndarray | None = None

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        if beta.size == 1 and self.K > 1:
            beta = np.full(self.K, float(beta[0]))
        object.__setattr__(self, "beta", beta)
        if self.snr_ut <= 0:
            raise InvalidArgumentError(f"snr_ut must be > 0, got {self.snr_ut}")
        if self.K < 1:
            raise InvalidArgumentError(f"K must be >= 1, got {self.K}")
        if self.M <= self.K:
            raise InvalidArgumentError(f"need M > K, got M={self.M}, K={self.K}")
        if beta.shape != (self.K,) or np.any(beta <= 0):
            raise InvalidArgumentError("beta must be K positive large-scale factors")
        if self.snr_th <= 0:
            raise InvalidArgumentError(f"snr_th must be > 0, got {self.snr_th}")
        mod = self.modulation
        if mod is None:
            mod = np.tile([2.0, 0.5], (self.K, 1))
        else:
            mod = np.asarray(mod, dtype=float)
            if mod.shape == (2,):
                mod = np.tile(mod, (self.K, 1))
        if mod.shape != (self.K, 2) or np.any(mod <= 0):
            raise InvalidArgumentError("modulation must give positive (omega, varpi) per UT")
        object.__setattr__(self, "modulation", mod)


def prepare_spectrum(
    tau,
    min_rel_gap: float = MIN_RELATIVE_GAP,
    drop_tol: float = DROP_TOLERANCE,
    return_info: bool = False,
):
    """Clean an eigenvalue list for the closed-form densities.

    Sorts ascending, drops entries below ``drop_tol`` of the largest (rank
    deficiency; the effective antenna count shrinks accordingly), and spreads
    clusters of near-equal eigenvalues symmetrically so consecutive gaps are
    at least ``min_rel_gap`` times the largest eigenvalue.  Both events are
    logged.
    """
    tau = np.sort(np.asarray(tau, dtype=float).ravel())
    if tau.size == 0 or tau[-1] <= 0:
        raise InvalidArgumentError("spectrum must contain a positive eigenvalue")
    top = tau[-1]
    kept = tau[tau >= drop_tol * top]
    dropped = tau.size - kept.size
    if dropped:
        logger.info("prepare_spectrum: dropped %d near-zero eigenvalues", dropped)
    gap = min_rel_gap * top
    out = kept.copy()
    spread = 0
    i = 0
    while i < out.size:
        j = i
        while j + 1 < out.size and out[j + 1] - out[j] < gap:
            j += 1
        if j > i:
            center = float(np.mean(out[i : j + 1]))
            count = j - i + 1
            out[i : j + 1] = center + gap * (np.arange(count) - (count - 1) / 2.0)
            spread += count
        i = j + 1
    # a centered spread can collide with neighbors or dip below zero
    out[0] = max(out[0], 0.5 * gap)
    for k in range(1, out.size):
        if out[k] - out[k - 1] < gap:
            out[k] = out[k - 1] + gap
    if spread:
        logger.info("prepare_spectrum: spread %d clustered eigenvalues", spread)
    if return_info:
        return out, {"dropped": dropped, "spread": spread}
    return out


def _check_prepared(tau: np.ndarray, context: str):
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size < 2:
        raise InvalidArgumentError(f"{context}: need at least two eigenvalues")
    if np.any(tau <= 0):
        raise DegeneracyError(
            f"{context}: non-positive eigenvalues present; run prepare_spectrum first"
        )
    gaps = np.diff(tau)
    if np.any(gaps <= 0.5 * MIN_RELATIVE_GAP * tau[-1]):
        raise DegeneracyError(
            f"{context}: near-degenerate eigenvalues (min gap "
            f"{gaps.min():.3e} vs scale {tau[-1]:.3e}); run prepare_spectrum first"
        )
    return tau


# ---------------------------------------------------------------------------
# mpmath spectrum kernel
# ---------------------------------------------------------------------------


class _SpectrumKernel:
    """Precomputed divided-difference machinery for one (spectrum, K) pair.

    Works on the spectrum scaled by its largest eigenvalue; callers translate
    between physical and scaled units.
    """

    def __init__(self, tau: np.ndarray, K: int):
        tau = _check_prepared(tau, "spectrum kernel")
        m = tau.size
        if not (1 <= K < m):
            raise InvalidArgumentError(f"need 1 <= K < {m}, got K={K}")
        self.K = K
        self.m = m
        self.n = m - K
        self.scale = float(tau[-1])
        scaled = tau / self.scale
        self.dps = self._estimate_dps(scaled, K)
        with mp.workdps(self.dps):
            nodes = [mp.mpf(float(v)) for v in scaled]
            self.tau_low = nodes[: self.n]
            self.sigma = nodes[self.n :]
            # Lagrange denominators over the low nodes and the bridging factors
            self.w_low = []
            for p in range(self.n):
                prod = mp.mpf(1)
                tp = self.tau_low[p]
                for q in range(self.n):
                    if q != p:
                        prod *= tp - self.tau_low[q]
                self.w_low.append(prod)
            self.V = []
            for s in self.sigma:
                prod = mp.mpf(1)
                for tp in self.tau_low:
                    prod *= s - tp
                self.V.append(prod)
            # full divided-difference weights for node sets (tau_low, sigma_i)
            self.dd_w = [
                [1 / (self.w_low[p] * (self.tau_low[p] - self.sigma[i])) for p in range(self.n)]
                for i in range(K)
            ]
            self.inv_V = [1 / v for v in self.V]
            self.delta_sigma = mp.mpf(1)
            for i in range(K):
                for i2 in range(i + 1, K):
                    self.delta_sigma *= self.sigma[i2] - self.sigma[i]
            self.hhat = self._build_hhat()
            det = mp.det(mp.matrix(self.hhat)) if K > 1 else self.hhat[0][0]
            # internal consistency: det(hhat) must equal the sigma Vandermonde
            rel = abs(det - self.delta_sigma) / abs(self.delta_sigma)
            if rel > mp.mpf(10) ** (-max(10, self.dps // 3)):
                raise NumericFailureError(
                    f"spectrum kernel precision check failed (rel={float(rel):.3e}, "
                    f"dps={self.dps}); spectrum too ill-conditioned"
                )
            self.cof = self._cofactors()
            # powers tau^(n-1), tau^(n+j-1) reused by every kernel evaluation
            self.pow_low_n1 = [t ** (self.n - 1) for t in self.tau_low]
            self.pow_sig_n1 = [s ** (self.n - 1) for s in self.sigma]

    @staticmethod
    def _estimate_dps(scaled: np.ndarray, K: int) -> int:
        n = scaled.size - K
        logs = np.log10(np.abs(scaled[:, None] - scaled[None, :]) + 1e-320)
        np.fill_diagonal(logs, 0.0)
        worst = 0.0
        if n > 0:
            # weight magnitude of each low node within its full node set
            for p in range(n):
                s = float(np.sum(logs[p, :n])) + float(np.min(logs[p, n:]))
                worst = max(worst, -s)
            for i in range(n, scaled.size):
                worst = max(worst, -float(np.sum(logs[i, :n])))
        # cofactor combinations cancel at the sigma-Vandermonde scale
        sig = scaled[n:]
        dsig = 0.0
        for i in range(K):
            for j in range(i + 1, K):
                dsig += math.log10(abs(sig[j] - sig[i]) + 1e-320)
        worst = max(worst, -dsig)
        dps = int(min(_MAX_DPS, max(60, 40 + math.ceil(worst))))
        return dps

    def _build_hhat(self):
        K, n = self.K, self.n
        base_pows = [mp.mpf(0)] * (K)  # power sums p_1..p_(K-1) of tau_low
        for r in range(1, K):
            base_pows[r] = mp.fsum(t**r for t in self.tau_low)
        rows = []
        for s in self.sigma:
            p = [mp.mpf(0)] * K
            sp = mp.mpf(1)
            for r in range(1, K):
                sp *= s
                p[r] = base_pows[r] + sp
            h = [mp.mpf(1)] + [mp.mpf(0)] * (K - 1)
            for j in range(1, K):
                acc = mp.mpf(0)
                for r in range(1, j + 1):
                    acc += p[r] * h[j - r]
                h[j] = acc / j
            rows.append(h)
        return rows

    def _cofactors(self):
        K = self.K
        if K == 1:
            return [[mp.mpf(1)]]
        A = mp.matrix(self.hhat)
        det = self.delta_sigma
        Ainv = mp.inverse(A)
        # cof[i][j] = det * (A^{-1})[j, i]
        return [[det * Ainv[j, i] for j in range(K)] for i in range(K)]

    # -- divided-difference kernels -------------------------------------

    def _dd_apply(self, g_low, g_sig):
        """DD of a kernel over (tau_low, sigma_i) for each i, from node values."""
        out = []
        for i in range(self.K):
            acc = mp.fsum(self.dd_w[i][p] * g_low[p] for p in range(self.n))
            out.append(acc + self.inv_V[i] * g_sig[i])
        return out

    def dd_log_kernel(self):
        """DD of t^(n-1) ln t over (tau_low, sigma_i), for each i."""
        with mp.workdps(self.dps):
            g_low = [self.pow_low_n1[p] * mp.log(self.tau_low[p]) for p in range(self.n)]
            g_sig = [self.pow_sig_n1[i] * mp.log(self.sigma[i]) for i in range(self.K)]
            return self._dd_apply(g_low, g_sig)

    def dd_exp_kernel(self, x):
        """DD of t^(n-1) exp(-x/t) over (tau_low, sigma_i), for each i."""
        with mp.workdps(self.dps):
            xm = mp.mpf(x)
            g_low = [self.pow_low_n1[p] * mp.exp(-xm / self.tau_low[p]) for p in range(self.n)]
            g_sig = [self.pow_sig_n1[i] * mp.exp(-xm / self.sigma[i]) for i in range(self.K)]
            return self._dd_apply(g_low, g_sig)

    def dd_incgamma_kernels(self, c):
        """DD of t^(n+j-1) P(j, c/t) for j = 1..K; P is regularized lower gamma.

        Returns a list over j of per-i DD vectors.
        """
        with mp.workdps(self.dps):
            cm = mp.mpf(c)

            def node_values(t, t_pow_n1):
                z = cm / t
                ez = mp.exp(-z)
                term = mp.mpf(1)  # z^s / s!
                partial = mp.mpf(1)
                vals = []
                tp = t_pow_n1 * t  # t^n
                for j in range(1, self.K + 1):
                    vals.append(tp * (1 - ez * partial))
                    term *= z / j
                    partial += term
                    tp *= t
                return vals

            low_vals = [node_values(self.tau_low[p], self.pow_low_n1[p]) for p in range(self.n)]
            sig_vals = [node_values(self.sigma[i], self.pow_sig_n1[i]) for i in range(self.K)]
            out = []
            for j in range(self.K):
                g_low = [low_vals[p][j] for p in range(self.n)]
                g_sig = [sig_vals[i][j] for i in range(self.K)]
                out.append(self._dd_apply(g_low, g_sig))
            return out

    # -- assembled quantities (scaled units) -----------------------------

    def expected_inverse_sum_scaled(self) -> float:
        """E(sum_i xi_i^{-1}) with eigenvalues scaled by tau_max."""
        with mp.workdps(self.dps):
            dd = self.dd_log_kernel()
            acc = mp.fsum(self.cof[i][0] * dd[i] for i in range(self.K))
            val = acc / self.delta_sigma
            return float(val)

    def pdf_scaled(self, x: float) -> float:
        """Marginal unordered-eigenvalue density at scaled argument x."""
        if x < 0:
            return 0.0
        with mp.workdps(self.dps):
            e = self.dd_exp_kernel(x)
            xm = mp.mpf(x)
            total = mp.mpf(0)
            xpow = mp.mpf(1)
            fact = mp.mpf(1)
            for j in range(self.K):
                if j:
                    xpow *= xm
                    fact *= j
                col = mp.fsum(self.cof[i][j] * e[i] for i in range(self.K))
                total += xpow / fact * col
            val = total / (self.K * self.delta_sigma)
            fval = float(val)
        if fval < -1e-9:
            raise NumericFailureError(
                f"eigenvalue density negative beyond tolerance: f({x})={fval:.3e}"
            )
        return max(fval, 0.0)

    def cdf_scaled(self, c: float) -> float:
        """P(xi <= c) at scaled threshold c, via the closed incomplete-gamma terms."""
        if c <= 0:
            return 0.0
        with mp.workdps(self.dps):
            kern = self.dd_incgamma_kernels(c)
            total = mp.mpf(0)
            for j in range(self.K):
                total += mp.fsum(self.cof[i][j] * kern[j][i] for i in range(self.K))
            val = total / (self.K * self.delta_sigma)
            fval = float(val)
        if fval < -1e-9 or fval > 1 + 1e-9:
            raise NumericFailureError(f"closed-form CDF out of range: F({c})={fval:.3e}")
        return min(max(fval, 0.0), 1.0)

    # -- cached Gauss-Legendre density table ------------------------------

    def density_table(self, points_per_panel: int = 24):
        key = points_per_panel
        cache = getattr(self, "_quad_cache", None)
        if cache is None:
            cache = {}
            self._quad_cache = cache
        if key not in cache:
            with mp.workdps(self.dps):
                trace_s = float(mp.fsum(self.tau_low) + mp.fsum(self.sigma))
            # support cut from the analytic CDF: the largest of the K
            # eigenvalues can stretch well past the trace
            x_max = trace_s + 60.0
            while 1.0 - self.cdf_scaled(x_max) > 1e-12 and x_max < 1e6:
                x_max *= 2.0
            edges = [0.0]
            e = x_max / 512.0
            while e < x_max:
                edges.append(e)
                e *= 2.0
            edges.append(x_max)
            gl_x, gl_w = np.polynomial.legendre.leggauss(points_per_panel)
            xs, ws = [], []
            for a, b in zip(edges[:-1], edges[1:]):
                xs.append(0.5 * (b - a) * gl_x + 0.5 * (a + b))
                ws.append(0.5 * (b - a) * gl_w)
            xs = np.concatenate(xs)
            ws = np.concatenate(ws)
            fs = np.array([self.pdf_scaled(float(x)) for x in xs])
            cache[key] = (xs, ws, fs)
        return cache[key]


_KERNEL_CACHE: dict[tuple, _SpectrumKernel] = {}


def _kernel_for(tau: np.ndarray, K: int) -> _SpectrumKernel:
    tau = np.asarray(tau, dtype=float)
    key = (tau.tobytes(), K)
    kern = _KERNEL_CACHE.get(key)
    if kern is None:
        kern = _SpectrumKernel(tau, K)
        if len(_KERNEL_CACHE) > 64:
            _KERNEL_CACHE.clear()
        _KERNEL_CACHE[key] = kern
    return kern


# ---------------------------------------------------------------------------
# Eigenvalue densities
# ---------------------------------------------------------------------------


def xi_pdf_multi(x, tau, K: int):
    """Conditional marginal density of an unordered eigenvalue of the K-user
    channel Gram matrix, given the correlation-matrix spectrum ``tau``.

    ``tau`` must be a prepared (distinct, positive) spectrum; pass it through
    :func:`prepare_spectrum` first.  Accepts scalar or array ``x``.
    """
    kern = _kernel_for(np.asarray(tau, dtype=float), K)
    s = kern.scale
    xs = np.asarray(x, dtype=float)
    flat = np.atleast_1d(xs)
    vals = np.array([kern.pdf_scaled(float(v) / s) / s for v in flat])
    return float(vals[0]) if xs.ndim == 0 else vals.reshape(xs.shape)


def xi_pdf_single(x, tau):
    """Density of the received-power quadratic form for a single UT (K=1)."""
    return xi_pdf_multi(x, tau, 1)


# ---------------------------------------------------------------------------
# Ergodic received gain
# ---------------------------------------------------------------------------


def expected_xi_single(tau) -> float:
    """E(xi_1) for the single-UT quadratic form.

    The determinant/Vandermonde closed form reduces algebraically to the
    spectrum sum (the quadratic form's mean is the matrix trace); the literal
    form is pinned against this reduction in the tests.
    """
    tau = _check_prepared(np.asarray(tau, dtype=float), "expected_xi_single")
    return float(np.sum(tau))


def ergodic_gain(pair: SpectrumPair, snr_ut: float, beta_1: float) -> float:
    """Ergodic received-SNR gain of a configuration over the reference one.

    snr_ut * beta_1 * [E(xi_1) - E(xi_min)] with both expectations in closed
    form; spectra must be prepared (distinct positive eigenvalues).
    """
    if snr_ut <= 0 or beta_1 <= 0:
        raise InvalidArgumentError("snr_ut and beta_1 must be > 0")
    return snr_ut * beta_1 * (expected_xi_single(pair.tau) - expected_xi_single(pair.tau_hat))


# ---------------------------------------------------------------------------
# Rate lower bound
# ---------------------------------------------------------------------------


def expected_inverse_xi_sum(tau, K: int) -> float:
    """E(sum_{i<=K} xi_i^{-1}) for the K-user channel Gram matrix."""
    kern = _kernel_for(np.asarray(tau, dtype=float), K)
    val = kern.expected_inverse_sum_scaled() / kern.scale
    if not math.isfinite(val) or val <= 0:
        raise NumericFailureError(f"E(sum xi^-1) evaluated to {val}")
    return val


def rate_lower_bound(params: SystemParams, tau) -> np.ndarray:
    """Per-UT lower bound of the zero-forcing ergodic achievable rate.

    log2(1 + snr_ut * beta_k * K / E(sum xi^-1)) per UT; the sum over UTs is
    the sum-rate bound.
    """
    e_inv = expected_inverse_xi_sum(tau, params.K)
    arg = params.snr_ut * params.beta * params.K / e_inv
    return np.log2(1.0 + arg)


def sum_rate_lower_bound(params: SystemParams, tau) -> float:
    return float(np.sum(rate_lower_bound(params, tau)))


# ---------------------------------------------------------------------------
# Symbol error rate
# ---------------------------------------------------------------------------


def ser_closed_form(params: SystemParams, tau, rel_tol: float = 1e-8) -> float:
    """Average received SER under zero forcing.

    Integrates erfc(sqrt(varpi_k * snr_ut * beta_k * x)) against the
    unordered-eigenvalue density by panelled Gauss-Legendre quadrature,
    refining the rule until two resolutions agree to ``rel_tol``.
    """
    kern = _kernel_for(np.asarray(tau, dtype=float), params.K)
    s = kern.scale

    def eval_at(points_per_panel):
        xs, ws, fs = kern.density_table(points_per_panel)
        total = 0.0
        for k in range(params.K):
            omega, varpi = params.modulation[k]
            a = varpi * params.snr_ut * params.beta[k] * s  # scaled-domain coefficient
            vals = np.array([_erfc_float(math.sqrt(a * x)) for x in xs])
            total += 0.5 * omega * float(np.sum(ws * fs * vals))
        return total / params.K

    coarse = eval_at(24)
    fine = eval_at(32)
    err = abs(fine - coarse)
    if err > rel_tol * max(abs(fine), 1e-12):
        finest = eval_at(48)
        err = abs(finest - fine)
        if err > rel_tol * max(abs(finest), 1e-12):
            raise NumericFailureError(
                f"SER quadrature did not converge (achieved {err:.3e} "
                f"vs target {rel_tol:.1e} relative)"
            )
        return finest
    return fine


# ---------------------------------------------------------------------------
# Outage probability
# ---------------------------------------------------------------------------


def outage_closed_form(params: SystemParams, tau) -> float:
    """Average outage probability: mean over UTs of P(xi <= snr_th/(snr_ut*beta_k)).

    Evaluates the closed incomplete-gamma terms of the eigenvalue CDF.
    """
    kern = _kernel_for(np.asarray(tau, dtype=float), params.K)
    s = kern.scale
    total = 0.0
    for k in range(params.K):
        c = params.snr_th / (params.snr_ut * params.beta[k])
        total += kern.cdf_scaled(c / s)
    return total / params.K


def outage_quadrature(params: SystemParams, tau, points_per_panel: int = 32) -> float:
    """Independent outage path: numeric quadrature of the eigenvalue density.

    Integrates xi_pdf_multi over [0, snr_th/(snr_ut*beta_k)] per UT with
    panelled Gauss-Legendre; used to cross-check :func:`outage_closed_form`.
    """
    kern = _kernel_for(np.asarray(tau, dtype=float), params.K)
    s = kern.scale
    gl_x, gl_w = np.polynomial.legendre.leggauss(points_per_panel)
    total = 0.0
    for k in range(params.K):
        c = params.snr_th / (params.snr_ut * params.beta[k]) / s
        if c <= 0:
            continue
        edges = [0.0]
        e = c / 256.0
        while e < c:
            edges.append(e)
            e *= 2.0
        edges.append(c)
        acc = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            xs = 0.5 * (b - a) * gl_x + 0.5 * (a + b)
            ws = 0.5 * (b - a) * gl_w
            fs = np.array([kern.pdf_scaled(float(x)) for x in xs])
            acc += float(np.sum(ws * fs))
        total += acc
    return total / params.K


# ---------------------------------------------------------------------------
# Large-array limits
# ---------------------------------------------------------------------------


def _coupled_trace(A, C) -> float:
    CA = np.asarray(C, dtype=complex) @ np.asarray(A, dtype=complex)
    return float(np.sum(np.abs(CA) ** 2))


def asymptotic_snr(A, C, snr_ut: float, beta_k: float) -> float:
    """Large-array received SNR: snr_ut * beta_k * trace(A^H C^H C A).

    The same limit holds for the zero-forcing and MRC detectors.
    """
    return snr_ut * beta_k * _coupled_trace(A, C)


def asymptotic_rate(params: SystemParams, A, C) -> float:
    """Large-array achievable sum rate (bits/s/Hz)."""
    tr = _coupled_trace(A, C)
    return float(np.sum(np.log2(1.0 + params.snr_ut * params.beta * tr)))


def asymptotic_ser(params: SystemParams, A, C) -> float:
    """Large-array average SER via erfc of the trace-form SNR."""
    tr = _coupled_trace(A, C)
    total = 0.0
    for k in range(params.K):
        omega, varpi = params.modulation[k]
        total += 0.5 * omega * _erfc_float(
            math.sqrt(varpi * params.snr_ut * params.beta[k] * tr)
        )
    return total / params.K


def asymptotic_gain(A, C, A_hat, C_hat, snr_ut: float, beta_1: float) -> float:
    """Large-array ergodic received gain over the reference configuration."""
    return snr_ut * beta_1 * (_coupled_trace(A, C) - _coupled_trace(A_hat, C_hat))


# ---------------------------------------------------------------------------
# Literal small-M transcriptions (test oracles and the exponent adjudicator)
# ---------------------------------------------------------------------------


def _literal_context(tau, K, dps=120):
    """Vandermonde pieces shared by the literal formulas (small M only)."""
    tau = _check_prepared(np.asarray(tau, dtype=float), "literal form")
    m = tau.size
    n = m - K
    if n < 1:
        raise InvalidArgumentError("literal forms need M > K")
    if m > 40:
        raise InvalidArgumentError("literal transcriptions are for small spectra only")
    with mp.workdps(dps):
        t = [mp.mpf(float(v)) for v in tau]
        B = mp.matrix(n, n)
        for r in range(n):
            for c in range(n):
                B[r, c] = t[r] ** c
        Binv = mp.inverse(B) if n > 0 else None
        vandermonde_all = mp.mpf(1)
        for i in range(m):
            for j in range(i + 1, m):
                vandermonde_all *= t[j] - t[i]
        det_B = mp.det(B)
        fact_prod = mp.mpf(1)
        for p in range(1, K):
            fact_prod *= mp.factorial(p)
        upsilon = det_B / (K * vandermonde_all * fact_prod)
    return t, n, Binv, upsilon, dps


def _literal_omega_and_cofactors(tau, K, dps=120):
    t, n, Binv, upsilon, dps = _literal_context(tau, K, dps)
    with mp.workdps(dps):
        omega = mp.matrix(K, K)
        for i in range(1, K + 1):
            for j in range(1, K + 1):
                inner = mp.mpf(0)
                for p in range(1, n + 1):
                    for q in range(1, n + 1):
                        inner += Binv[p - 1, q - 1] * t[n + i - 1] ** (p - 1) * t[q - 1] ** (
                            n + j - 1
                        )
                omega[i - 1, j - 1] = mp.factorial(j - 1) * (
                    t[n + i - 1] ** (n + j - 1) - inner
                )
        if K == 1:
            cof = mp.matrix(1, 1)
            cof[0, 0] = mp.mpf(1)
        else:
            det_omega = mp.det(omega)
            inv_omega = mp.inverse(omega)
            cof = mp.matrix(K, K)
            for i in range(K):
                for j in range(K):
                    cof[i, j] = det_omega * inv_omega[j, i]
    return t, n, Binv, upsilon, cof, dps


def literal_expected_xi_single(tau) -> float:
    """E(xi_1) via the verbatim single-UT determinant expression (small M)."""
    tau = _check_prepared(np.asarray(tau, dtype=float), "literal_expected_xi_single")
    m = tau.size
    with mp.workdps(160):
        t = [mp.mpf(float(v)) for v in tau]
        n = m - 1
        B = mp.matrix(n, n)
        for r in range(n):
            for c in range(n):
                B[r, c] = t[r] ** c
        Binv = mp.inverse(B)
        det_B = mp.det(B)
        vand = mp.mpf(1)
        for i in range(m):
            for j in range(i + 1, m):
                vand *= t[j] - t[i]
        inner = mp.mpf(0)
        for p in range(1, n + 1):
            for q in range(1, n + 1):
                inner += Binv[q - 1, p - 1] * t[m - 1] ** (q - 1) * t[p - 1] ** m
        return float(det_B / vand * (t[m - 1] ** m - inner))


def literal_xi_pdf_multi(x, tau, K) -> float:
    """Verbatim unordered-eigenvalue density (small M): the Upsilon/cofactor form."""
    t, n, Binv, upsilon, cof, dps = _literal_omega_and_cofactors(tau, K)
    with mp.workdps(dps):
        xm = mp.mpf(float(x))
        total = mp.mpf(0)
        for i in range(1, K + 1):
            for j in range(1, K + 1):
                inner = mp.mpf(0)
                for p in range(1, n + 1):
                    for q in range(1, n + 1):
                        inner += (
                            Binv[q - 1, p - 1]
                            * t[n + i - 1] ** (q - 1)
                            * t[p - 1] ** (n - 1)
                            * mp.exp(-xm / t[p - 1])
                        )
                bracket = t[n + i - 1] ** (n - 1) * mp.exp(-xm / t[n + i - 1]) - inner
                total += xm ** (j - 1) * cof[i - 1, j - 1] * bracket
        return float(upsilon * total)


def literal_expected_inverse_xi_sum(tau, K) -> float:
    """Verbatim E(sum xi^-1) (small M), with the log terms at the j=1 cofactors."""
    t, n, Binv, upsilon, cof, dps = _literal_omega_and_cofactors(tau, K)
    gamma_c = mp.mpf(EULER_GAMMA)
    with mp.workdps(dps):
        total = mp.mpf(0)
        for i in range(1, K + 1):
            for j in range(2, K + 1):
                inner = mp.mpf(0)
                for p in range(1, n + 1):
                    for q in range(1, n + 1):
                        inner += (
                            Binv[q - 1, p - 1]
                            * t[n + i - 1] ** (q - 1)
                            * t[p - 1] ** (n + j - 2)
                        )
                bracket = t[n + i - 1] ** (n + j - 2) - inner
                total += mp.factorial(j - 2) * cof[i - 1, j - 1] * bracket
        for i in range(1, K + 1):
            inner = mp.mpf(0)
            for p in range(1, n + 1):
                for q in range(1, n + 1):
                    inner += (
                        Binv[q - 1, p - 1]
                        * t[n + i - 1] ** (q - 1)
                        * t[p - 1] ** (n - 1)
                        * (mp.log(t[p - 1]) - gamma_c)
                    )
            bracket = t[n + i - 1] ** (n - 1) * (mp.log(t[n + i - 1]) - gamma_c) - inner
            total += cof[i - 1, 0] * bracket
        return float(K * upsilon * total)


def literal_outage(params: SystemParams, tau, exponent_shift: int = 0) -> float:
    """Verbatim outage expression (small M).

    ``exponent_shift=0`` uses the incomplete-gamma-consistent power
    x^(n+y-s-1); ``exponent_shift=-2`` reproduces the x^(n+y-s-3) variant.
    """
    t, n, Binv, upsilon, cof, dps = _literal_omega_and_cofactors(tau, params.K)
    with mp.workdps(dps):

        def vartheta(xv, y, k):
            ck = mp.mpf(params.snr_th) / (mp.mpf(params.snr_ut) * mp.mpf(params.beta[k]))
            first = mp.factorial(y - 1) * xv ** (n + y - 1)
            tail = mp.mpf(0)
            for s_idx in range(0, y):
                tail += (
                    mp.factorial(y - 1)
                    / mp.factorial(s_idx)
                    * ck**s_idx
                    * xv ** (n + y - s_idx - 1 + exponent_shift)
                )
            return first - mp.exp(-ck / xv) * tail

        total = mp.mpf(0)
        for k in range(params.K):
            acc = mp.mpf(0)
            for i in range(1, params.K + 1):
                for j in range(1, params.K + 1):
                    inner = mp.mpf(0)
                    for p in range(1, n + 1):
                        for q in range(1, n + 1):
                            inner += (
                                Binv[q - 1, p - 1]
                                * t[n + i - 1] ** (q - 1)
                                * vartheta(t[p - 1], j, k)
                            )
                    acc += cof[i - 1, j - 1] * (vartheta(t[n + i - 1], j, k) - inner)
            total += upsilon * acc
        return float(total / params.K)
