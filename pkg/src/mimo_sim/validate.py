"""Validation suite: the twelve acceptance checks behind `mimo-sim validate`.

Each check returns a CheckResult with the measured value, the tolerance, and
a pass flag; the report text is deterministic for a fixed config (timings
never enter the report).  Check 4 encodes a reference anchor that the
physical model documented in this package does not reproduce; it is reported
honestly as FAIL (see the check description).
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import closed_form as cf
from . import special_functions as sf
from .array_geometry import distance_pdf, make_regular, sample_bpp
from .channel_model import correlation, draw_directions, draw_small_scale, steering_matrix
from .config import ExperimentConfig
from .em_coupling import coupling_for_layout, coupling_matrix
from .monte_carlo import (
    LinkScenario,
    eigen_histogram,
    mc_gain,
    mc_outage,
    mc_rate,
    mc_ser,
    trial_rng,
)
from .sweeps import betas_for, scenario_for

SABOTAGE_ENV = "MIMO_SIM_SABOTAGE"


@dataclass
class CheckResult:
    cid: int
    description: str
    measured: str
    tolerance: str
    passed: bool
    seconds: float = 0.0


def _maybe_sabotage(result: CheckResult) -> CheckResult:
    target = os.environ.get(SABOTAGE_ENV, "")
    if target and target == str(result.cid):
        result.passed = False
        result.measured += " [sabotaged by test hook]"
    return result


# ---------------------------------------------------------------------------
# Quadrature oracles for Si/Ci (independent of special_functions internals)
# ---------------------------------------------------------------------------


def si_quadrature(x: float) -> float:
    if x <= 1.0:
        return quad(lambda t: math.sin(t) / t, 0.0, x, limit=200, epsabs=1e-13)[0]
    base = quad(lambda t: math.sin(t) / t, 0.0, 1.0, limit=200, epsabs=1e-13)[0]
    tail = quad(lambda t: 1.0 / t, 1.0, x, weight="sin", wvar=1.0, limit=400, epsabs=1e-13)[0]
    return base + tail


def ci_quadrature(x: float) -> float:
    from .constants import EULER_GAMMA as gamma

    if x <= 1.0:
        core = quad(lambda t: (math.cos(t) - 1.0) / t, 0.0, x, limit=200, epsabs=1e-13)[0]
        return gamma + math.log(x) + core
    base = quad(lambda t: (math.cos(t) - 1.0) / t, 0.0, 1.0, limit=200, epsabs=1e-13)[0]
    tail = quad(lambda t: 1.0 / t, 1.0, x, weight="cos", wvar=1.0, limit=400, epsabs=1e-13)[0]
    return gamma + base + tail


def check_1_special_functions(cfg) -> CheckResult:
    xs = np.logspace(-3, 3, 200)
    worst = 0.0
    for x in xs:
        x = float(x)
        worst = max(worst, abs(sf.sine_integral(x) - si_quadrature(x)))
        worst = max(worst, abs(sf.cosine_integral_Ci(x) - ci_quadrature(x)))
    return CheckResult(
        1,
        "Si/Ci vs adaptive-quadrature oracle on 200 log points in [1e-3, 1e3]",
        f"max abs err {worst:.3e}",
        "<= 1e-10",
        worst <= 1e-10,
    )


def check_2_bpp_distance(cfg) -> CheckResult:
    n = 100_000
    crit = 1.358 / math.sqrt(n)  # 5% Kolmogorov-Smirnov critical value
    worst = 0.0
    for M, i in ((5, 1), (10, 5), (20, 20)):
        rng = trial_rng(cfg.seed, "bpp-ks", M)
        d = np.sort(np.sqrt(rng.uniform(size=(n, M))), axis=1)[:, i - 1]  # R = 1
        grid = np.linspace(0.0, 1.0, 4097)
        pdf = np.array([distance_pdf(M, i, 1.0, float(g)) for g in grid])
        cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(grid))])
        cdf /= cdf[-1]
        samples = np.sort(d)
        cdf_at = np.interp(samples, grid, cdf)
        k = np.arange(1, n + 1)
        ks = max(np.max(k / n - cdf_at), np.max(cdf_at - (k - 1) / n))
        worst = max(worst, float(ks))
    return CheckResult(
        2,
        "sorted-BPP center-distance law vs numeric integration of its density "
        "(KS, 1e5 samples, (M,i) in {(5,1),(10,5),(20,20)})",
        f"max KS {worst:.5f}",
        f"<= {crit:.5f} (5% level)",
        worst <= crit,
    )


def check_3_coupling_identity(cfg) -> CheckResult:
    params = cfg.coupling_params()
    ident_dev = 0.0
    eye_c = coupling_matrix(complex(params.self_impedance_Z0) * np.eye(16), params)
    ident_dev = float(np.max(np.abs(eye_c - np.eye(16))))
    worst_resid = 0.0
    for idx, M in enumerate((8, 64, 256)):
        lay = sample_bpp(M, 3 * cfg.wavelength, trial_rng(cfg.seed, "coupling", idx))
        mats = coupling_for_layout(lay, params)
        scale = (complex(params.self_impedance_Z0) + complex(params.load_impedance_ZL)) * np.eye(M)
        resid = np.linalg.norm(
            mats.C @ (complex(params.load_impedance_ZL) * np.eye(M) + mats.Z_C) - scale
        ) / np.linalg.norm(scale)
        worst_resid = max(worst_resid, float(resid))
    passed = ident_dev <= 1e-12 and worst_resid <= 1e-9
    return CheckResult(
        3,
        "coupling identities: Z_C=Z0*I gives C=I; defining-equation residual for M<=256",
        f"identity dev {ident_dev:.3e}, max residual {worst_resid:.3e}",
        "<= 1e-12 and <= 1e-9",
        passed,
    )


def check_4_eigenvalue_anchor(cfg) -> CheckResult:
    hist = eigen_histogram(
        2,
        cfg.wavelength,
        10_000,
        cfg.seed,
        cfg.coupling_params(),
        P=cfg.P,
        elevation=cfg.elevation,
    )
    lo, hi = hist.rank_means
    lo_ok = abs(lo - 38.4) <= 0.15 * 38.4
    hi_ok = abs(hi - 72.3) <= 0.15 * 72.3
    return CheckResult(
        4,
        "two-antenna eigenvalue cluster means vs reference anchors 38.4/72.3 "
        "(unit-modulus steering pins the mean sum near 2P; anchors are only "
        "reachable with unit-norm steering columns or P~55, both outside this "
        "model's contracts)",
        f"cluster means ({lo:.2f}, {hi:.2f})",
        "within +/-15% of (38.4, 72.3)",
        lo_ok and hi_ok,
    )


def check_5_gain_vs_mc(cfg) -> CheckResult:
    lam = cfg.wavelength
    beta1 = betas_for(cfg, 1)
    ref = scenario_for(cfg, sample_bpp(2, cfg.radius_min(), trial_rng(cfg.seed, "c5", 0)), beta1)
    tau_hat = cf.prepare_spectrum(ref.prepared().spectrum.eigenvalues_tau)
    worst = 0.0
    for idx, M in enumerate((4, 8)):
        sc = scenario_for(cfg, sample_bpp(M, 2 * lam, trial_rng(cfg.seed, "c5", idx + 1)), beta1)
        tau = cf.prepare_spectrum(sc.prepared().spectrum.eigenvalues_tau)
        g_cf = cf.ergodic_gain(cf.SpectrumPair(tau, tau_hat), cfg.snr_ut, float(beta1[0]))
        g_mc = mc_gain(sc, ref, 100_000, cfg.seed)
        worst = max(worst, abs(g_mc.value - g_cf) / abs(g_cf))
    return CheckResult(
        5,
        "ergodic received gain closed form vs MC mean (1e5 draws, M=4 and 8 vs M_min=2)",
        f"max relative deviation {worst * 100:.3f}%",
        "<= 1%",
        worst <= 0.01,
    )


def check_6_rate_bound(cfg) -> CheckResult:
    lam = cfg.wavelength
    results = []
    gap_at_large = None
    for idx, (M, K) in enumerate(((20, 2), (40, 4), (100, 10))):
        beta = betas_for(cfg, K)
        lay = sample_bpp(M, lam, trial_rng(cfg.seed, "c6", idx))
        sc = scenario_for(cfg, lay, beta)
        tau = cf.prepare_spectrum(sc.prepared().spectrum.eigenvalues_tau)
        params = cf.SystemParams(snr_ut=cfg.snr_ut, K=K, beta=beta, M=M, snr_th=cfg.snr_th)
        lb = cf.sum_rate_lower_bound(params, tau)
        est = mc_rate(sc, 10_000, cfg.seed)
        ok = lb <= est.value + 3 * est.std_error
        gap = (est.value - lb) / est.value
        results.append((M, K, lb, est.value, est.std_error, ok, gap))
        if (M, K) == (100, 10):
            gap_at_large = gap
    all_direction = all(r[5] for r in results)
    tight = gap_at_large is not None and gap_at_large <= 0.10
    measured = "; ".join(
        f"(M={r[0]},K={r[1]}): lb={r[2]:.3f} mc={r[3]:.3f}+-{r[4]:.3f} gap={r[6] * 100:.1f}%"
        for r in results
    )
    return CheckResult(
        6,
        "ZF rate lower bound: direction (lb <= mc + 3SE) at (20,2),(40,4),(100,10); "
        "gap <= 10% at (100,10)",
        measured,
        "direction everywhere; gap <= 10%",
        all_direction and tight,
    )


def _stat_se(p_mc: float, se_mc: float, p_cf: float, trials: int) -> float:
    """Comparison SE with a binomial floor so near-zero tails compare sanely."""
    p_ref = min(max(max(p_mc, p_cf), 1.0 / trials), 1.0 - 1.0 / trials)
    return max(se_mc, math.sqrt(p_ref * (1.0 - p_ref) / trials))


def check_7_ser(cfg) -> CheckResult:
    lam = cfg.wavelength
    M, K, trials = 20, 2, 10_000
    beta = betas_for(cfg, K)
    lay = sample_bpp(M, lam, trial_rng(cfg.seed, "c7", 0))
    worst_dev = 0.0
    zf_gap = 0.0
    checked = 0
    for snr_db in np.arange(0.0, 15.1, 3.0):
        snr = 10.0 ** (snr_db / 10.0)
        sc = scenario_for(cfg, lay, beta, snr_ut=snr)
        tau = cf.prepare_spectrum(sc.prepared().spectrum.eigenvalues_tau)
        params = cf.SystemParams(snr_ut=snr, K=K, beta=beta, M=M, snr_th=cfg.snr_th)
        s_cf = cf.ser_closed_form(params, tau)
        if s_cf < 1e-3:
            continue
        s_mc = mc_ser(sc, trials, cfg.seed, flow="eigenvalue")
        s_zf = mc_ser(sc, trials, cfg.seed, flow="zf")
        dev = abs(s_cf - s_mc.value) / _stat_se(s_mc.value, s_mc.std_error, s_cf, trials)
        worst_dev = max(worst_dev, dev)
        if s_zf.value > 0:
            zf_gap = max(zf_gap, abs(s_cf - s_zf.value) / s_zf.value)
        checked += 1
    return CheckResult(
        7,
        "average SER closed form vs MC of the modeled per-UT SNR statistic "
        f"(QPSK, M=20, K=2, {checked} sweep points with SER >= 1e-3); the "
        "true-ZF link deviates from the modeled statistic for K >= 2 and is "
        "reported informationally",
        f"max |dev| {worst_dev:.2f} SE; true-ZF relative gap up to {zf_gap * 100:.1f}%",
        "<= 3 SE",
        worst_dev <= 3.0 and checked >= 3,
    )


def check_8_outage(cfg) -> CheckResult:
    lam = cfg.wavelength
    M, K, trials = 20, 2, 10_000
    beta = betas_for(cfg, K)
    lay = sample_bpp(M, lam, trial_rng(cfg.seed, "c8", 0))
    worst_dev = 0.0
    worst_quad = 0.0
    exponent_verdicts = []
    for i, snr_db in enumerate(np.arange(0.0, 15.1, 3.0)):
        snr = 10.0 ** (snr_db / 10.0)
        sc = scenario_for(cfg, lay, beta, snr_ut=snr)
        tau = cf.prepare_spectrum(sc.prepared().spectrum.eigenvalues_tau)
        params = cf.SystemParams(snr_ut=snr, K=K, beta=beta, M=M, snr_th=cfg.snr_th)
        o_cf = cf.outage_closed_form(params, tau)
        o_mc = mc_outage(sc, cfg.snr_th, trials, cfg.seed, flow="eigenvalue")
        dev = abs(o_cf - o_mc.value) / _stat_se(o_mc.value, o_mc.std_error, o_cf, trials)
        worst_dev = max(worst_dev, dev)
        if i % 2 == 0:
            o_q = cf.outage_quadrature(params, tau)
            worst_quad = max(worst_quad, abs(o_cf - o_q))
            lit_ok = cf.literal_outage(params, tau, exponent_shift=0)
            lit_paper = cf.literal_outage(params, tau, exponent_shift=-2)
            exponent_verdicts.append(
                abs(lit_ok - o_q) <= 1e-6 and abs(lit_paper - o_q) > 1e-6
            )
    corrected_wins = all(exponent_verdicts) and len(exponent_verdicts) > 0
    passed = worst_dev <= 3.0 and worst_quad <= 1e-6 and corrected_wins
    return CheckResult(
        8,
        "outage closed form vs MC of the modeled SNR statistic and vs density "
        "quadrature; exponent adjudication: the incomplete-gamma-consistent "
        "power (n+y-s-1) matches quadrature, the printed (n+y-s-3) does not",
        f"max |dev| {worst_dev:.2f} SE; |closed - quadrature| <= {worst_quad:.2e}; "
        f"corrected-exponent match: {corrected_wins}",
        "<= 3 SE; <= 1e-6; corrected exponent matches",
        passed,
    )


def check_9_asymptotics(cfg) -> CheckResult:
    lam = cfg.wavelength
    K, P, trials = 4, 400, 1200
    med_zf, med_mrc, med_gap = [], [], []
    for M in (32, 64, 128, 256):
        R = lam * math.sqrt(M) * 0.8
        lay = sample_bpp(M, R, trial_rng(cfg.seed, "c9", M))
        sc = LinkScenario(
            layout=lay,
            coupling=cfg.coupling_params(),
            P=P,
            K=K,
            snr_ut=1.0,
            beta=np.ones(K),
            elevation=cfg.elevation,
            directions_seed=cfg.seed,
        )
        prep = sc.prepared()
        beta_val = 2.0 / prep.trace_q  # target asymptotic SNR of 2
        asym = beta_val * prep.trace_q
        zf_dev, mrc_dev, zf_vals, mrc_vals = [], [], [], []
        for t in range(trials):
            rng = trial_rng(cfg.seed, "c9-trial", M * 100_000 + t)
            H = draw_small_scale(P, K, rng)
            Y = prep.Q_half @ H
            W = Y.conj().T @ Y
            diag = np.real(np.diag(np.linalg.inv(W)))
            zf = beta_val / diag
            for k in range(K):
                sig = float(np.real(W[k, k]))
                interf = sum(
                    beta_val * abs(W[k, i]) ** 2 for i in range(K) if i != k
                )
                mrc = beta_val * sig**2 / (interf + sig)
                mrc_dev.append(abs(mrc / asym - 1.0))
                mrc_vals.append(mrc)
            zf_dev.extend(np.abs(zf / asym - 1.0))
            zf_vals.extend(zf)
        med_zf.append(float(np.median(zf_dev)))
        med_mrc.append(float(np.median(mrc_dev)))
        med_gap.append(abs(float(np.median(zf_vals)) / float(np.median(mrc_vals)) - 1.0))
    zf_mono = all(a > b for a, b in zip(med_zf, med_zf[1:]))
    mrc_mono = all(a > b for a, b in zip(med_mrc, med_mrc[1:]))
    passed = (
        zf_mono
        and mrc_mono
        and med_zf[-1] <= 0.10
        and med_mrc[-1] <= 0.10
        and med_gap[-1] <= 0.10
    )
    return CheckResult(
        9,
        "trace-formula convergence (K=4, P=400, M in {32,64,128,256}): ZF and MRC "
        "median relative deviations decrease and are <= 10% at M=256; ZF and MRC "
        "medians agree within 10%",
        f"ZF dev {['%.1f%%' % (v * 100) for v in med_zf]}, "
        f"MRC dev {['%.1f%%' % (v * 100) for v in med_mrc]}, "
        f"ZF~MRC median gap {med_gap[-1] * 100:.1f}%",
        "monotone decreasing, <= 10% at M=256",
        passed,
    )


def check_10_eta_trend(cfg) -> CheckResult:
    lam = cfg.wavelength
    M, layouts = 100, 24
    params = cfg.coupling_params()
    r_grid = np.linspace(0.5, 5.0, 8)
    dirs = draw_directions(cfg.P, cfg.seed, elevation=cfg.elevation)
    eta_reg, eta_bpp = [], []
    bpp_samples = []
    for ri, rr in enumerate(r_grid):
        R = rr * lam
        lay = make_regular(M, R)
        A = steering_matrix(lay, dirs, lam)
        eta_reg.append(correlation(coupling_for_layout(lay, params).C, A).eta)
        vals = []
        for li in range(layouts):
            lay = sample_bpp(M, R, trial_rng(cfg.seed, f"c10-{ri}", li))
            A = steering_matrix(lay, dirs, lam)
            vals.append(correlation(coupling_for_layout(lay, params).C, A).eta)
        eta_bpp.append(float(np.mean(vals)))
        bpp_samples.append(vals)
    # OLS slope of the BPP mean curve with its standard error
    x = r_grid - r_grid.mean()
    y = np.array(eta_bpp)
    slope = float(np.sum(x * (y - y.mean())) / np.sum(x * x))
    resid = y - (y.mean() + slope * x)
    slope_se = math.sqrt(float(np.sum(resid**2)) / (len(x) - 2) / float(np.sum(x * x)))
    slope_neg = slope + 1.96 * slope_se < 0.0
    diff = np.array(eta_reg) - np.array(eta_bpp)
    crossing = bool(np.any(np.diff(np.sign(diff)) != 0))
    return CheckResult(
        10,
        "correlation score eta decreases in R/lambda (95% confidence) and the "
        "regular-vs-BPP curves cross on [0.5, 5] at M=100",
        f"slope {slope:.4f} +- {slope_se:.4f}; crossing: {crossing}",
        "slope + 1.96*SE < 0; at least one crossing",
        slope_neg and crossing,
    )


def check_11_rate_maximum(cfg) -> CheckResult:
    lam = cfg.wavelength
    K = 10
    beta = betas_for(cfg, K)
    m_grid = list(range(20, 301, 20))
    bounds = []
    asym_at_largest = None
    for mi, M in enumerate(m_grid):
        lay = sample_bpp(M, lam, trial_rng(cfg.seed, "c11", mi))
        sc = scenario_for(cfg, lay, beta)
        tau = cf.prepare_spectrum(sc.prepared().spectrum.eigenvalues_tau)
        params = cf.SystemParams(snr_ut=cfg.snr_ut, K=K, beta=beta, M=M, snr_th=cfg.snr_th)
        bounds.append(cf.sum_rate_lower_bound(params, tau))
        if M == m_grid[-1]:
            asym_at_largest = cf.asymptotic_rate(params, sc.prepared().A, sc.prepared().C)
    interior = max(bounds[1:-1])
    has_max = interior > bounds[0] and interior > bounds[-1]
    rel_gap = abs(asym_at_largest - bounds[-1]) / bounds[-1]
    # context: the same comparison at a radius where the spectrum concentrates
    lay3 = sample_bpp(m_grid[-1], 3 * lam, trial_rng(cfg.seed, "c11", 99))
    sc3 = scenario_for(cfg, lay3, beta)
    tau3 = cf.prepare_spectrum(sc3.prepared().spectrum.eigenvalues_tau)
    p3 = cf.SystemParams(snr_ut=cfg.snr_ut, K=K, beta=beta, M=m_grid[-1], snr_th=cfg.snr_th)
    gap3 = abs(
        cf.asymptotic_rate(p3, sc3.prepared().A, sc3.prepared().C)
        - cf.sum_rate_lower_bound(p3, tau3)
    ) / cf.sum_rate_lower_bound(p3, tau3)
    return CheckResult(
        11,
        "sum-rate bound attains an interior maximum over M in {20..300} at R=lambda; "
        "trace-limit rate within 10% of the bound at M=300 (the R=lambda spectrum "
        "does not concentrate: effective rank ~11; at R=3*lambda the same gap is "
        "near 10%)",
        f"bounds {bounds[0]:.2f}..max {interior:.2f}..{bounds[-1]:.2f}; "
        f"asym gap at R=lambda {rel_gap * 100:.1f}% (at R=3lam {gap3 * 100:.1f}%)",
        "interior max; gap <= 10%",
        has_max and rel_gap <= 0.10,
    )


def check_12_determinism(cfg) -> CheckResult:
    beta = betas_for(cfg, 2)
    lay = sample_bpp(16, cfg.radius(), trial_rng(cfg.seed, "c12", 0))
    sc = scenario_for(cfg, lay, beta)

    def run_once():
        old = os.environ.get("MIMO_SIM_THREADS")
        try:
            vals = []
            for threads in ("1", "4"):
                os.environ["MIMO_SIM_THREADS"] = threads
                est = mc_rate(sc, 400, cfg.seed)
                vals.append((est.value, est.std_error))
            return vals
        finally:
            if old is None:
                os.environ.pop("MIMO_SIM_THREADS", None)
            else:
                os.environ["MIMO_SIM_THREADS"] = old

    first = run_once()
    second = run_once()
    same_runs = first == second
    same_threads = first[0] == first[1]
    return CheckResult(
        12,
        "repeat runs and thread counts (1 vs 4) produce bit-identical MC estimates",
        f"repeat identical: {same_runs}; threads identical: {same_threads}",
        "bit-identical",
        same_runs and same_threads,
    )


ALL_CHECKS = [
    check_1_special_functions,
    check_2_bpp_distance,
    check_3_coupling_identity,
    check_4_eigenvalue_anchor,
    check_5_gain_vs_mc,
    check_6_rate_bound,
    check_7_ser,
    check_8_outage,
    check_9_asymptotics,
    check_10_eta_trend,
    check_11_rate_maximum,
    check_12_determinism,
]


def run_validation(cfg: ExperimentConfig, criteria: list[int] | None = None):
    """Run the selected acceptance checks; returns (results, report_text)."""
    selected = criteria or list(range(1, len(ALL_CHECKS) + 1))
    results = []
    for fn in ALL_CHECKS:
        cid = int(fn.__name__.split("_")[1])
        if cid not in selected:
            continue
        t0 = time.time()
        res = fn(cfg)
        res.seconds = time.time() - t0
        results.append(_maybe_sabotage(res))
    lines = [
        "validation report",
        f"seed: {cfg.seed}",
        f"config digest: {cfg.digest()}",
        "",
    ]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"[{status}] check {r.cid}: {r.description}")
        lines.append(f"         measured: {r.measured}")
        lines.append(f"         tolerance: {r.tolerance}")
    n_pass = sum(r.passed for r in results)
    lines.append("")
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return results, "\n".join(lines) + "\n"
