"""Named experiment sweeps writing CSV result files.

Each sweep mirrors one of the standard performance views: pooled eigenvalue
histograms, correlation-vs-radius, received gain, achievable rate, rate with
and without coupling, SER, and outage.  Column schemas are documented in
docs/schemas.md; all randomness flows from the single config seed.
"""

from __future__ import annotations

import math
import os

import numpy as np

from . import closed_form as cf
from .array_geometry import (
    AntennaLayout,
    make_regular,
    make_with_target_zeta,
    sample_bpp,
)
from .channel_model import correlation
from .config import ExperimentConfig
from .errors import InvalidArgumentError
from .monte_carlo import (
    LinkScenario,
    eigen_histogram,
    mc_gain,
    mc_outage,
    mc_rate,
    mc_ser,
    trial_rng,
)

SWEEP_NAMES = ("eigen-hist", "eta", "gain", "rate", "rate-coupling", "ser", "outage")


def _fmt(x) -> str:
    if isinstance(x, float):
        if not math.isfinite(x):
            raise InvalidArgumentError(f"non-finite cell value {x!r} in sweep output")
        return repr(float(x))
    return str(x)


def _write_csv(path, header_comment: str, columns: list[str], rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header_comment + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def layout_for(cfg: ExperimentConfig, M: int, R: float, tag: str, index: int = 0) -> AntennaLayout:
    """Deterministic layout draw honoring the config's zeta policy."""
    rng = trial_rng(cfg.seed, f"layout-{tag}", index)
    if cfg.zeta is None:
        return sample_bpp(M, R, rng)
    if cfg.zeta == 0.0:
        return make_regular(M, R)
    if abs(cfg.zeta - 1.5) < 1e-12:
        return sample_bpp(M, R, rng)  # the BPP ensemble is the zeta~1.5 population
    return make_with_target_zeta(M, R, cfg.zeta, tol=0.15, seed=rng)


def betas_for(cfg: ExperimentConfig, K: int | None = None) -> np.ndarray:
    """Frozen large-scale factors drawn once from the config seed."""
    from .channel_model import draw_large_scale

    return draw_large_scale(
        K or cfg.K,
        cfg.l_resist,
        (cfg.l_min, cfg.l_max),
        cfg.pathloss_v,
        cfg.sigma_shadow_db,
        trial_rng(cfg.seed, "large-scale", 0),
    )


def scenario_for(
    cfg: ExperimentConfig,
    layout: AntennaLayout,
    beta: np.ndarray,
    snr_ut: float | None = None,
    coupled: bool = True,
) -> LinkScenario:
    return LinkScenario(
        layout=layout,
        coupling=cfg.coupling_params(),
        P=cfg.P,
        K=beta.size,
        snr_ut=cfg.snr_ut if snr_ut is None else snr_ut,
        beta=beta,
        elevation=cfg.elevation,
        directions_seed=cfg.seed,
        coupled=coupled,
    )


def _spectrum_for(scenario: LinkScenario) -> np.ndarray:
    return cf.prepare_spectrum(scenario.prepared().spectrum.eigenvalues_tau)


def _params_for(cfg, scenario, snr_ut=None) -> cf.SystemParams:
    return cf.SystemParams(
        snr_ut=scenario.snr_ut if snr_ut is None else snr_ut,
        K=scenario.K,
        beta=scenario.beta,
        M=scenario.layout.M,
        snr_th=cfg.snr_th,
        modulation=scenario.modulation,
    )


# ---------------------------------------------------------------------------
# Individual sweeps
# ---------------------------------------------------------------------------


def sweep_eigen_hist(cfg, out_dir, axes):
    M = int(axes.get("M", [2])[0])
    layouts = int(axes.get("layouts", [max(cfg.trials, 1000)])[0])
    hist = eigen_histogram(
        M,
        cfg.radius(),
        layouts,
        cfg.seed,
        cfg.coupling_params(),
        P=cfg.P,
        elevation=cfg.elevation,
    )
    rows = [
        (float(lo), float(hi), int(c))
        for lo, hi, c in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts)
    ]
    means = ",".join(f"{m:.4f}" for m in hist.rank_means)
    path = os.path.join(out_dir, "eigen_hist.csv")
    _write_csv(
        path,
        f"# eigen-hist M={M} R={cfg.radius()!r} layouts={layouts} seed={cfg.seed} "
        f"rank_means={means} digest={cfg.digest()}",
        ["bin_left", "bin_right", "count"],
        rows,
    )
    return path, [f"eigen-hist: rank means of sorted eigenvalues: {means}"]


def sweep_eta(cfg, out_dir, axes):
    lam = cfg.wavelength
    r_list = axes.get("R", [x * lam for x in np.linspace(0.5, 5.0, 10)])
    zeta_list = axes.get("zeta", [0.0, 1.5])
    layouts = int(axes.get("layouts", [24])[0])
    rows = []
    curves = {}
    for z in zeta_list:
        etas_per_r = []
        for ri, R in enumerate(r_list):
            if z == 0.0:
                lay = make_regular(cfg.M, R)
                vals = [_eta_for(cfg, lay)]
            else:
                vals = []
                for li in range(layouts):
                    rng = trial_rng(cfg.seed, f"eta-{z}-{ri}", li)
                    lay = (
                        sample_bpp(cfg.M, R, rng)
                        if abs(z - 1.5) < 1e-12
                        else make_with_target_zeta(cfg.M, R, z, tol=0.15, seed=rng)
                    )
                    vals.append(_eta_for(cfg, lay))
            mean = float(np.mean(vals))
            se = float(np.std(vals, ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            rows.append((cfg.M, float(R / lam), float(z), mean, se, len(vals)))
            etas_per_r.append(mean)
        curves[z] = np.array(etas_per_r)
    path = os.path.join(out_dir, "eta.csv")
    _write_csv(
        path,
        f"# eta sweep M={cfg.M} seed={cfg.seed} digest={cfg.digest()}",
        ["M", "R_over_lambda", "zeta", "eta_mean", "eta_se", "layouts"],
        rows,
    )
    summary = []
    if len(zeta_list) >= 2:
        diff = curves[zeta_list[0]] - curves[zeta_list[1]]
        sign_change = np.nonzero(np.diff(np.sign(diff)) != 0)[0]
        rr = np.asarray(r_list) / lam
        if sign_change.size:
            summary.append(
                f"eta: curves zeta={zeta_list[0]} and zeta={zeta_list[1]} cross near "
                f"R/lambda={rr[sign_change[0]]:.2f}-{rr[sign_change[0] + 1]:.2f}"
            )
        else:
            summary.append("eta: no crossing found on the sampled radius grid")
    return path, summary


def _eta_for(cfg, layout) -> float:
    from .channel_model import draw_directions, steering_matrix
    from .em_coupling import coupling_for_layout

    dirs = draw_directions(cfg.P, cfg.seed, elevation=cfg.elevation)
    mats = coupling_for_layout(layout, cfg.coupling_params())
    A = steering_matrix(layout, dirs, cfg.wavelength)
    return correlation(mats.C, A).eta


def sweep_gain(cfg, out_dir, axes):
    lam = cfg.wavelength
    m_list = axes.get("M", list(range(50, 451, 100)))
    r_list = axes.get("R", [2 * lam, 3 * lam])
    beta1 = betas_for(cfg, 1)
    ref_layout = layout_for(cfg, cfg.M_min, cfg.radius_min(), "gain-ref")
    ref = scenario_for(cfg, ref_layout, beta1)
    tau_hat = _spectrum_for(ref)
    rows = []
    for R in r_list:
        for mi, M in enumerate(m_list):
            lay = layout_for(cfg, int(M), R, f"gain-{R}", mi)
            sc = scenario_for(cfg, lay, beta1)
            tau = _spectrum_for(sc)
            g_cf = cf.ergodic_gain(cf.SpectrumPair(tau, tau_hat), cfg.snr_ut, float(beta1[0]))
            g_mc = mc_gain(sc, ref, cfg.trials, cfg.seed)
            rows.append((int(M), float(R / lam), g_cf, g_mc.value, g_mc.std_error))
    path = os.path.join(out_dir, "gain.csv")
    _write_csv(
        path,
        f"# gain sweep M_min={cfg.M_min} R_min={cfg.radius_min()!r} seed={cfg.seed} "
        f"digest={cfg.digest()}",
        ["M", "R_over_lambda", "gain_cf", "gain_mc", "gain_mc_se"],
        rows,
    )
    return path, [f"gain: {len(rows)} points, max closed-form {max(r[2] for r in rows):.4g}"]


def sweep_rate(cfg, out_dir, axes):
    m_list = axes.get("M", list(range(20, 301, 20)))
    R = float(axes.get("R", [cfg.radius()])[0])
    beta = betas_for(cfg)
    rows = []
    for mi, M in enumerate(m_list):
        M = int(M)
        if M <= cfg.K:
            raise InvalidArgumentError(f"rate sweep needs M > K, got M={M}, K={cfg.K}")
        lay = layout_for(cfg, M, R, "rate", mi)
        sc = scenario_for(cfg, lay, beta)
        tau = _spectrum_for(sc)
        params = _params_for(cfg, sc)
        lb = cf.sum_rate_lower_bound(params, tau)
        est = mc_rate(sc, cfg.trials, cfg.seed)
        asym = cf.asymptotic_rate(params, sc.prepared().A, sc.prepared().C)
        rows.append((M, R, lay.zeta, lb, est.value, est.std_error, asym))
    path = os.path.join(out_dir, "rate.csv")
    _write_csv(
        path,
        f"# rate sweep K={cfg.K} seed={cfg.seed} digest={cfg.digest()}",
        ["M", "R", "zeta", "rate_lb", "rate_mc", "rate_mc_se", "rate_asym"],
        rows,
    )
    best = max(rows, key=lambda r: r[3])
    return path, [f"rate: bound peaks at M={best[0]} ({best[3]:.3f} bits/s/Hz)"]


def sweep_rate_coupling(cfg, out_dir, axes):
    snr_db_list = axes.get("snr", list(np.arange(0.0, 20.5, 2.0)))
    M = int(axes.get("M", [cfg.M])[0])
    beta = betas_for(cfg)
    lay = layout_for(cfg, M, cfg.radius(), "rate-coupling")
    rows = []
    for snr_db in snr_db_list:
        snr = 10.0 ** (float(snr_db) / 10.0)
        vals = []
        for coupled in (True, False):
            sc = scenario_for(cfg, lay, beta, snr_ut=snr, coupled=coupled)
            tau = _spectrum_for(sc)
            params = _params_for(cfg, sc, snr_ut=snr)
            lb = cf.sum_rate_lower_bound(params, tau)
            est = mc_rate(sc, cfg.trials, cfg.seed)
            vals.extend([lb, est.value, est.std_error])
        rows.append((float(snr_db), M, vals[0], vals[3], vals[1], vals[2], vals[4], vals[5]))
    path = os.path.join(out_dir, "rate_coupling.csv")
    _write_csv(
        path,
        f"# rate-coupling sweep M={M} K={cfg.K} seed={cfg.seed} digest={cfg.digest()}",
        [
            "SNR_UT_dB",
            "M",
            "rate_lb_coupled",
            "rate_lb_uncoupled",
            "rate_mc_coupled",
            "rate_mc_coupled_se",
            "rate_mc_uncoupled",
            "rate_mc_uncoupled_se",
        ],
        rows,
    )
    return path, ["rate-coupling: coupled vs uncoupled bound and MC written"]


def sweep_ser(cfg, out_dir, axes):
    snr_db_list = axes.get("snr", list(np.arange(0.0, 15.5, 1.0)))
    M = int(axes.get("M", [20])[0])
    K = min(cfg.K, 2) if "K" not in axes else int(axes["K"][0])
    beta = betas_for(cfg, K)
    lay = layout_for(cfg, M, cfg.radius(), "ser")
    rows = []
    for snr_db in snr_db_list:
        snr = 10.0 ** (float(snr_db) / 10.0)
        sc = scenario_for(cfg, lay, beta, snr_ut=snr)
        tau = _spectrum_for(sc)
        params = _params_for(cfg, sc, snr_ut=snr)
        s_cf = cf.ser_closed_form(params, tau)
        s_mc = mc_ser(sc, cfg.trials, cfg.seed, flow="eigenvalue")
        s_zf = mc_ser(sc, cfg.trials, cfg.seed, flow="zf")
        s_asym = cf.asymptotic_ser(params, sc.prepared().A, sc.prepared().C)
        rows.append(
            (
                float(snr_db),
                M,
                cfg.radius(),
                s_cf,
                s_mc.value,
                s_mc.std_error,
                s_zf.value,
                s_zf.std_error,
                s_asym,
            )
        )
    path = os.path.join(out_dir, "ser.csv")
    _write_csv(
        path,
        f"# ser sweep M={M} K={K} seed={cfg.seed} digest={cfg.digest()}",
        [
            "SNR_UT_dB",
            "M",
            "R",
            "ser_cf",
            "ser_mc",
            "ser_mc_se",
            "ser_zf_mc",
            "ser_zf_mc_se",
            "ser_asym",
        ],
        rows,
    )
    return path, [f"ser: closed form spans {rows[-1][3]:.3g}..{rows[0][3]:.3g}"]


def sweep_outage(cfg, out_dir, axes):
    snr_db_list = axes.get("snr", list(np.arange(0.0, 15.5, 1.0)))
    M = int(axes.get("M", [20])[0])
    K = min(cfg.K, 2) if "K" not in axes else int(axes["K"][0])
    beta = betas_for(cfg, K)
    lay = layout_for(cfg, M, cfg.radius(), "outage")
    rows = []
    for snr_db in snr_db_list:
        snr = 10.0 ** (float(snr_db) / 10.0)
        sc = scenario_for(cfg, lay, beta, snr_ut=snr)
        tau = _spectrum_for(sc)
        params = _params_for(cfg, sc, snr_ut=snr)
        o_cf = cf.outage_closed_form(params, tau)
        o_mc = mc_outage(sc, cfg.snr_th, cfg.trials, cfg.seed, flow="eigenvalue")
        o_zf = mc_outage(sc, cfg.snr_th, cfg.trials, cfg.seed, flow="zf")
        rows.append(
            (
                float(snr_db),
                M,
                cfg.radius(),
                o_cf,
                o_mc.value,
                o_mc.std_error,
                o_zf.value,
                o_zf.std_error,
            )
        )
    path = os.path.join(out_dir, "outage.csv")
    _write_csv(
        path,
        f"# outage sweep M={M} K={K} SNR_th_dB={cfg.snr_th_db} seed={cfg.seed} "
        f"digest={cfg.digest()}",
        [
            "SNR_UT_dB",
            "M",
            "R",
            "outage_cf",
            "outage_mc",
            "outage_mc_se",
            "outage_zf_mc",
            "outage_zf_mc_se",
        ],
        rows,
    )
    return path, [f"outage: closed form spans {rows[-1][3]:.3g}..{rows[0][3]:.3g}"]


_SWEEPS = {
    "eigen-hist": sweep_eigen_hist,
    "eta": sweep_eta,
    "gain": sweep_gain,
    "rate": sweep_rate,
    "rate-coupling": sweep_rate_coupling,
    "ser": sweep_ser,
    "outage": sweep_outage,
}


def run_sweep(name: str, cfg: ExperimentConfig, out_dir: str, axes: dict | None = None):
    """Run a named sweep; returns (csv_path, summary_lines)."""
    if name not in _SWEEPS:
        raise InvalidArgumentError(
            f"unknown sweep {name!r}; choose from {', '.join(SWEEP_NAMES)}"
        )
    os.makedirs(out_dir, exist_ok=True)
    return _SWEEPS[name](cfg, out_dir, axes or {})
