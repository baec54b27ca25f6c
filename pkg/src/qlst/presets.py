"""Figure presets: parameter sweeps bound to machine-checkable assertions.

Each preset reproduces one figure's dataset as tabular rows and carries
the caption-level claims as assertions evaluated on the produced data.
Assertions sourced from eyeballed caption values use generous bands and
are marked caption-derived in the report.

Grid densities are sized for a desk machine rather than print quality;
every knob is overridable through the ``overrides`` mapping (axis
ranges, trial counts, thread count).  Written CSV is RFC-4180 with a
header row and shortest round-trip float formatting, so re-running a
preset with the same configuration reproduces the file byte for byte.
"""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import QlstError, UnreachableTargetError
from .quantizer import INFINITE
from .rates import (
    bussgang_rate,
    large_alpha_tau_opt,
    optimize_training,
    rate_known,
    required_alpha_for_rate,
    small_alpha_rate,
    small_alpha_tau_opt,
)
from .replica import SystemConfig, make_quantizer, mutual_info_per_rx
from .scalar_awgn import input_prior
from .ser import (
    critical_snr,
    required_alpha_for_ser,
    required_tau_prime_for_ser,
    ser_pipeline,
)

BETA_DEFAULT = 40.0
MAX_FAILED_FRACTION = 0.02


def _db(rho: float) -> float:
    return math.inf if math.isinf(rho) else 10.0 * math.log10(rho)


def _lin(snr_db: float) -> float:
    return math.inf if math.isinf(snr_db) else 10.0 ** (snr_db / 10.0)


def _bits_label(bits) -> str:
    return "inf" if bits == INFINITE else str(int(bits))


@dataclass(frozen=True)
class AssertionResult:
    name: str
    passed: bool
    detail: str
    caption_derived: bool = False


@dataclass
class PresetResult:
    preset_id: str
    columns: list
    rows: list
    assertions: list = field(default_factory=list)
    n_failed_points: int = 0

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format_cell(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def write_csv(self, directory) -> str:
        import os

        path = os.path.join(str(directory), f"{self.preset_id}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        return path


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


# ---------------------------------------------------------------------------
# rate figures


def _trained_rate_point(args):
    snr_db, alpha, a_bits, bits, beta = args
    rho = _lin(snr_db)
    try:
        cfg = SystemConfig(rho=rho, alpha=alpha, quantizer=make_quantizer(bits, rho),
                           beta=beta, input_prior=input_prior(a_bits))
        opt = optimize_training(cfg)
        return opt.rate_opt, opt.tau_opt
    except QlstError:
        return math.nan, math.nan


def _fig1_rows(ov, threads):
    alphas = ov.get("alphas", np.geomspace(0.5, 64.0, 10))
    snrs = ov.get("snr_db", (0.0, 10.0))
    a_list = ov.get("dac_bits", (1, 2, INFINITE))
    b_list = ov.get("adc_bits", (1, INFINITE))
    beta = ov.get("beta", BETA_DEFAULT)
    jobs = [(s, float(al), a, b, beta) for s in snrs for a in a_list for b in b_list for al in alphas]
    trained = _pmap(_trained_rate_point, jobs, threads)
    rows = []
    for (s, al, a, b, beta_), (r_opt, tau_opt) in zip(jobs, trained):
        rho = _lin(s)
        r_kn = rate_known(rho, 1.0, al, make_quantizer(b, rho), input_prior(a))
        rows.append({
            "snr_db": s, "alpha": al, "dac_bits": _bits_label(a), "adc_bits": _bits_label(b),
            "rate_opt": r_opt, "tau_opt": tau_opt, "rate_known": r_kn,
        })
    return rows


def _crossing_alpha(rows, key, target, **match):
    """Interpolate (log-alpha) where a swept curve crosses the target rate."""
    pts = sorted(
        (r["alpha"], r[key]) for r in rows
        if all(r[k] == v for k, v in match.items()) and not math.isnan(r[key])
    )
    for (a0, v0), (a1, v1) in zip(pts, pts[1:]):
        if (v0 - target) * (v1 - target) <= 0 and v0 != v1:
            t = (target - v0) / (v1 - v0)
            return math.exp(math.log(a0) + t * (math.log(a1) - math.log(a0)))
    return math.nan


def _fig1_checks(rows, ov):
    markers = [
        ("known_binf", "rate_known", {"adc_bits": "inf"}, 2.0),
        ("trained_binf", "rate_opt", {"adc_bits": "inf"}, 4.0),
        ("known_b1", "rate_known", {"adc_bits": "1"}, 8.0),
        ("trained_b1", "rate_opt", {"adc_bits": "1"}, 28.0),
    ]
    out = []
    for name, key, match, expect in markers:
        got = _crossing_alpha(rows, key, 3.6, snr_db=10.0, dac_bits="2", **match)
        ok = math.isfinite(got) and abs(got - expect) / expect <= 0.15
        out.append(AssertionResult(
            f"fig1.marker.{name}", ok,
            f"alpha at 90% saturation = {got:.3g} (expected ~{expect:g} +-15%)",
            caption_derived=True,
        ))
    return out


def _fig2_rows(ov, threads):
    alphas = ov.get("alphas", np.geomspace(1.0, 2000.0, 12))
    snrs = ov.get("snr_db", (0.0, 10.0))
    a_list = ov.get("dac_bits", (1, 2))
    b_list = ov.get("adc_bits", (1, INFINITE))
    beta = ov.get("beta", BETA_DEFAULT)
    jobs = [(s, float(al), a, b, beta) for s in snrs for a in a_list for b in b_list for al in alphas]
    trained = _pmap(_trained_rate_point, jobs, threads)
    rows = []
    for (s, al, a, b, beta_), (r_opt, tau_opt) in zip(jobs, trained):
        row = {
            "snr_db": s, "alpha": al, "dac_bits": _bits_label(a), "adc_bits": _bits_label(b),
            "rate_opt": r_opt, "tau_opt": tau_opt, "tau_opt_beta": tau_opt * beta_,
        }
        if a == 1 and b in (1, INFINITE) and s == 10.0:
            row["tau_large_alpha"] = large_alpha_tau_opt(_lin(s), beta_, al, b)
        rows.append(row)
    return rows


def _fig2_checks(rows, ov):
    out = []
    below = [r for r in rows if not math.isnan(r["tau_opt"]) and r["tau_opt_beta"] < 1.0]
    out.append(AssertionResult(
        "fig2.tau_beta_below_one", bool(below),
        f"{len(below)} swept points have tau_opt*beta < 1", caption_derived=True,
    ))
    marks = []
    for alpha, bits in ((4.0, "inf"), (28.0, "1")):
        cand = [r for r in rows if r["dac_bits"] == "2" and r["adc_bits"] == bits
                and r["snr_db"] == 10.0 and not math.isnan(r["tau_opt"])]
        if cand:
            nearest = min(cand, key=lambda r: abs(math.log(r["alpha"] / alpha)))
            marks.append(nearest["tau_opt"])
    ok = bool(marks) and all(abs(t - 0.07) <= 0.02 for t in marks)
    out.append(AssertionResult(
        "fig2.tau_opt_near_markers", ok,
        f"tau_opt at 90% markers: {['%.3f' % t for t in marks]} (0.07 +- 0.02)",
        caption_derived=True,
    ))
    approx = [(r["tau_large_alpha"], r["tau_opt"]) for r in rows
              if r.get("tau_large_alpha") is not None and r["adc_bits"] == "1"
              and r["alpha"] >= 1000.0 and not math.isnan(r["tau_opt"])]
    ok = bool(approx) and all(abs(a / t - 1.0) <= 0.25 for a, t in approx)
    out.append(AssertionResult(
        "fig2.large_alpha_formula", ok,
        f"{len(approx)} large-alpha points within 25% of the closed form",
    ))
    return out


def _required_alpha_point(args):
    snr_db, bits, known, target, beta, rtol = args
    rho = _lin(snr_db)
    try:
        alpha = required_alpha_for_rate(target, rho, 1.0, beta, input_prior(1), bits,
                                        known=known, rtol=rtol)
        return alpha, ""
    except UnreachableTargetError as exc:
        return math.nan, f"unreachable (ceiling {exc.asymptote:.3g})"
    except QlstError as exc:
        return math.nan, str(exc)


def _fig3_rows(ov, threads):
    snrs = ov.get("snr_db", tuple(np.arange(-10.0, 30.1, 2.5)) + (math.inf,))
    b_list = ov.get("adc_bits", (1, 2, 3, INFINITE))
    beta = ov.get("beta", BETA_DEFAULT)
    target = ov.get("target_rate", 1.8)
    rtol = ov.get("rtol", 1e-2)
    jobs = [(s, b, known, target, beta, rtol)
            for b in b_list for known in (False, True) for s in snrs]
    vals = _pmap(_required_alpha_point, jobs, threads)
    return [
        {"snr_db": s, "adc_bits": _bits_label(b), "known_channel": int(known),
         "alpha_required": v[0], "note": v[1]}
        for (s, b, known, _, _, _), v in zip(jobs, vals)
    ]


def _fig3_checks(rows, ov):
    out = []
    for bits in ("1", "2", "3"):
        r_inf = [r for r in rows if r["adc_bits"] == bits and math.isinf(r["snr_db"])
                 and not r["known_channel"]]
        ok = bool(r_inf) and all(math.isfinite(r["alpha_required"]) and r["alpha_required"] > 0.01
                                 for r in r_inf)
        out.append(AssertionResult(
            f"fig3.asymptote.b{bits}", ok,
            f"rho=inf floor alpha = {[round(r['alpha_required'], 3) for r in r_inf]}",
        ))
    r_inf = [r for r in rows if r["adc_bits"] == "inf" and math.isinf(r["snr_db"])
             and not r["known_channel"]]
    ok = bool(r_inf) and all(r["alpha_required"] <= 0.011 for r in r_inf)
    out.append(AssertionResult(
        "fig3.no_asymptote.binf", ok,
        f"rho=inf, unquantized: alpha = {[r['alpha_required'] for r in r_inf]} (driven to bracket floor)",
    ))
    for bits in ("1", "inf"):
        seq = [r["alpha_required"] for r in sorted(
            (r for r in rows if r["adc_bits"] == bits and not r["known_channel"]
             and math.isfinite(r["snr_db"]) and math.isfinite(r["alpha_required"])),
            key=lambda r: r["snr_db"])]
        ok = all(b <= a * 1.02 for a, b in zip(seq, seq[1:]))
        out.append(AssertionResult(
            f"fig3.monotone.b{bits}", ok, "alpha required nonincreasing in SNR"))
    return out


def _fig4_point(args):
    snr_db, alpha, a_bits, b_bits, beta = args
    rho = _lin(snr_db)
    prior = input_prior(a_bits)
    try:
        r_l, tau_l = bussgang_rate(rho, alpha, beta, b_bits, prior)
        cfg = SystemConfig(rho=rho, alpha=alpha, quantizer=make_quantizer(b_bits, rho),
                           beta=beta, input_prior=prior)
        opt = optimize_training(cfg)
        return r_l, tau_l, opt.rate_opt, opt.tau_opt
    except QlstError:
        return math.nan, math.nan, math.nan, math.nan


def _fig4_rows(ov, threads):
    snrs = ov.get("snr_db", tuple(np.arange(-10.0, 14.1, 2.0)))
    alphas = ov.get("alphas", (10.0, 0.1))
    a_list = ov.get("dac_bits", (1, 2, INFINITE))
    b_list = ov.get("adc_bits", (1, 2))
    beta = ov.get("beta", BETA_DEFAULT)
    jobs = [(s, al, a, b, beta) for al in alphas for a in a_list for b in b_list for s in snrs]
    vals = _pmap(_fig4_point, jobs, threads)
    return [
        {"snr_db": s, "alpha": al, "dac_bits": _bits_label(a), "adc_bits": _bits_label(b),
         "rate_linearized": v[0], "tau_opt_linearized": v[1], "rate_opt": v[2], "tau_opt": v[3]}
        for (s, al, a, b, _), v in zip(jobs, vals)
    ]


def _fig4_checks(rows, ov):
    out = []
    low = [r for r in rows if r["alpha"] == 10.0 and r["dac_bits"] == "1"
           and r["adc_bits"] == "1" and r["snr_db"] <= 6.0
           and not math.isnan(r["rate_opt"])]
    gap = max((abs(r["rate_linearized"] - r["rate_opt"]) for r in low), default=math.nan)
    out.append(AssertionResult(
        "fig4.linearized_low_snr", bool(low) and gap <= 0.1,
        f"max |R_L - R_opt| = {gap:.4f} for SNR <= 6 dB (a=1, b=1, alpha=10)",
    ))
    small = [r for r in rows if r["alpha"] == 0.1 and not math.isnan(r["rate_opt"])]
    worst = 0.0
    for b in ("1", "2"):
        for s in sorted({r["snr_db"] for r in small}):
            pair = {r["dac_bits"]: r["rate_opt"] for r in small
                    if r["adc_bits"] == b and r["snr_db"] == s}
            if "1" in pair and "2" in pair:
                worst = max(worst, abs(pair["1"] - pair["2"]))
    out.append(AssertionResult(
        "fig4.small_alpha_dac_insensitive", bool(small) and worst <= 0.05,
        f"max |rate(a=1) - rate(a=2)| = {worst:.4f} at alpha=0.1",
        caption_derived=True,
    ))
    return out


def _fig5_rows(ov, threads):
    betas = ov.get("betas", (5.0, 10.0, 20.0, 40.0, 80.0, 160.0))
    snrs = ov.get("snr_db", (0.0, 10.0))
    b_list = ov.get("adc_bits", (1, 2, INFINITE))
    target = ov.get("target_rate", 1.8)
    rtol = ov.get("rtol", 1e-2)
    jobs = [(s, b, False, target, beta, rtol) for s in snrs for b in b_list for beta in betas]
    vals = _pmap(_required_alpha_point, jobs, threads)
    return [
        {"snr_db": s, "adc_bits": _bits_label(b), "beta": beta,
         "alpha_required": v[0], "note": v[1]}
        for (s, b, _, _, beta, _), v in zip(jobs, vals)
    ]


def _fig5_checks(rows, ov):
    out = []
    groups = {}
    for r in rows:
        if math.isfinite(r["alpha_required"]):
            groups.setdefault((r["snr_db"], r["adc_bits"]), []).append((r["beta"], r["alpha_required"]))
    mono = all(
        all(a1 >= a2 * 0.98 for (_, a1), (_, a2) in zip(sorted(g), sorted(g)[1:]))
        for g in groups.values()
    )
    out.append(AssertionResult("fig5.monotone_in_beta", mono,
                               "required alpha nonincreasing in beta"))
    fast = []
    for g in groups.values():
        d = dict(g)
        if 10.0 in d and 40.0 in d and 160.0 in d:
            fast.append(d[10.0] / d[40.0] >= d[40.0] / d[160.0])
    out.append(AssertionResult(
        "fig5.fast_change_below_40", bool(fast) and all(fast),
        "alpha changes faster below beta=40 than above", caption_derived=True,
    ))
    return out


def _fig6_rows(ov, threads):
    betas = ov.get("betas", (10.0, 20.0, 40.0, 80.0, 160.0))
    snrs = ov.get("snr_db", (0.0, 10.0))
    b_list = ov.get("adc_bits", (1, 2, INFINITE))
    target = ov.get("target_rate", 1.8)
    rtol = ov.get("rtol", 1e-2)
    anchor_jobs = [(s, b, False, target, BETA_DEFAULT, rtol) for s in snrs for b in b_list]
    anchors = _pmap(_required_alpha_point, anchor_jobs, threads)
    jobs = []
    for (s, b, *_), (alpha, note) in zip(anchor_jobs, anchors):
        if math.isfinite(alpha):
            jobs.extend((s, float(beta), alpha, b) for beta in betas)
    vals = _pmap(_fig6_point, jobs, threads)
    return [
        {"snr_db": s, "beta": beta, "adc_bits": _bits_label(b), "alpha": alpha,
         "rate_opt": v[0], "tau_opt": v[1]}
        for (s, beta, alpha, b), v in zip(jobs, vals)
    ]


def _fig6_point(args):
    snr_db, beta, alpha, bits = args
    rho = _lin(snr_db)
    try:
        cfg = SystemConfig(rho=rho, alpha=alpha, quantizer=make_quantizer(bits, rho),
                           beta=beta, input_prior=input_prior(1))
        opt = optimize_training(cfg)
        return opt.rate_opt, opt.tau_opt
    except QlstError:
        return math.nan, math.nan


def _fig6_checks(rows, ov):
    out = []
    by_beta = {}
    for r in rows:
        if not math.isnan(r["tau_opt"]):
            by_beta.setdefault(r["beta"], []).append(r)
    tau_ok, rate_ok = [], []
    for beta, grp in by_beta.items():
        taus = [r["tau_opt"] for r in grp]
        rates = [r["rate_opt"] for r in grp]
        tau_ok.append(max(taus) - min(taus) <= 0.03)
        rate_ok.append(max(rates) - min(rates) <= 0.2)
    out.append(AssertionResult(
        "fig6.tau_opt_overlap", bool(tau_ok) and all(tau_ok),
        "tau_opt curves for different (b, SNR) overlap within 0.03", caption_derived=True,
    ))
    out.append(AssertionResult(
        "fig6.rate_overlap", bool(rate_ok) and all(rate_ok),
        "rate curves overlap within 0.2 bits", caption_derived=True,
    ))
    return out


def _fig7_rows(ov, threads):
    taus = ov.get("taus", np.geomspace(5e-3, 0.9, 40))
    snrs = ov.get("snr_db", (0.0, 10.0, math.inf))
    b_list = ov.get("adc_bits", (1, 2, 3, INFINITE))
    beta = ov.get("beta", BETA_DEFAULT)
    rows = []
    for s in snrs:
        rho = _lin(s)
        for b in b_list:
            for t in taus:
                try:
                    rate = small_alpha_rate(float(t), rho, 1.0, beta, make_quantizer(b, rho))
                except QlstError:
                    rate = math.nan
                rows.append({"snr_db": s, "adc_bits": _bits_label(b), "tau": float(t),
                             "rate_per_rx": rate, "exact_alpha": None, "rate_exact": None})
    alpha = ov.get("exact_alpha", 0.1)
    rho = _lin(10.0)
    for b in ov.get("exact_adc_bits", (1,)):
        for t in taus:
            cfg = SystemConfig(rho=rho, alpha=alpha, quantizer=make_quantizer(b, rho),
                               beta=beta, tau=float(t), input_prior=input_prior(1))
            try:
                exact = (1.0 - float(t)) * mutual_info_per_rx(cfg).mutual_info
            except QlstError:
                exact = math.nan
            rows.append({"snr_db": 10.0, "adc_bits": _bits_label(b), "tau": float(t),
                         "rate_per_rx": None, "exact_alpha": alpha, "rate_exact": exact})
    return rows


def _fig7_checks(rows, ov):
    out = []
    approx = {(r["adc_bits"], r["tau"]): r["rate_per_rx"] for r in rows
              if r["snr_db"] == 10.0 and r["rate_per_rx"] is not None}
    rel = []
    for r in rows:
        if r["rate_exact"] is not None and not math.isnan(r["rate_exact"]):
            a = approx.get((r["adc_bits"], r["tau"]))
            if a and a > 1e-6:
                rel.append(abs(a - r["rate_exact"]) / r["rate_exact"])
    out.append(AssertionResult(
        "fig7.approx_matches_exact", bool(rel) and max(rel) <= 0.01,
        f"max relative gap approx vs exact(alpha=0.1) = {max(rel, default=math.nan):.4%}",
    ))
    beta = ov.get("beta", BETA_DEFAULT)
    diverged = [r for r in rows if math.isinf(r["snr_db"]) and r["adc_bits"] == "inf"
                and r["rate_per_rx"] is not None and r["tau"] >= 1.0 / beta
                and math.isinf(r["rate_per_rx"])]
    finite = [r for r in rows if math.isinf(r["snr_db"]) and r["adc_bits"] == "inf"
              and r["rate_per_rx"] is not None and r["tau"] < 1.0 / beta
              and math.isfinite(r["rate_per_rx"])]
    out.append(AssertionResult(
        "fig7.perfect_estimation_divergence", bool(diverged) and bool(finite),
        f"unquantized rho=inf rate diverges for tau >= 1/beta ({len(diverged)} rows) "
        f"and stays finite below ({len(finite)} rows)",
    ))
    return out


# ---------------------------------------------------------------------------
# SER figures


def _fig8_rows(ov, threads):
    from .gamp import monte_carlo_ser, trial_config

    snrs = ov.get("snr_db", (-10.0, -5.0, 0.0, 5.0, 10.0))
    b_list = ov.get("adc_bits", (1, 2, 3, INFINITE))
    n_trials = int(ov.get("n_trials", 10_000))
    n_tx = int(ov.get("n_tx", 50))
    alpha = ov.get("alpha", 5.0)
    tau_prime = ov.get("tau_prime", 2.0)
    seed = int(ov.get("seed", 2024))
    rows = []
    for b in b_list:
        for s in snrs:
            rho = _lin(s)
            theory = ser_pipeline(rho, alpha, tau_prime, b).ser
            cfg = trial_config(n_tx=n_tx, alpha=alpha, tau_prime=tau_prime, rho=rho, bits=b)
            res = monte_carlo_ser(cfg, n_trials, base_seed=seed, threads=threads or 1)
            rows.append({
                "snr_db": s, "adc_bits": _bits_label(b), "ser_theory": theory,
                "ser_sim": res.mean_ser, "std_error": res.std_error,
                "n_trials": n_trials, "n_diverged": res.n_diverged,
                "mse_channel_sim": res.mse_channel_empirical,
                "mse_channel_theory": res.mse_channel_theory,
            })
    return rows


def _fig8_checks(rows, ov):
    gaps = []
    for r in rows:
        if r["ser_theory"] >= 0.005:
            tol = 0.005 + 3.0 * r["std_error"]
            gaps.append((abs(r["ser_sim"] - r["ser_theory"]), tol, r["snr_db"], r["adc_bits"]))
    ok = bool(gaps) and all(g <= tol for g, tol, *_ in gaps)
    worst = max(gaps, key=lambda t: t[0] / t[1], default=None)
    detail = "no grid point with theory SER >= 0.5%" if worst is None else (
        f"worst gap {worst[0]:.4f} (tol {worst[1]:.4f}) at {worst[2]} dB, b={worst[3]}"
    )
    return [AssertionResult("fig8.sim_matches_theory", ok, detail)]


def _fig9_rows(ov, threads):
    alphas = ov.get("alphas", np.geomspace(1.0, 1000.0, 16))
    tau_primes = ov.get("tau_primes", (0.25, 0.5, 1.0, 2.0, 4.0))
    b_list = ov.get("adc_bits", (1, INFINITE))
    snr_db = ov.get("snr_db", 10.0)
    rho = _lin(snr_db)
    rows = []
    for b in b_list:
        for tp in tau_primes:
            for al in alphas:
                rows.append({
                    "snr_db": snr_db, "adc_bits": _bits_label(b), "tau_prime": tp,
                    "alpha": float(al), "ser": ser_pipeline(rho, float(al), tp, b).ser,
                })
    return rows


def _fig9_checks(rows, ov):
    out = []
    curves = {}
    for r in rows:
        curves.setdefault((r["adc_bits"], r["tau_prime"]), []).append((r["alpha"], r["ser"]))
    mono = all(
        all(s2 <= s1 + 1e-12 for (_, s1), (_, s2) in zip(sorted(c), sorted(c)[1:]))
        for c in curves.values()
    )
    out.append(AssertionResult("fig9.monotone_in_alpha", mono, "SER nonincreasing in alpha"))
    short = curves.get(("1", 0.5), [])
    ok = bool(short) and min(s for _, s in short) < 1e-3
    out.append(AssertionResult(
        "fig9.short_training_still_works", ok,
        "one-bit receiver reaches SER < 1e-3 with tau' = 0.5",
    ))
    return out


def _fig10_point(args):
    snr_db, alpha, bits, target = args
    rho = _lin(snr_db)
    try:
        return required_tau_prime_for_ser(target, rho, alpha, bits), ""
    except UnreachableTargetError as exc:
        return math.nan, f"unreachable (floor {exc.asymptote:.3g})"
    except QlstError as exc:
        return math.nan, str(exc)


def _fig10_rows(ov, threads):
    snrs = ov.get("snr_db", tuple(np.arange(-10.0, 20.1, 2.5)) + (math.inf,))
    alphas = ov.get("alphas", (10.0, 40.0))
    b_list = ov.get("adc_bits", (1, 2, INFINITE))
    target = ov.get("target_ser", 0.01)
    jobs = [(s, al, b, target) for al in alphas for b in b_list for s in snrs]
    vals = _pmap(_fig10_point, jobs, threads)
    return [
        {"snr_db": s, "alpha": al, "adc_bits": _bits_label(b),
         "tau_prime_required": v[0], "note": v[1]}
        for (s, al, b, _), v in zip(jobs, vals)
    ]


def _fig10_checks(rows, ov):
    out = []
    curves = {}
    for r in rows:
        if math.isfinite(r["snr_db"]) and math.isfinite(r["tau_prime_required"]):
            curves.setdefault((r["alpha"], r["adc_bits"]), []).append(
                (r["snr_db"], r["tau_prime_required"]))
    mono = all(
        all(t2 <= t1 * 1.02 for (_, t1), (_, t2) in zip(sorted(c), sorted(c)[1:]))
        for c in curves.values()
    )
    out.append(AssertionResult("fig10.monotone_in_snr", mono,
                               "required training nonincreasing in SNR"))
    floors = {r["adc_bits"]: r["tau_prime_required"] for r in rows
              if math.isinf(r["snr_db"]) and r["alpha"] == 10.0}
    ok = all(math.isfinite(floors.get(b, math.nan)) and floors[b] > 0 for b in ("1", "2"))
    out.append(AssertionResult(
        "fig10.quantized_floors", ok,
        f"rho=inf floors (alpha=10): {floors}",
    ))
    crit = {}
    for alpha in sorted({r["alpha"] for r in rows}):
        try:
            crit[alpha] = critical_snr(alpha, 1, target_ser=ov.get("target_ser", 0.01))
        except QlstError:
            crit[alpha] = math.nan
    vals = [crit[a] for a in sorted(crit)]
    ok = len(vals) >= 2 and all(v2 < v1 for v1, v2 in zip(vals, vals[1:]))
    out.append(AssertionResult(
        "fig10.critical_snr_drops_with_alpha", ok,
        f"critical SNR (dB) by alpha: { {a: round(_db(v), 2) for a, v in crit.items()} }",
        caption_derived=True,
    ))
    return out


def _fig11_point(args):
    snr_db, bits, target, tau_prime = args
    rho = _lin(snr_db)
    try:
        return required_alpha_for_ser(target, rho, tau_prime, bits), ""
    except UnreachableTargetError as exc:
        return math.nan, f"unreachable (floor {exc.asymptote:.3g})"
    except QlstError as exc:
        return math.nan, str(exc)


def _fig11_rows(ov, threads):
    snrs = ov.get("snr_db", tuple(np.arange(-10.0, 20.1, 2.5)) + (math.inf,))
    b_list = ov.get("adc_bits", (1, 2, 3, INFINITE))
    target = ov.get("target_ser", 0.01)
    tau_prime = ov.get("tau_prime", 2.0)
    jobs = [(s, b, target, tau_prime) for b in b_list for s in snrs]
    vals = _pmap(_fig11_point, jobs, threads)
    return [
        {"snr_db": s, "adc_bits": _bits_label(b), "alpha_required": v[0], "note": v[1]}
        for (s, b, _, _), v in zip(jobs, vals)
    ]


def _fig11_checks(rows, ov):
    out = []
    for bits in ("1", "2", "3"):
        r_inf = [r for r in rows if r["adc_bits"] == bits and math.isinf(r["snr_db"])]
        ok = bool(r_inf) and all(math.isfinite(r["alpha_required"]) and r["alpha_required"] > 0.01
                                 for r in r_inf)
        out.append(AssertionResult(
            f"fig11.floor.b{bits}", ok,
            f"rho=inf alpha floor: {[round(r['alpha_required'], 3) for r in r_inf]}",
        ))
    r_inf = [r for r in rows if r["adc_bits"] == "inf" and math.isinf(r["snr_db"])]
    ok = bool(r_inf) and all(r["alpha_required"] <= 0.011 for r in r_inf)
    out.append(AssertionResult(
        "fig11.no_floor.binf", ok, "unquantized receiver needs vanishing alpha at rho=inf"))
    curves = {}
    for r in rows:
        if math.isfinite(r["snr_db"]) and math.isfinite(r["alpha_required"]):
            curves.setdefault(r["adc_bits"], []).append((r["snr_db"], r["alpha_required"]))
    mono = all(
        all(a2 <= a1 * 1.02 for (_, a1), (_, a2) in zip(sorted(c), sorted(c)[1:]))
        for c in curves.values()
    )
    out.append(AssertionResult("fig11.monotone_in_snr", mono,
                               "required alpha nonincreasing in SNR"))
    return out


# ---------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class FigurePreset:
    preset_id: str
    description: str
    columns: tuple
    build: callable
    check: callable


PRESETS = {
    p.preset_id: p
    for p in (
        FigurePreset("fig1", "rate per transmitter vs alpha, trained and known channel",
                     ("snr_db", "alpha", "dac_bits", "adc_bits", "rate_opt", "tau_opt", "rate_known"),
                     _fig1_rows, _fig1_checks),
        FigurePreset("fig2", "optimal training fraction vs alpha",
                     ("snr_db", "alpha", "dac_bits", "adc_bits", "rate_opt", "tau_opt",
                      "tau_opt_beta", "tau_large_alpha"),
                     _fig2_rows, _fig2_checks),
        FigurePreset("fig3", "alpha required for 90% rate vs SNR, with rho=inf asymptotes",
                     ("snr_db", "adc_bits", "known_channel", "alpha_required", "note"),
                     _fig3_rows, _fig3_checks),
        FigurePreset("fig4", "linearized-receiver rate vs the optimized rate",
                     ("snr_db", "alpha", "dac_bits", "adc_bits", "rate_linearized",
                      "tau_opt_linearized", "rate_opt", "tau_opt"),
                     _fig4_rows, _fig4_checks),
        FigurePreset("fig5", "alpha required for 90% rate vs beta",
                     ("snr_db", "adc_bits", "beta", "alpha_required", "note"),
                     _fig5_rows, _fig5_checks),
        FigurePreset("fig6", "training fraction and rate vs beta at matched alpha",
                     ("snr_db", "beta", "adc_bits", "alpha", "rate_opt", "tau_opt"),
                     _fig6_rows, _fig6_checks),
        FigurePreset("fig7", "receiver-limited rate vs training fraction",
                     ("snr_db", "adc_bits", "tau", "rate_per_rx", "exact_alpha", "rate_exact"),
                     _fig7_rows, _fig7_checks),
        FigurePreset("fig8", "Monte Carlo SER vs large-system theory",
                     ("snr_db", "adc_bits", "ser_theory", "ser_sim", "std_error", "n_trials",
                      "n_diverged", "mse_channel_sim", "mse_channel_theory"),
                     _fig8_rows, _fig8_checks),
        FigurePreset("fig9", "theory SER vs alpha for several training loads",
                     ("snr_db", "adc_bits", "tau_prime", "alpha", "ser"),
                     _fig9_rows, _fig9_checks),
        FigurePreset("fig10", "training load required for 1% SER vs SNR",
                     ("snr_db", "alpha", "adc_bits", "tau_prime_required", "note"),
                     _fig10_rows, _fig10_checks),
        FigurePreset("fig11", "alpha required for 1% SER vs SNR",
                     ("snr_db", "adc_bits", "alpha_required", "note"),
                     _fig11_rows, _fig11_checks),
    )
}


def run_preset(preset_id: str, overrides: dict | None = None, output_dir=None,
               threads: int = 1) -> PresetResult:
    """Execute one figure preset: sweep, assertions, optional CSV output.

    Raises KeyError for unknown ids.  Individual grid-point failures are
    recorded as nan rows; the preset fails outright if more than 2% of
    points failed.
    """
    preset = PRESETS[preset_id]
    ov = dict(overrides or {})
    rows = preset.build(ov, threads)
    n_failed = sum(
        1 for r in rows
        if any(isinstance(v, float) and math.isnan(v) and not _is_note_expected(r)
               for v in r.values())
    )
    assertions = list(preset.check(rows, ov))
    if n_failed > MAX_FAILED_FRACTION * max(len(rows), 1):
        assertions.append(AssertionResult(
            "preset.point_failures", False,
            f"{n_failed}/{len(rows)} grid points failed to evaluate",
        ))
    result = PresetResult(
        preset_id=preset_id, columns=list(preset.columns), rows=rows,
        assertions=assertions, n_failed_points=n_failed,
    )
    if output_dir is not None:
        result.write_csv(output_dir)
    return result


def _is_note_expected(row) -> bool:
    note = row.get("note", "")
    return isinstance(note, str) and note.startswith("unreachable")
