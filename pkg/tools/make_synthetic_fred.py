#!/usr/bin/env python3
"""Generate the committed synthetic stand-in for the 14 monthly series.

The build environment has no access to the FRED API, so the repository ships
a deterministic synthetic dataset with the same shape, units, and qualitative
business-cycle behavior as the real indexes: trending nonstationary activity
and price levels, a yield curve that inverts ahead of recessions and
re-steepens into them, credit spreads and unemployment that spike around
them, and a 2020 episode that arrives with almost no lead.

Two properties are deliberate. First, monthly noise is calibrated so that no
single month separates recession from expansion (contraction signals are
roughly one to two noise standard deviations per month); detection requires
pooling several months and several indicators. Second, recessions differ:
each episode loads the activity / labor / survey / credit channels with its
own weights (2001 is shallow in activity, 2008 is credit-heavy, 2020 is a
sudden stop), and unlabeled mid-expansion slowdowns fire one or two channels
without a recession (1966 credit crunch, 1984 and 2015 industrial soft
patches, 1987 and 1998 market scares, 2019 survey dip).

Every run writes byte-identical CSVs (fixed seed, pure numpy). Real data can
replace these files at any time via ``cyclecast fetch`` without code changes.

Usage: python tools/make_synthetic_fred.py [--out data/fred]
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

N_MONTHS = 738  # 1959-01 .. 2020-06
BASE_YEAR = 1959
SEED = 20200601

# (start, end) month offsets from 1959-01, end-exclusive, clipped to the data
# span. Per-episode character: anticipation lead, overall depth, and channel
# loadings (activity, labor, survey, credit) plus an oil-shock kick.
EPISODES = [
    dict(start=15, end=25, lead=10, depth=0.80, act=1.0, labor=1.0, ism=1.1, credit=0.9, oil=0.0),
    dict(start=131, end=142, lead=12, depth=0.85, act=0.8, labor=1.3, ism=1.0, credit=0.8, oil=0.1),
    dict(start=178, end=194, lead=8, depth=1.20, act=1.4, labor=1.0, ism=1.2, credit=1.0, oil=1.6),
    dict(start=252, end=258, lead=14, depth=0.90, act=0.9, labor=0.7, ism=1.4, credit=0.9, oil=1.2),
    dict(start=270, end=286, lead=10, depth=1.25, act=1.3, labor=1.2, ism=1.3, credit=1.2, oil=0.4),
    dict(start=378, end=386, lead=13, depth=0.75, act=0.7, labor=0.8, ism=0.9, credit=0.8, oil=0.8),
    dict(start=506, end=514, lead=11, depth=0.60, act=0.5, labor=0.6, ism=0.9, credit=0.7, oil=0.0),
    dict(start=587, end=605, lead=12, depth=1.50, act=1.5, labor=1.4, ism=1.3, credit=2.0, oil=0.9),
    dict(start=733, end=738, lead=2, depth=2.30, act=2.2, labor=2.5, ism=1.6, credit=1.3, oil=-1.2),
]

# Mid-expansion slowdowns: (center, amplitude, width, channels hit). They
# move one or two indicator families the way a mild recession would, with no
# recession label, so single-channel threshold rules misfire on them.
SLOWDOWNS = [
    (92, 0.55, 5, ("credit", "ism")),
    (306, 0.60, 6, ("act", "ism")),
    (346, 0.75, 3, ("credit",)),
    (437, 0.40, 5, ("act",)),
    (477, 0.70, 4, ("credit", "ism")),
    (556, 0.28, 5, ("labor",)),
    (631, 0.32, 6, ("ism", "credit")),
    (683, 0.40, 7, ("act", "ism")),
    (720, 0.28, 5, ("ism",)),
]

CHANNELS = ("act", "labor", "ism", "credit")


def ar1(rng: np.random.Generator, n: int, rho: float, sigma: float) -> np.ndarray:
    eps = rng.normal(0.0, sigma, size=n)
    out = np.zeros(n)
    for t in range(1, n):
        out[t] = rho * out[t - 1] + eps[t]
    return out


def episode_anticipation(ep: dict, n: int) -> np.ndarray:
    """0 -> 1 ramp over the lead window, fading once the span has begun.

    Markets look forward: the anticipation signal (curve inversion, early
    spread widening) is strongest just before the start and decays during
    the recession itself as policy easing kicks in.
    """
    out = np.zeros(n)
    s, e, lead = ep["start"], ep["end"], ep["lead"]
    for t in range(max(0, s - lead), min(n, e + 6)):
        if t < s:
            out[t] = (t - (s - lead)) / lead
        else:
            out[t] = np.exp(-(t - s) / 4.0)
    return out


def episode_stress(ep: dict, n: int) -> np.ndarray:
    """Contraction intensity: ramps in over ~2 months, stops at the trough.

    The official end month IS the trough, so the contraction rate collapses
    right there (one residual month for reporting lag); the slow recovery of
    levels comes from the mean-reverting gaps downstream, not from here.
    """
    out = np.zeros(n)
    s, e, depth = ep["start"], ep["end"], ep["depth"]
    ramp = 1 if ep["lead"] <= 3 else 2
    for t in range(s, min(n, e + 5)):
        if t < e:
            out[t] = depth * min(1.0, (t - s + 1) / ramp)
        else:
            out[t] = depth * np.exp(-(t - e) / 1.0)
    return out


def slowdown_bump(center: int, amp: float, width: int, n: int) -> np.ndarray:
    t = np.arange(n)
    return amp * np.exp(-0.5 * ((t - center) / width) ** 2)


def channel_stress(n: int) -> dict:
    """Per-channel contraction intensity: episodes weighted by their channel
    loadings, plus the unlabeled slowdown bumps assigned to each channel."""
    stress = {ch: np.zeros(n) for ch in CHANNELS}
    for ep in EPISODES:
        st = episode_stress(ep, n)
        for ch in CHANNELS:
            stress[ch] = np.maximum(stress[ch], st * ep[ch] / max(ep["depth"], 1e-9))
    for center, amp, width, channels in SLOWDOWNS:
        bump = slowdown_bump(center, amp, width, n)
        for ch in channels:
            stress[ch] = np.maximum(stress[ch], bump)
    return stress


def build_series(rng: np.random.Generator) -> dict:
    n = N_MONTHS
    t = np.arange(n)

    stress = channel_stress(n)
    anticip = np.zeros(n)
    oil_push = np.zeros(n)
    label_stress = np.zeros(n)
    for ep in EPISODES:
        anticip = np.maximum(anticip, episode_anticipation(ep, n))
        label_stress = np.maximum(label_stress, episode_stress(ep, n))
        oil_push += ep["oil"] * episode_anticipation(ep, n)
    # market scares also flatten the curve a little without a recession
    for center, amp, width, channels in SLOWDOWNS:
        if "credit" in channels:
            anticip = np.maximum(anticip, 0.6 * slowdown_bump(center, amp, width, n))

    # monetary easing: builds during labeled contractions, decays over a year
    ease = np.zeros(n)
    for i in range(1, n):
        ease[i] = 0.93 * ease[i - 1] + 0.30 * label_stress[i]

    # trend inflation (annual %): low 60s, 70s-80s spike, disinflation, 2% era
    infl_anchor = np.interp(
        t,
        [0, 96, 168, 252, 264, 312, 372, 444, 588, 612, 737],
        [1.4, 4.5, 6.0, 13.5, 12.0, 3.8, 4.8, 2.6, 3.4, 1.6, 1.9],
    )
    infl = infl_anchor + 1.2 * ar1(rng, n, 0.90, 0.30) - 1.1 * label_stress + 0.8 * oil_push
    infl = np.maximum(infl, -2.0)

    cpi = np.empty(n)
    cpi[0] = 28.9
    for i in range(1, n):
        cpi[i] = cpi[i - 1] * (1.0 + infl[i] / 1200.0)

    ppi_infl = infl + 2.2 * oil_push - 2.5 * stress["act"] + 2.0 * ar1(rng, n, 0.70, 0.50)
    ppi = np.empty(n)
    ppi[0] = 31.7
    for i in range(1, n):
        ppi[i] = ppi[i - 1] * (1.0 + ppi_infl[i] / 1200.0)

    # short rate: inflation plus a policy cycle, cut hard when easing
    tb3 = infl_anchor + 0.9 - 3.4 * ease + 1.1 * ar1(rng, n, 0.92, 0.22)
    tb3 = tb3 + np.interp(t, [0, 588, 620, 700, 737], [0.0, 0.0, -1.2, -0.4, -0.9])
    tb3 = np.maximum(tb3, 0.04)

    # term premium collapses (inverting the curve) while anticipation builds,
    # then re-steepens as easing arrives
    term_prem = 1.55 - 2.15 * anticip + 0.9 * ease + 0.5 * ar1(rng, n, 0.85, 0.22)
    gs10 = np.maximum(tb3 + term_prem, 0.45)
    t10y3m = gs10 - tb3

    # corporate yield: long rate plus a credit spread that blows out in crises
    credit_spread = 1.45 + 0.95 * stress["credit"] + 0.40 * anticip + 0.45 * ar1(rng, n, 0.80, 0.25)
    baa = gs10 + np.maximum(credit_spread, 0.4)

    # activity block: trend growth plus a slowly mean-reverting cyclical gap;
    # contractions decline steadily for their whole span (2008-style -15%
    # over 18 months) and recoveries take years to close. Monthly noise is
    # sized so one month alone is never decisive.
    trend_monthly = np.interp(t, [0, 240, 480, 737], [0.30, 0.25, 0.14, 0.10])
    covid_shock = np.zeros(n)
    covid_shock[733] = -5.5
    covid_shock[734] = -8.5
    covid_shock[736] = 3.0
    covid_shock[737] = 4.0

    def activity_gap(drag: float, noise_sigma: float) -> np.ndarray:
        gap = np.zeros(n)
        shocks = rng.normal(0, noise_sigma, size=n)
        for i in range(1, n):
            gap[i] = 0.97 * gap[i - 1] - drag * stress["act"][i] + covid_shock[i] + shocks[i]
        return gap

    ip_gap = activity_gap(0.72, 0.55)
    indpro = 21.0 * np.exp(np.cumsum(trend_monthly) / 100.0 + ip_gap / 100.0)
    ipmat = 24.0 * np.exp(
        np.cumsum(trend_monthly * rng.normal(1.0, 0.04, size=n)) / 100.0
        + activity_gap(0.85, 0.65) / 100.0
    )

    cumfns = 80.5 + 0.75 * ip_gap + 2.8 * ar1(rng, n, 0.70, 0.55)
    cumfns = np.clip(cumfns, 58.0, 92.5)

    # labor block: contraction losses arrive with a 2-month lag and keep
    # accruing briefly after the trough
    labor_lag = np.concatenate([[0.0, 0.0], stress["labor"][:-2]])
    labor_gap = np.zeros(n)
    labor_shocks = rng.normal(0, 0.22, size=n)
    for i in range(1, n):
        labor_gap[i] = 0.97 * labor_gap[i - 1] - 0.50 * labor_lag[i] + labor_shocks[i]
    labor_gap[734] -= 7.5  # april 2020 collapse
    labor_gap[735] -= 2.0
    labor_gap[736] += 3.0

    manemp_trend = np.interp(t, [0, 246, 480, 612, 733, 737], [15.2, 19.4, 16.9, 11.4, 12.9, 12.9]) * 1000
    manemp = manemp_trend * np.exp(labor_gap / 100.0) + 60 * ar1(rng, n, 0.8, 0.5)
    usgood_trend = np.interp(t, [0, 246, 480, 612, 733, 737], [17.6, 24.3, 22.3, 17.7, 21.1, 21.1]) * 1000
    usgood = usgood_trend * np.exp(0.9 * labor_gap / 100.0) + 80 * ar1(rng, n, 0.8, 0.55)

    # unemployment integrates labor stress and drifts back down in expansions
    unrate = np.empty(n)
    unrate[0] = 5.8
    u_trend = np.interp(t, [0, 240, 480, 737], [4.6, 5.9, 4.9, 3.9])
    u_shocks = rng.normal(0, 0.13, size=n)
    for i in range(1, n):
        pull = -0.030 * (unrate[i - 1] - u_trend[i])
        jump = 0.38 * labor_lag[i] ** 1.4
        unrate[i] = unrate[i - 1] + pull + jump + u_shocks[i]
    unrate[734] += 6.5  # covid spike
    unrate[735] += 1.0
    unrate[736] -= 1.5
    unrate = np.clip(unrate, 2.4, 15.2)

    # oil: log-price anchored to the big shocks, crisis crashes on top
    oil_anchor = np.interp(
        t,
        [0, 176, 178, 190, 246, 252, 320, 420, 500, 560, 593, 598, 606, 650, 672, 684, 710, 733, 735, 737],
        np.log([2.9, 3.3, 4.8, 10.5, 14.5, 32.0, 28.0, 15.5, 19.0, 55.0, 134.0, 60.0, 70.0, 95.0, 105.0, 47.0, 64.0, 51.0, 17.5, 38.0]),
    )
    wti = np.exp(oil_anchor + 0.8 * ar1(rng, n, 0.92, 0.045) - 0.12 * stress["act"])
    wti = np.maximum(wti, 1.6)

    # purchasing managers survey: dips fast, recovers fast, noisy month to
    # month; slightly leads the activity channel
    ism_lead = np.concatenate([stress["ism"][2:], stress["ism"][-1] * np.ones(2)])
    ism_gap = np.zeros(n)
    ism_shocks = rng.normal(0, 1.9, size=n)
    for i in range(1, n):
        ism_gap[i] = 0.82 * ism_gap[i - 1] - 2.4 * ism_lead[i] + ism_shocks[i]
    ism = np.clip(53.2 + ism_gap, 24.0, 71.5)

    return {
        "BAA": baa,
        "CUMFNS": cumfns,
        "INDPRO": indpro,
        "IPMAT": ipmat,
        "MANEMP": manemp,
        "USGOOD": usgood,
        "UNRATE": unrate,
        "TB3MS": tb3,
        "GS10": gs10,
        "T10Y3M": t10y3m,
        "WTISPLC": wti,
        "PPIACO": ppi,
        "CPIAUCSL": cpi,
        "ISM": ism,
    }


def month_string(offset: int) -> str:
    year = BASE_YEAR + offset // 12
    month = offset % 12 + 1
    return f"{year:04d}-{month:02d}-01"


def write_csvs(series: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, values in series.items():
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("DATE,VALUE\n")
            for i, v in enumerate(values):
                fh.write(f"{month_string(i)},{v:.6f}\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/fred", help="output directory for the 14 CSVs")
    args = parser.parse_args(argv)
    rng = np.random.default_rng(SEED)
    series = build_series(rng)
    for name, values in series.items():
        assert len(values) == N_MONTHS and np.all(np.isfinite(values)), name
    write_csvs(series, args.out)
    print(f"wrote {len(series)} series x {N_MONTHS} months to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
