"""Numerical class-membership verdicts.

The limits in the definitions live at x -> infinity; their numerical
surrogate is the inf/sup of the quantity over a trailing window plus a
drift ("trend") gate.  A verdict is

``holds``         band collapsed within ``band_tol`` and (when a target is
                  given) midpoint within ``value_tol`` of it,
``fails``         a violation certified above the tolerances *plus* the
                  representation's numerical error estimate,
``inconclusive``  anything in between (discretization noise never counts
                  as a mathematical counterexample).

All tolerances are relative and embedded in every verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.fft as fft

from . import defaults
from .convolve import (
    backward_tilted_tail,
    completed_atoms,
    conv_pow,
    convolve_atom_arrays,
)
from .dist_core import GriddedTiltRep
from .errors import ConstructionError, DivergenceError
from .transforms import exp_moment

TWO_PI = 2.0 * math.pi


# -- windowed limit estimation ---------------------------------------------------


@dataclass
class LimitEstimate:
    """Trailing-window inf/sup of samples of a function of x, plus drift."""

    window_inf: float
    window_sup: float
    trend: float
    windows_used: int
    x_range: tuple
    inconclusive: bool = False

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.window_inf + self.window_sup)

    @property
    def width(self) -> float:
        return self.window_sup - self.window_inf


def estimate_limit(
    xs: Sequence[float],
    values: Sequence[float],
    window_frac: float = defaults.WINDOW_FRAC,
) -> LimitEstimate:
    """inf/sup over the trailing window [x_hi (1 - window_frac), x_hi].

    trend is the mean over the second half of the window minus the mean
    over the first half; fewer than 16 samples in the window marks the
    estimate inconclusive.
    """
    xs = np.asarray(xs, dtype=float)
    vs = np.asarray(values, dtype=float)
    if len(xs) != len(vs) or len(xs) == 0:
        raise ConstructionError("need equally many sample points and values")
    if not 0.0 < window_frac < 1.0:
        raise ConstructionError("window_frac must lie in (0, 1)")
    x_hi = xs[-1]
    lo = x_hi * (1.0 - window_frac) if x_hi > 0 else x_hi - window_frac
    sel = xs >= lo
    w = vs[sel]
    xw = xs[sel]
    if len(w) < defaults.MIN_WINDOW_SAMPLES:
        return LimitEstimate(
            window_inf=float(np.min(vs)),
            window_sup=float(np.max(vs)),
            trend=0.0,
            windows_used=len(w),
            x_range=(float(xs[0]), float(x_hi)),
            inconclusive=True,
        )
    half = len(w) // 2
    trend = float(np.mean(w[half:]) - np.mean(w[:half]))
    return LimitEstimate(
        window_inf=float(np.min(w)),
        window_sup=float(np.max(w)),
        trend=trend,
        windows_used=int(len(w)),
        x_range=(float(xw[0]), float(x_hi)),
    )


# -- verdicts ---------------------------------------------------------------------


@dataclass
class ClassVerdict:
    verdict: str  # "holds" | "fails" | "inconclusive"
    target_limit: Optional[float]
    estimate: LimitEstimate
    evidence: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"


def verdict_from_estimate(
    est: LimitEstimate,
    target: Optional[float],
    band_tol: float,
    value_tol: float,
    noise: float = 0.0,
    evidence: Optional[dict] = None,
) -> ClassVerdict:
    """Apply the holds/fails/inconclusive rules to a windowed estimate.

    ``noise`` is the certified numerical error (same units as the samples):
    a ``fails`` verdict requires the violation to exceed tolerance + noise.
    """
    tols = {"band_tol": band_tol, "value_tol": value_tol, "noise": noise}
    ev = evidence or {}
    if est.inconclusive:
        return ClassVerdict("inconclusive", target, est, ev, tols, "window too small")
    scale = abs(target) if target else max(abs(est.midpoint), 1e-300)
    band_ok = est.width <= band_tol * scale
    trend_ok = abs(est.trend) <= defaults.TREND_FRAC * band_tol * scale
    value_ok = target is None or abs(est.midpoint - target) <= value_tol * scale
    if band_ok and trend_ok and value_ok:
        return ClassVerdict("holds", target, est, ev, tols)
    band_violated = est.width - noise > band_tol * scale
    value_violated = (
        target is not None and abs(est.midpoint - target) - noise > value_tol * scale
    )
    if band_violated or value_violated:
        why = "band oscillates" if band_violated else "limit misses target"
        return ClassVerdict("fails", target, est, ev, tols, why)
    return ClassVerdict("inconclusive", target, est, ev, tols, "within noise of tolerance")


def _snap(rep: GriddedTiltRep, value: float) -> int:
    """Node count closest to a length expressed in x units (at least 1)."""
    return max(1, int(round(value / rep.step)))


def _rep_noise(rep: GriddedTiltRep) -> float:
    return rep.w_rel_err


# -- gamma-long-tailed: tail(x+a) ~ e^{-gamma a} tail(x) ---------------------------


def shift_ratio_curve(rep: GriddedTiltRep, gamma: float, a: float):
    """(xs, e^{gamma a} tail(x+a)/tail(x)) with a snapped to the grid."""
    k = _snap(rep, a)
    a_snap = k * rep.step
    W = rep.W
    num = W[k:]
    den = W[:-k]
    ok = den > 0
    ratio = np.full(len(den), np.nan)
    ratio[ok] = math.exp((gamma - rep.gamma0) * a_snap) * num[ok] / den[ok]
    return rep.x[: len(den)], ratio, a_snap


def test_L_gamma(
    rep: GriddedTiltRep,
    gamma: float,
    shifts: Sequence[float] = defaults.SHIFTS,
    band_tol: float = defaults.BAND_TOL,
    value_tol: float = defaults.VALUE_TOL,
    window_frac: float = defaults.WINDOW_FRAC,
) -> ClassVerdict:
    """Membership in the gamma-long-tailed class via shift-ratio bands.

    Holds only when every probe shift's ratio band collapses to 1; the
    verdict carries the per-shift curves as evidence.
    """
    curves = {}
    per_shift = []
    noise = 2 * _rep_noise(rep)
    worst = None
    for a in shifts:
        xs, ratio, a_snap = shift_ratio_curve(rep, gamma, a)
        finite = np.isfinite(ratio)
        if not finite.any():
            return ClassVerdict(
                "inconclusive",
                1.0,
                LimitEstimate(math.nan, math.nan, 0.0, 0, (0.0, 0.0), True),
                {},
                {"band_tol": band_tol, "value_tol": value_tol},
                "tail numerically zero in window",
            )
        est = estimate_limit(xs[finite], ratio[finite], window_frac)
        v = verdict_from_estimate(est, 1.0, band_tol, value_tol, noise)
        curves[f"shift_{a_snap:.6g}"] = (xs[finite], ratio[finite])
        per_shift.append((a_snap, v))
        if worst is None or _verdict_rank(v) > _verdict_rank(worst[1]):
            worst = (a_snap, v)
    a_bad, v_bad = worst
    out = ClassVerdict(
        v_bad.verdict,
        1.0,
        v_bad.estimate,
        {"curves": curves, "per_shift": {a: v.verdict for a, v in per_shift}},
        v_bad.tolerances,
        "" if v_bad.verdict == "holds" else f"shift a={a_bad:.6g}: {v_bad.reason}",
    )
    return out


def _verdict_rank(v: ClassVerdict) -> int:
    return {"holds": 0, "inconclusive": 1, "fails": 2}[v.verdict]


# -- lattice-limit probes ----------------------------------------------------------


@dataclass
class LatticeLimit:
    """Shift-ratio limit along x_n = lambda + 2 pi n for one residue lambda."""

    lam: float
    a: float
    estimate: LimitEstimate
    extrapolated: float
    n_values: np.ndarray
    values: np.ndarray


def lattice_limits(
    rep: GriddedTiltRep,
    gamma: float,
    a: float,
    lambdas: Sequence[float],
    window_frac: float = defaults.WINDOW_FRAC,
) -> list:
    """Per-residue limits of e^{gamma a} tail(x_n + a)/tail(x_n), x_n = lam + 2 pi n.

    The raw sequences drift like 1/n when x_n + a crosses a period
    boundary, so each probe also reports a Richardson-style extrapolation
    (least squares fit of value = L + c/n over the trailing half), which is
    the quantity compared against closed-form limits.
    """
    per = TWO_PI / rep.step
    if abs(per - round(per)) > 1e-9:
        raise ConstructionError("lattice probes need a step dividing 2*pi")
    per = int(round(per))
    k_a = _snap(rep, a)
    a_snap = k_a * rep.step
    out = []
    for lam in lambdas:
        j_lam = int(round((lam % TWO_PI) / rep.step))
        n_max = (rep.n_points - 1 - j_lam - k_a) // per
        ns = np.arange(1, n_max + 1)
        idx = j_lam + per * ns
        den = rep.W[idx]
        num = rep.W[idx + k_a]
        ok = den > 0
        vals = np.full(len(ns), np.nan)
        vals[ok] = math.exp((gamma - rep.gamma0) * a_snap) * num[ok] / den[ok]
        est = estimate_limit(ns[ok].astype(float), vals[ok], window_frac)
        extrap = _fit_limit_in_inverse_n(ns[ok], vals[ok])
        out.append(
            LatticeLimit(
                lam=float(lam),
                a=a_snap,
                estimate=est,
                extrapolated=extrap,
                n_values=ns[ok],
                values=vals[ok],
            )
        )
    return out


def _fit_limit_in_inverse_n(ns, vals) -> float:
    """Least-squares fit vals ~ L + c/n over the trailing half of the samples."""
    if len(ns) < 4:
        return float(np.mean(vals)) if len(ns) else math.nan
    half = len(ns) // 2
    n = np.asarray(ns[half:], dtype=float)
    v = np.asarray(vals[half:], dtype=float)
    A = np.column_stack([np.ones_like(n), 1.0 / n])
    coef, *_ = np.linalg.lstsq(A, v, rcond=None)
    return float(coef[0])


# -- gamma-convolution-equivalence -------------------------------------------------


def test_S_gamma(
    rep: GriddedTiltRep,
    gamma: float,
    band_tol: float = defaults.BAND_TOL,
    value_tol: float = defaults.VALUE_TOL,
    window_frac: float = defaults.WINDOW_FRAC,
    A_values: Sequence[float] = defaults.A_VALUES,
    rep2: Optional[GriddedTiltRep] = None,
) -> ClassVerdict:
    """Two-fold tail ratio against 2 * muhat(gamma), gated on the long-tail test.

    Evidence carries the ratio curve and the middle-integral sweep.  A
    pre-computed two-fold representation can be passed to avoid repeating
    the convolution.
    """
    try:
        mu_hat = exp_moment(rep, gamma)
    except DivergenceError:
        return ClassVerdict(
            "fails",
            None,
            LimitEstimate(math.nan, math.nan, 0.0, 0, (0.0, 0.0), True),
            {},
            {"band_tol": band_tol, "value_tol": value_tol},
            "exponential moment diverges at gamma",
        )
    lv = test_L_gamma(rep, gamma, band_tol=band_tol, value_tol=value_tol,
                      window_frac=window_frac)
    if lv.verdict != "holds":
        return ClassVerdict(
            lv.verdict,
            2.0 * mu_hat,
            lv.estimate,
            {"long_tail": lv},
            lv.tolerances,
            "not long-tailed at gamma" if lv.verdict == "fails" else lv.reason,
        )
    r2 = rep2 if rep2 is not None else conv_pow(rep, 2)
    ok = rep.W > 0
    ratio = np.full(rep.n_points, np.nan)
    ratio[ok] = r2.W[ok] / rep.W[ok]
    est = estimate_limit(rep.x[ok], ratio[ok], window_frac)
    sweep = epsilon_sweep(rep, gamma, A_values, window_frac)
    noise = (rep.w_rel_err + r2.w_rel_err) * max(abs(est.midpoint), 1.0)
    v = verdict_from_estimate(
        est,
        2.0 * mu_hat,
        band_tol,
        value_tol,
        noise,
        evidence={"ratio_curve": (rep.x[ok], ratio[ok]), "middle_sweep": sweep,
                  "long_tail": lv},
    )
    return v


def epsilon_sweep(
    rep: GriddedTiltRep,
    gamma: float,
    A_values: Sequence[float] = defaults.A_VALUES,
    window_frac: float = defaults.WINDOW_FRAC,
) -> list:
    """Trailing-window sup of the middle-integral ratio for each threshold A.

    ratio(x) = integral over u in (A, x-A] of tail(x-u) d mu(u) / tail(x),
    computed in tilted coordinates from the completed atom measure.  The
    double limit (A then x) is coupled by requiring A <= window start / 4;
    larger thresholds are reported inconclusive (None).
    """
    d = completed_atoms(rep)
    th = backward_tilted_tail(d, rep.gamma0, rep.step / 2, boundary=0.0)
    hh = rep.step / 2
    L = len(d)
    x_lo_window = rep.x_max * (1.0 - window_frac)
    out = []
    nfft = fft.next_fast_len(2 * L - 1)
    Wh = th  # tilted tail of the completed measure on the half lattice
    for A in A_values:
        if A > x_lo_window / 4.0:
            out.append((float(A), None))
            continue
        iA = int(round(A / hh))
        mid_mass = np.where(np.arange(L) > iA, d, 0.0)
        tail_hi = np.where(np.arange(L) >= iA, Wh, 0.0)
        corr = fft.irfft(fft.rfft(mid_mass, nfft) * fft.rfft(tail_hi, nfft), nfft)
        node_idx = 2 * np.arange(rep.n_points)
        vals = corr[node_idx]
        ok = (rep.x >= x_lo_window) & (rep.W > 0) & (rep.x > 2 * A)
        if not ok.any():
            out.append((float(A), None))
            continue
        ratio = vals[ok] / rep.W[ok]
        out.append((float(A), float(np.max(ratio))))
    return out


# -- local classes ------------------------------------------------------------------


def interval_mass_curve(rep: GriddedTiltRep, c: float):
    """(xs, tilted interval masses e^{gamma0 x} mu((x, x+c])) with c snapped."""
    k = _snap(rep, c)
    c_snap = k * rep.step
    m = rep.W[:-k] - math.exp(-rep.gamma0 * c_snap) * rep.W[k:]
    return rep.x[: len(m)], m, c_snap


def test_L_delta(
    rep: GriddedTiltRep,
    c: float,
    shifts: Sequence[float] = defaults.SHIFTS,
    band_tol: float = defaults.BAND_TOL,
    value_tol: float = defaults.VALUE_TOL,
    window_frac: float = defaults.WINDOW_FRAC,
) -> ClassVerdict:
    """Long-tailedness of x -> mu((x, x+c]) (shift ratios against 1)."""
    xs, m, c_snap = interval_mass_curve(rep, c)
    if np.all(m[xs >= xs[-1] * (1 - window_frac)] == 0.0):
        return ClassVerdict(
            "fails",
            1.0,
            LimitEstimate(0.0, 0.0, 0.0, 0, (float(xs[0]), float(xs[-1]))),
            {},
            {"band_tol": band_tol, "value_tol": value_tol},
            "interval masses vanish on the window",
        )
    noise = 4 * _rep_noise(rep)
    curves = {}
    worst = None
    for a in shifts:
        k = _snap(rep, a)
        num = m[k:]
        den = m[:-k]
        ok = den > 0
        if not ok.any():
            continue
        ratio = num[ok] / den[ok]
        est = estimate_limit(xs[: len(den)][ok], ratio, window_frac)
        v = verdict_from_estimate(est, 1.0, band_tol, value_tol, noise)
        curves[f"shift_{k * rep.step:.6g}"] = (xs[: len(den)][ok], ratio)
        if worst is None or _verdict_rank(v) > _verdict_rank(worst):
            worst = v
            worst_a = k * rep.step
    if worst is None:
        return ClassVerdict(
            "inconclusive", 1.0,
            LimitEstimate(math.nan, math.nan, 0.0, 0, (0.0, 0.0), True),
            {}, {"band_tol": band_tol}, "no usable interval masses",
        )
    out = ClassVerdict(
        worst.verdict, 1.0, worst.estimate, {"curves": curves, "c": c_snap},
        worst.tolerances,
        "" if worst.verdict == "holds" else f"shift a={worst_a:.6g}: {worst.reason}",
    )
    return out


def test_S_delta(
    rep: GriddedTiltRep,
    c: float,
    band_tol: float = defaults.BAND_TOL,
    value_tol: float = defaults.VALUE_TOL,
    window_frac: float = defaults.WINDOW_FRAC,
    rep2: Optional[GriddedTiltRep] = None,
) -> ClassVerdict:
    """Local convolution equivalence: two-fold interval masses against twice
    the single ones."""
    lv = test_L_delta(rep, c, band_tol=band_tol, value_tol=value_tol,
                      window_frac=window_frac)
    if lv.verdict != "holds":
        return ClassVerdict(
            lv.verdict, 2.0, lv.estimate, {"local_long_tail": lv}, lv.tolerances,
            "interval masses not long-tailed" if lv.verdict == "fails" else lv.reason,
        )
    r2 = rep2 if rep2 is not None else conv_pow(rep, 2)
    xs, m1, c_snap = interval_mass_curve(rep, c)
    _, m2, _ = interval_mass_curve(r2, c)
    ok = m1 > 0
    ratio = m2[ok] / m1[ok]
    est = estimate_limit(xs[ok], ratio, window_frac)
    noise = 4 * (rep.w_rel_err + r2.w_rel_err)
    return verdict_from_estimate(
        est, 2.0, band_tol, value_tol, noise,
        evidence={"ratio_curve": (xs[ok], ratio), "c": c_snap, "local_long_tail": lv},
    )


def test_S_loc(
    rep: GriddedTiltRep,
    c_ladder: Sequence[float] = defaults.C_LADDER,
    band_tol: float = defaults.BAND_TOL,
    value_tol: float = defaults.VALUE_TOL,
    window_frac: float = defaults.WINDOW_FRAC,
) -> ClassVerdict:
    """Local subexponentiality: conjunction of the interval test over a c ladder."""
    r2 = conv_pow(rep, 2)
    verdicts = {}
    worst = None
    for c in c_ladder:
        v = test_S_delta(rep, c, band_tol, value_tol, window_frac, rep2=r2)
        verdicts[c] = v
        if worst is None or _verdict_rank(v) > _verdict_rank(worst):
            worst = v
    return ClassVerdict(
        worst.verdict, 2.0, worst.estimate, {"per_c": verdicts}, worst.tolerances,
        worst.reason,
    )


# -- density-level subexponentiality -----------------------------------------------


def density_subexp_check(
    xs,
    g,
    band_tol: float = defaults.BAND_TOL,
    value_tol: float = defaults.VALUE_TOL,
    window_frac: float = defaults.WINDOW_FRAC,
    norm_tol: float = 0.02,
) -> ClassVerdict:
    """Density-level test: band of (g*g)(x)/g(x) against 2.

    ``g`` is sampled on a uniform grid; it must be nonnegative and
    integrate to 1 within ``norm_tol``.
    """
    xs = np.asarray(xs, dtype=float)
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ConstructionError("density must be nonnegative")
    h = xs[1] - xs[0]
    total = float(g.sum() * h)
    if abs(total - 1.0) > norm_tol:
        raise ConstructionError(f"density integrates to {total:.4f}, not 1")
    nfft = fft.next_fast_len(2 * len(g) - 1)
    gg = fft.irfft(fft.rfft(g, nfft) * fft.rfft(g, nfft), nfft)[: len(g)] * h
    floor = 1e-14 * max(float(g.max()), 1e-300)
    # certified failure: the self-convolution lives where g has already died
    lo = xs >= xs[-1] * (1 - window_frac)
    support_mismatch = np.any((g[lo] <= floor) & (gg[lo] > 1e3 * floor))
    if support_mismatch or np.all(g[lo] <= floor):
        return ClassVerdict(
            "fails",
            2.0,
            LimitEstimate(math.inf, math.inf, 0.0, int(lo.sum()), (float(xs[0]), float(xs[-1]))),
            {},
            {"band_tol": band_tol, "value_tol": value_tol},
            "density vanishes on the window while its self-convolution does not",
        )
    ok = g > floor
    ratio = gg[ok] / g[ok]
    est = estimate_limit(xs[ok], ratio, window_frac)
    return verdict_from_estimate(
        est, 2.0, band_tol, value_tol, 1e-10, evidence={"ratio_curve": (xs[ok], ratio)}
    )


# -- split bounds (below-threshold / middle parts of the n-fold tail) ---------------


@dataclass
class SplitBoundReport:
    """Threshold decomposition of the n-fold tail at threshold A.

    ``low_part(x)``    integral over u <= A of tail(x-u) d mu^{(n-1)*}(u)
    ``mid_multi(x)``   same over (A, x-A] plus the boundary product, against
                       the (n-1)-fold factor
    ``mid_single(x)``  the analogue against a single factor
    Upper bound:   nfold_tail <= n*low + n*mid_multi
    Lower bound:   n*low - n(n-3)/2 * mid_multi - n(n-1)/2 * mid_single
                   <= nfold_tail
    ``middle_sup`` estimates limsup (mid_multi + mid_single)/nfold_tail.
    All quantities are tilted by e^{gamma0 x} and exact for the completed
    atom measure, so the bound residuals are nonnegative up to roundoff.
    """

    n: int
    A: float
    xs: np.ndarray
    low_part: np.ndarray
    mid_multi: np.ndarray
    mid_single: np.ndarray
    nfold_tail: np.ndarray
    upper_residual: np.ndarray
    lower_residual: np.ndarray
    middle_sup: float

    def min_upper_residual(self) -> float:
        return float(np.min(self.upper_residual))

    def min_lower_residual(self) -> float:
        return float(np.min(self.lower_residual))


def tail_split_bounds(
    rep: GriddedTiltRep,
    n: int,
    A: float,
    window_frac: float = defaults.WINDOW_FRAC,
) -> SplitBoundReport:
    """Evaluate the threshold split on the trailing window (x > n*A required)."""
    if n < 2:
        raise ConstructionError("split bounds need n >= 2")
    hh = rep.step / 2
    d1 = completed_atoms(rep)
    L1 = len(d1)
    iA = int(round(A / hh))
    A_snap = iA * hh

    x_window_lo = rep.x_max * (1.0 - window_frac)
    if x_window_lo <= n * A_snap:
        raise ConstructionError(
            f"window starts at {x_window_lo:.1f} <= n*A = {n * A_snap:.1f}"
        )

    # atoms of the (n-1)-fold power of the completed measure
    dm = d1
    for _ in range(n - 2):
        dm = convolve_atom_arrays(dm, d1, hh)
    dn = convolve_atom_arrays(dm, d1, hh)

    th1 = backward_tilted_tail(d1, rep.gamma0, hh, 0.0)
    thm = backward_tilted_tail(dm, rep.gamma0, hh, 0.0)
    thn = backward_tilted_tail(dn, rep.gamma0, hh, 0.0)

    nfft = fft.next_fast_len(len(dn) + L1)

    def correlate(mass, keep_low: bool):
        idx = np.arange(len(mass))
        m = np.where(idx <= iA if keep_low else idx > iA, mass, 0.0)
        t = th1 if keep_low else np.where(np.arange(L1) >= iA, th1, 0.0)
        return fft.irfft(fft.rfft(m, nfft) * fft.rfft(t, nfft), nfft)

    # the low part uses tails at x-u with u <= A (x-u stays on the single grid)
    low_full = correlate(dm, True)
    mid_multi_int = correlate(dm, False)
    mid_single_int = correlate(d1, False)

    node_idx = 2 * np.arange(rep.n_points)
    sel = (rep.x >= x_window_lo) & (rep.x > n * A_snap)
    ks = node_idx[sel]
    xs = rep.x[sel]

    bar1_A = th1[iA]
    barm_shift = thm[ks - iA]
    bar1_shift = th1[ks - iA]

    low = low_full[ks]
    mid_multi = mid_multi_int[ks] + bar1_A * barm_shift
    mid_single = mid_single_int[ks] + bar1_A * bar1_shift
    nfold = thn[ks]

    # degenerate inputs (all mass at the origin) have zero tails everywhere;
    # the bounds hold trivially there
    denom = np.where(nfold > 0, nfold, 1.0)
    upper = (n * low + n * mid_multi - nfold) / denom
    lower = (
        nfold - (n * low - 0.5 * n * (n - 3) * mid_multi - 0.5 * n * (n - 1) * mid_single)
    ) / denom
    middle_sup = float(np.max((mid_multi + mid_single) / denom))

    return SplitBoundReport(
        n=n,
        A=A_snap,
        xs=xs,
        low_part=low,
        mid_multi=mid_multi,
        mid_single=mid_single,
        nfold_tail=nfold,
        upper_residual=upper,
        lower_residual=lower,
        middle_sup=middle_sup,
    )


# -- convolution-root ratio ----------------------------------------------------------


@dataclass
class RootRatioReport:
    """Windowed band of tail(x)/nfold_tail(x) against n^{-1} muhat(gamma)^{1-n}."""

    n: int
    gamma: float
    upper: LimitEstimate
    lower: LimitEstimate
    predicted: float
    band: tuple
    collapsed: bool
    verdict: ClassVerdict


def conv_root_ratio(
    rep: GriddedTiltRep,
    n: int,
    gamma: float,
    band_tol: float = defaults.BAND_TOL,
    value_tol: float = defaults.VALUE_TOL,
    window_frac: float = defaults.WINDOW_FRAC,
    rep_n: Optional[GriddedTiltRep] = None,
) -> RootRatioReport:
    """Ratio diagnostic for convolution roots.

    If the root were in the gamma-convolution-equivalent class the band
    would collapse onto n^{-1} muhat(gamma)^{1-n}; a certified
    non-collapsing band witnesses failure.
    """
    if n < 2:
        raise ConstructionError("root ratio needs n >= 2")
    if not np.any(rep.W > 0):
        raise ConstructionError("root ratio undefined for a degenerate (zero) tail")
    rn = rep_n if rep_n is not None else conv_pow(rep, n)
    ok = (rn.W > 0) & (rep.W > 0)
    ratio = rep.W[ok] / rn.W[ok]
    est = estimate_limit(rep.x[ok], ratio, window_frac)
    mu_hat = exp_moment(rep, gamma)
    predicted = mu_hat ** (1 - n) / n
    noise = (rep.w_rel_err + rn.w_rel_err) * max(est.window_sup, 1e-300)
    v = verdict_from_estimate(
        est, predicted, band_tol, value_tol, noise,
        evidence={"ratio_curve": (rep.x[ok], ratio)},
    )
    single = LimitEstimate(
        est.window_inf, est.window_inf, est.trend, est.windows_used, est.x_range
    )
    upper = LimitEstimate(
        est.window_sup, est.window_sup, est.trend, est.windows_used, est.x_range
    )
    return RootRatioReport(
        n=n,
        gamma=gamma,
        upper=upper,
        lower=single,
        predicted=predicted,
        band=(est.window_inf, est.window_sup),
        collapsed=(v.verdict == "holds"),
        verdict=v,
    )
