"""Exponential moments, the complex transform along a vertical line,
exponential tilting, and kernel smoothing.

The transform muhat(gamma + iz) is evaluated through the tail formula

    muhat(s) = 1 + s * integral_0^inf e^{s x} tail(x) dx,

per-family in closed form where the family permits (the oscillating family
reduces to elementary functions plus a dilogarithm of e^{2 pi i z}, the
power family to a generalized exponential integral), and by composite
midpoint quadrature on the tilted grid otherwise, with an explicit error
bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import mpmath
import numpy as np
from scipy import special

from . import dist_core as dc
from .convolve import (
    backward_tilted_tail,
    half_lattice_atoms,
    tail_on_half_lattice,
)
from .dist_core import GriddedTiltRep, TailSpec
from .errors import ConstructionError, DivergenceError

TWO_PI = 2.0 * math.pi


# -- exponential moments -------------------------------------------------------


def exp_moment(obj, gamma: float) -> float:
    """gamma-exponential moment; math.inf marks analytic divergence.

    TailSpec inputs use the closed-form integrals; grid inputs sum the
    tilted cell masses and add the beyond-grid moment (requires
    gamma <= gamma0 so the reweighting never amplifies the far tail).
    """
    if isinstance(obj, TailSpec):
        return dc.exact_moment(obj, gamma)
    rep: GriddedTiltRep = obj
    if gamma > rep.gamma0 + 1e-12:
        raise DivergenceError(
            f"grid moment needs gamma <= gamma0 ({gamma} > {rep.gamma0})"
        )
    d = half_lattice_atoms(rep)
    pos = (rep.step / 2) * np.arange(len(d))
    val = float(np.sum(d * np.exp((gamma - rep.gamma0) * pos)))
    ent = rep.tail_moment(gamma)
    if ent is not None:
        val += ent[0]
    else:
        val += _extrapolated_tail_moment(rep, gamma)
    return val


def _extrapolated_tail_moment(rep: GriddedTiltRep, s: float) -> float:
    """Beyond-grid mass estimate from the tail's log-log slope.

    For s == gamma0 and W ~ C x^{-p}:  integral ~ W(X) (1 + gamma0 X/(p-1));
    for s < gamma0 the reweighting decays and the mass is ~ e^{(s-g0)X} W(X).
    """
    g, X = rep.gamma0, rep.x_max
    W = rep.W
    if W[-1] <= 0:
        return 0.0
    j0 = max(1, int(0.6 * (rep.n_points - 1)))
    if W[j0] <= 0:
        return float(math.exp((s - g) * X) * W[-1])
    p = (math.log(W[j0]) - math.log(W[-1])) / (math.log(X) - math.log(rep.x[j0]))
    p = max(p, 1.0 + 1e-6)
    if abs(s - g) < 1e-12:
        return float(W[-1] * (1.0 + g * X / (p - 1.0)))
    r = s - g
    # integral_(X,inf) e^{r u} dW-type mass, W ~ C u^{-p}: leading order
    return float(math.exp(r * X) * W[-1] * (1.0 + p / (abs(r) * X)))


def exp_moment_quadrature(
    spec: TailSpec, gamma: float, step: float, x_quad_max: float
) -> float:
    """Pure-quadrature cross-check of the moment: composite midpoint of
    e^{gamma x} tail(x) on a uniform grid (no family smarts beyond the
    closed-form tail evaluation)."""
    if not spec.moment_is_finite(gamma):
        return math.inf
    n = int(round(x_quad_max / step))
    mids = (np.arange(n) + 0.5) * step
    vals = spec.tilted_tail(mids, gamma)
    return 1.0 + gamma * float(vals.sum()) * step


def moment_is_finite(spec: TailSpec, gamma: float) -> bool:
    return spec.moment_is_finite(gamma)


# -- complex transform ---------------------------------------------------------


@dataclass
class TransformProfile:
    """Samples of muhat(gamma + iz) on a z-grid with a modulus summary."""

    gamma: float
    z_values: np.ndarray
    values: np.ndarray
    min_modulus: float
    argmin_z: float
    quadrature_error_bound: float
    meta: dict = field(default_factory=dict)
    evaluator: Optional[Callable[[float], complex]] = None

    def modulus(self) -> np.ndarray:
        return np.abs(self.values)


def _xi_transform_at(gamma: float, z):
    """Closed form of the oscillating family's transform at gamma = 1.

    With w = e^{2 pi i z}:
        muhat(1+iz) = 1 + (1+iz) [C (w-1)/(iz) + (w-1)(1+iz)/(z^2-1)] Phi(z),
        Phi(z) = 1/(3 pi) + Li2(w)/pi^3,
    where the two bracket terms are the per-period integrals of the constant
    and of the sine part, and the dilogarithm sums the 1/n^2 period levels.
    """
    z = np.asarray(z, dtype=float)
    w = np.exp(2j * math.pi * z)
    li2 = special.spence(1.0 - w)
    phi = 1.0 / (3.0 * math.pi) + li2 / math.pi ** 3

    iz = 1j * z
    with np.errstate(divide="ignore", invalid="ignore"):
        jc = np.where(np.abs(z) < 1e-8, TWO_PI * (1.0 + 1j * math.pi * z), (w - 1.0) / iz)
        js = (w - 1.0) * (1.0 + iz) / (z * z - 1.0)
    # resonance |z| = 1: limit (w-1)/(z -+ 1) -> 2 pi i w'
    res = np.abs(np.abs(z) - 1.0) < 1e-8
    if np.any(res):
        zr = np.where(z[res] > 0, 1.0, -1.0)
        delta = z[res] - zr
        lim = 2j * math.pi * (1.0 + 1j * math.pi * delta) * (1.0 + 1j * z[res]) / (z[res] + zr)
        js = js.copy()
        js[res] = lim
    return 1.0 + (1.0 + iz) * (dc.XI_C * jc + js) * phi


def _spec_transform_evaluator(spec: TailSpec, gamma: float):
    """Per-family closed-form evaluator for muhat(gamma+iz), or None."""
    f = spec.family
    if f == "point_mass":
        return lambda z: np.ones_like(np.asarray(z, dtype=float), dtype=complex), 1e-15
    if f == "exponential":
        (theta,) = spec.params

        def ev(z):
            z = np.asarray(z, dtype=float)
            return theta / (theta - gamma - 1j * z)

        return ev, 1e-15
    if f == "xi" and abs(gamma - 1.0) < 1e-12:
        return (lambda z: _xi_transform_at(gamma, z)), 1e-12
    if f == "exp_pareto" and abs(gamma - spec.params[0]) < 1e-12:
        alpha = spec.params[1]

        def ev(z):
            z = np.atleast_1d(np.asarray(z, dtype=float))
            out = np.empty(len(z), dtype=complex)
            for i, zz in enumerate(z):
                out[i] = _power_tail_transform(alpha, gamma, zz)
            return out

        return ev, 1e-10
    if f == "m_mixture" and abs(gamma - spec.params[0]) < 1e-12:
        _, a, alpha, beta, scale = spec.params

        def ev(z):
            z = np.atleast_1d(np.asarray(z, dtype=float))
            out = np.empty(len(z), dtype=complex)
            for i, zz in enumerate(z):
                s = gamma + 1j * zz
                power = _power_tail_integral(alpha, zz) if a > 0 else 0.0
                dec = 1.0 / (beta - 1j * zz) if a < 1 else 0.0
                out[i] = 1.0 + s * scale * (a * power + (1.0 - a) * dec)
            return out

        return ev, 1e-10
    return None


def _power_tail_integral(alpha: float, z: float) -> complex:
    """integral_0^inf (1+x)^{-alpha} e^{izx} dx = e^{-iz} E_alpha(-iz)."""
    if abs(z) < 1e-14:
        return complex(1.0 / (alpha - 1.0))
    val = mpmath.expint(alpha, -1j * z) * mpmath.exp(-1j * z)
    return complex(val)


def _power_tail_transform(alpha: float, gamma: float, z: float) -> complex:
    return 1.0 + (gamma + 1j * z) * _power_tail_integral(alpha, z)


def complex_transform(
    obj, gamma: float, z_lo: float, z_hi: float, z_step: float
) -> TransformProfile:
    """Sample muhat(gamma + iz) for z in [z_lo, z_hi]."""
    if z_step <= 0 or z_hi <= z_lo:
        raise ConstructionError("need z_step > 0 and z_hi > z_lo")
    nz = int(round((z_hi - z_lo) / z_step))
    zs = z_lo + z_step * np.arange(nz + 1)

    if isinstance(obj, TailSpec):
        if not obj.moment_is_finite(gamma):
            raise DivergenceError("transform needs a finite moment at gamma")
        pair = _spec_transform_evaluator(obj, gamma)
        if pair is not None:
            ev, qerr = pair
            vals = np.asarray(ev(zs), dtype=complex)
            prof = _profile(gamma, zs, vals, qerr)
            prof.evaluator = lambda z: complex(np.asarray(ev(np.array([z])))[0])
            prof.meta["method"] = "closed-form"
            return prof
        # fall back to a grid
        from .defaults import STEP, X_MAX

        obj = dc.to_grid(obj, gamma, STEP, X_MAX)

    rep: GriddedTiltRep = obj
    if gamma > rep.gamma0 + 1e-12:
        raise DivergenceError("transform needs gamma <= gamma0 of the grid")
    d = half_lattice_atoms(rep)
    pos = (rep.step / 2) * np.arange(len(d))
    weights = d * np.exp((gamma - rep.gamma0) * pos)

    def ev_vec(z, block: int = 16):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty(len(z), dtype=complex)
        for i in range(0, len(z), block):
            zz = z[i : i + block]
            out[i : i + block] = np.exp(1j * np.outer(zz, pos)) @ weights
        return out

    vals = ev_vec(zs)
    ent = rep.tail_moment(gamma)
    tail_mass = ent[0] if ent is not None else _extrapolated_tail_moment(rep, gamma)
    # atoms carry positions to within h/2 -> first-order bound; beyond-grid
    # mass contributes at most its size to each sample
    zmax = max(abs(z_lo), abs(z_hi))
    total = float(np.sum(weights))
    qerr = 0.5 * rep.step * zmax * total + tail_mass + rep.w_rel_err * total
    prof = _profile(gamma, zs, vals, qerr)
    prof.evaluator = lambda z: complex(ev_vec(np.array([z]))[0])
    prof.meta["method"] = "grid-atoms"
    return prof


def _profile(gamma, zs, vals, qerr) -> TransformProfile:
    mods = np.abs(vals)
    i = int(np.argmin(mods))
    return TransformProfile(
        gamma=float(gamma),
        z_values=zs,
        values=vals,
        min_modulus=float(mods[i]),
        argmin_z=float(zs[i]),
        quadrature_error_bound=float(qerr),
        meta={
            "zero_refine_rule": "golden-section to width 1e-10; "
            "accept when modulus <= max(tol, 10*quadrature_error_bound)"
        },
    )


def find_zero_candidates(profile: TransformProfile, tol: float) -> list:
    """Locations of local modulus minima certified below the tolerance.

    A candidate counts only when the refined modulus is at most
    max(tol, 10 * quadrature_error_bound): zeros are never certified below
    the numerical noise floor.  Refinement is golden-section on |muhat| when
    the profile carries an evaluator, else parabolic on the samples.
    """
    mods = profile.modulus()
    zs = profile.z_values
    threshold = max(tol, 10.0 * profile.quadrature_error_bound)
    out = []
    for i in range(1, len(zs) - 1):
        if mods[i] <= mods[i - 1] and mods[i] <= mods[i + 1] and mods[i] <= 10 * threshold:
            z_ref, m_ref = _refine_minimum(profile, zs[i - 1], zs[i + 1], zs[i], mods[i])
            if m_ref <= threshold:
                out.append(float(z_ref))
    return out


def _refine_minimum(profile, lo, hi, z0, m0):
    if profile.evaluator is None:
        # parabola through the three samples
        i = int(np.argmin(np.abs(profile.z_values - z0)))
        if 0 < i < len(profile.z_values) - 1:
            y0, y1, y2 = profile.modulus()[i - 1 : i + 2]
            denom = y0 - 2 * y1 + y2
            if denom > 0:
                shift = 0.5 * (y0 - y2) / denom
                z = z0 + shift * (hi - lo) / 2
                return z, y1
        return z0, m0
    f = lambda z: abs(profile.evaluator(z))
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(80):
        if b - a < 1e-10:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    z = 0.5 * (a + b)
    return z, f(z)


# -- exponential tilt ----------------------------------------------------------


def tilt(obj, gamma: float, step: float | None = None, x_max: float | None = None) -> GriddedTiltRep:
    """Exponential tilt: reweight by e^{gamma x} and normalize by the moment.

    The output reference tilt is gamma0 - gamma, so the stored atom array is
    unchanged up to the 1/Z normalization; tilting by the reference tilt
    itself yields a heavy-tailed representation at reference 0.  Round trips
    (gamma then -gamma on the grid path) cancel exactly because the
    normalizers are built from the same atoms and beyond-grid moments.
    """
    if isinstance(obj, TailSpec):
        from .defaults import STEP, X_MAX

        if not obj.moment_is_finite(gamma):
            raise DivergenceError(f"cannot tilt: moment at {gamma} diverges")
        rep = dc.to_grid(obj, max(gamma, 0.0), step or STEP, x_max or X_MAX)
        return tilt(rep, gamma)

    rep: GriddedTiltRep = obj
    g0 = rep.gamma0
    if gamma > g0 + 1e-12:
        raise DivergenceError("grid tilt needs gamma <= gamma0")
    d = half_lattice_atoms(rep)
    hh = rep.step / 2
    pos = hh * np.arange(len(d))
    ent = rep.tail_moment(gamma)
    if ent is not None:
        t1, t1_exact = ent
    else:
        t1, t1_exact = _extrapolated_tail_moment(rep, gamma), False
    Z = float(np.sum(d * np.exp((gamma - g0) * pos))) + t1
    if not (Z > 0 and math.isfinite(Z)):
        raise DivergenceError("tilt normalizer is not a positive finite number")

    g_out = g0 - gamma
    if g_out * rep.x_max > dc._EXP_LIMIT:
        raise ConstructionError("output reference tilt overflows; tilt by a larger gamma")
    boundary = math.exp(g_out * rep.x_max) * t1 / Z
    W = backward_tilted_tail(d / Z, g_out, hh, boundary=boundary)[::2].copy()

    out = GriddedTiltRep(
        gamma0=g_out,
        step=rep.step,
        x_lo=rep.x_lo,
        W=W,
        trunc_mass_bound=rep.trunc_mass_bound / Z,
        w_rel_err=rep.w_rel_err + (0.0 if t1_exact else 0.3 * abs(t1) / Z),
        meta={"tilt_of": rep.content_hash(), "tilt_gamma": gamma, "Z": Z},
    )
    # transform the beyond-grid moments: new s corresponds to old s + gamma
    out.set_tail_moment(-gamma, (math.exp(-g0 * rep.x_max) * rep.W[-1]) / Z, True)
    for key, (v, exact) in rep.tail_moments.items():
        out.set_tail_moment(key - gamma, v / Z, exact)
    return out


# -- kernel smoothing ----------------------------------------------------------


@dataclass(frozen=True)
class SmoothingKernel:
    """Density c1^{-1} e^{-gamma x} (1 - x/c) on [0, c)."""

    gamma: float
    c: float

    def __post_init__(self):
        if not (self.gamma > 0 and self.c > 0):
            raise ConstructionError("kernel needs gamma > 0 and c > 0")

    @property
    def c1(self) -> float:
        """Normalizer: integral_0^c e^{-gamma x}(1 - x/c) dx, closed form."""
        g, c = self.gamma, self.c
        e = math.exp(-g * c)
        return (1.0 - e) / g - (1.0 - e * (1.0 + g * c)) / (g * g * c)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= 0) & (x < self.c)
        return np.where(inside, np.exp(-self.gamma * x) * (1.0 - x / self.c), 0.0) / self.c1

    def tail(self, t):
        """integral_t^c of the density (1 for t <= 0, 0 for t >= c)."""
        t = np.asarray(t, dtype=float)
        g, c = self.gamma, self.c
        tc = np.clip(t, 0.0, c)
        e_t = np.exp(-g * tc)
        e_c = math.exp(-g * c)
        part = (e_t - e_c) / g - (
            e_t * (1.0 + g * tc) - e_c * (1.0 + g * c)
        ) / (g * g * c)
        return np.where(t <= 0, 1.0, np.where(t >= c, 0.0, part / self.c1))

    def tilted_moment(self) -> float:
        """integral_0^c e^{gamma u} f_c(u) du: the tail-ratio limit constant."""
        g, c = self.gamma, self.c
        # integral e^{gu} e^{-gu}(1-u/c) du / c1 = (c/2) / c1
        return 0.5 * c / self.c1


def smooth(obj, gamma: float, c: float, step: float | None = None, x_max: float | None = None) -> GriddedTiltRep:
    """Convolution with the triangular-exponential kernel (absolutely
    continuous output).  Exactness on the atom measure keeps the sandwich
    tail_{mu_c}(x+c) <= tail_mu(x) <= tail_{mu_c}(x) valid node-wise."""
    kern = SmoothingKernel(gamma, c)
    if isinstance(obj, TailSpec):
        from .defaults import STEP, X_MAX

        obj = dc.to_grid(obj, gamma, step or STEP, x_max or X_MAX)
    rep: GriddedTiltRep = obj
    W_s = smoothed_tail_at(rep, kern, rep.x)
    # mass of mu_c beyond the grid originates from mu-mass beyond x_max - c
    d = half_lattice_atoms(rep)
    hh = rep.step / 2
    k0 = max(0, int(math.ceil((rep.x_max - c) / hh)))
    near_top = float(d[k0:].sum())
    trunc = math.exp(rep.gamma0 * c) * (near_top + rep.trunc_mass_bound)
    out = GriddedTiltRep(
        gamma0=rep.gamma0,
        step=rep.step,
        x_lo=rep.x_lo,
        W=W_s,
        trunc_mass_bound=trunc,
        w_rel_err=rep.w_rel_err + 1e-12,
        meta={"smooth_of": rep.content_hash(), "kernel": (gamma, c)},
    )
    return out


def smoothed_tail_at(rep: GriddedTiltRep, kern: SmoothingKernel, points) -> np.ndarray:
    """Tilted tail of (kernel density dx) * mu at arbitrary points.

    e^{g0 y} bar mu_c(y) = [tilted tail of atoms above y, re-anchored at y]
    + sum over atoms y_p in (y - c, y] of the partial kernel tail, with the
    beyond-grid mass carried by the boundary term of the atom tail (its
    kernel weight is <= 1, so using 1 keeps the sandwich inequality valid).
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    d = half_lattice_atoms(rep)
    L = len(d)
    hh = rep.step / 2
    g0 = rep.gamma0
    tail_half = tail_on_half_lattice(rep)  # includes the W[-1] boundary

    out = np.zeros(len(pts))
    below = pts <= 0
    out[below] = np.exp(g0 * pts[below])
    act = ~below
    y = pts[act]
    k_hi = np.floor(y / hh + 1e-9).astype(np.int64)
    # atoms strictly above y, re-anchored; beyond the top only the boundary
    # mass remains
    in_grid = k_hi <= L - 1
    full = np.where(
        in_grid,
        tail_half[np.clip(k_hi, 0, L - 1)] * np.exp(-g0 * (y - hh * np.clip(k_hi, 0, L - 1))),
        rep.W[-1] * np.exp(-g0 * (y - rep.x_max)),
    )
    # partial kernel weights for atoms within (y - c, y]
    n_back = int(math.floor(kern.c / hh - 1e-9))
    for i in range(0, n_back + 1):
        k = k_hi - i
        valid = (k >= 0) & (k <= L - 1)
        if not np.any(valid):
            break
        t = y - hh * k
        w = np.where((t >= 0) & (t < kern.c), np.exp(g0 * t) * kern.tail(t), 0.0)
        full = full + np.where(valid, d[np.clip(k, 0, L - 1)] * w, 0.0)
    out[act] = full
    return out
