"""Command-line entry point.

Commands::

    build           distribution spec JSON -> tilted grid CSV
    conv            two grid CSVs -> grid CSV of the convolution
    transform       spec or grid -> transform CSV along gamma + i z
    diagnose        grid -> class verdict JSON (+ evidence CSVs)
    counterexample  run the full reproduction harness -> report JSON
    plot            evidence CSV -> SVG line chart

Exit codes: 0 success, 1 expectation failed (--expect mismatch), 2 input or
configuration error, 3 numerical failure (error cap exceeded).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time

import numpy as np

from . import defaults, diagnostics, dist_core, transforms
from .convolve import conv
from .counterexample import CounterexampleConfig, full_report
from .dist_core import GriddedTiltRep, TailSpec
from .errors import CapExceededError, ConstructionError, DivergenceError, GridMismatchError, ToolkitError

VERSION = "0.1.0"

_SPEC_KEYS = {
    "point_mass": set(),
    "exponential": {"theta"},
    "exp_pareto": {"gamma", "alpha"},
    "xi": set(),
    "m_mixture": {"gamma", "a", "alpha", "beta", "scale"},
}


def load_spec(path: str) -> TailSpec:
    """Parse a distribution spec file; unknown keys are rejected."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict) or "kind" not in data:
        raise ConstructionError("spec file needs a 'kind' field")
    kind = data.pop("kind")
    if kind not in _SPEC_KEYS:
        raise ConstructionError(f"unknown kind {kind!r}")
    required = _SPEC_KEYS[kind]
    unknown = set(data) - required
    if unknown:
        raise ConstructionError(f"unknown keys for {kind}: {sorted(unknown)}")
    missing = required - set(data)
    if missing:
        raise ConstructionError(f"missing keys for {kind}: {sorted(missing)}")
    if kind == "point_mass":
        return dist_core.make_point_mass()
    if kind == "exponential":
        return dist_core.make_exponential(data["theta"])
    if kind == "exp_pareto":
        return dist_core.make_exp_pareto(data["gamma"], data["alpha"])
    if kind == "xi":
        return dist_core.make_xi()
    return dist_core.make_m_mixture(
        dist_core.MMixtureSpec(
            gamma=data["gamma"], a=data["a"], alpha=data["alpha"],
            beta=data["beta"], scale=data["scale"],
        )
    )


def _atomic_write(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _stamp(deterministic: bool) -> str:
    return "" if deterministic else f" written={time.strftime('%Y-%m-%dT%H:%M:%S')}"


def write_grid_csv(path: str, rep: GriddedTiltRep, deterministic: bool, extra: str = ""):
    lines = [
        f"# gamma0={rep.gamma0:.17g} step={rep.step:.17g} x_lo={rep.x_lo:.17g} "
        f"n={rep.n_points} trunc={rep.trunc_mass_bound:.17g}"
    ]
    lines.append(f"# version={VERSION} w_rel_err={rep.w_rel_err:.3g}{extra}{_stamp(deterministic)}")
    xs = rep.x
    for j in range(rep.n_points):
        lines.append(f"{xs[j]:.17g},{rep.W[j]:.17g}")
    _atomic_write(path, "\n".join(lines) + "\n")


def read_grid_csv(path: str) -> GriddedTiltRep:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if not header.startswith("# "):
            raise ConstructionError("grid file lacks its header line")
        fields = dict(
            kv.split("=", 1) for kv in header[2:].split() if "=" in kv
        )
        rows_x = []
        rows_w = []
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split(",")
            rows_x.append(float(a))
            rows_w.append(float(b))
    rep = GriddedTiltRep(
        gamma0=float(fields["gamma0"]),
        step=float(fields["step"]),
        x_lo=float(fields["x_lo"]),
        W=np.asarray(rows_w),
        trunc_mass_bound=float(fields["trunc"]),
    )
    if rep.n_points != int(fields["n"]):
        raise ConstructionError("grid file row count disagrees with its header")
    rep.validate()
    return rep


def write_transform_csv(path: str, prof, deterministic: bool):
    z_step = float(prof.z_values[1] - prof.z_values[0]) if len(prof.z_values) > 1 else 0.0
    lines = [
        f"# gamma={prof.gamma:.17g} step={z_step:.17g} n={len(prof.z_values)} "
        f"quad_err={prof.quadrature_error_bound:.17g} version={VERSION}{_stamp(deterministic)}",
        "z,re,im,modulus",
    ]
    for z, v in zip(prof.z_values, prof.values):
        lines.append(f"{z:.17g},{v.real:.17g},{v.imag:.17g},{abs(v):.17g}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_curve_csv(path: str, xs, vals, deterministic: bool, label: str = "value"):
    lines = [f"# version={VERSION}{_stamp(deterministic)}", f"x,{label}"]
    for x, v in zip(xs, vals):
        lines.append(f"{x:.17g},{v:.17g}")
    _atomic_write(path, "\n".join(lines) + "\n")


# -- commands ---------------------------------------------------------------------


def cmd_build(args) -> int:
    spec = load_spec(args.spec)
    rep = dist_core.to_grid(spec, args.gamma0, args.step, args.xmax)
    write_grid_csv(args.out, rep, args.deterministic)
    return 0


def cmd_conv(args) -> int:
    repA = read_grid_csv(args.grids[0])
    repB = read_grid_csv(args.grids[1])
    out = conv(repA, repB, trunc_cap=args.trunc_cap)
    extra = f" conv_of={repA.content_hash()},{repB.content_hash()}"
    write_grid_csv(args.out, out, args.deterministic, extra=extra)
    return 0


def cmd_transform(args) -> int:
    obj = load_spec(args.spec) if args.spec else read_grid_csv(args.grid)
    prof = transforms.complex_transform(obj, args.gamma, args.z_lo, args.z_hi, args.z_step)
    write_transform_csv(args.out, prof, args.deterministic)
    zeros = transforms.find_zero_candidates(prof, args.zero_tol)
    print(f"min |transform| = {prof.min_modulus:.3e} at z = {prof.argmin_z:.4f}; "
          f"zero candidates: {[round(z, 4) for z in zeros]}")
    if args.expect == "zero" and not zeros:
        return 1
    if args.expect == "nozero" and zeros:
        return 1
    return 0


def cmd_diagnose(args) -> int:
    rep = read_grid_csv(args.grid)
    kw = dict(band_tol=args.band_tol, value_tol=args.value_tol, window_frac=args.window_frac)
    cls = args.klass
    if cls == "L":
        verdict = diagnostics.test_L_gamma(rep, args.gamma, **kw)
    elif cls == "S":
        verdict = diagnostics.test_S_gamma(rep, args.gamma, **kw)
    elif cls == "L_delta":
        verdict = diagnostics.test_L_delta(rep, args.c, **kw)
    elif cls == "S_delta":
        verdict = diagnostics.test_S_delta(rep, args.c, **kw)
    elif cls == "S_loc":
        verdict = diagnostics.test_S_loc(rep, **kw)
    else:  # pragma: no cover - argparse restricts choices
        raise ConstructionError(f"unknown class {cls}")

    evidence_files = []
    base, _ = os.path.splitext(args.out)
    curves = verdict.evidence.get("curves", {})
    if "ratio_curve" in verdict.evidence:
        curves = dict(curves)
        curves["ratio"] = verdict.evidence["ratio_curve"]
    for name, (xs, vals) in curves.items():
        p = f"{base}_{name}.csv"
        write_curve_csv(p, xs, vals, args.deterministic)
        evidence_files.append(os.path.basename(p))
    sweep = verdict.evidence.get("middle_sweep")
    if sweep:
        p = f"{base}_middle_sweep.csv"
        write_curve_csv(
            p,
            [a for a, _ in sweep],
            [s if s is not None else math.nan for _, s in sweep],
            args.deterministic,
            label="sup_ratio",
        )
        evidence_files.append(os.path.basename(p))

    est = verdict.estimate
    payload = {
        "class": cls,
        "gamma": args.gamma,
        "verdict": verdict.verdict,
        "reason": verdict.reason,
        "target": verdict.target_limit,
        "band": [est.window_inf, est.window_sup],
        "trend": est.trend,
        "tolerances": verdict.tolerances,
        "evidence_csv": evidence_files,
        "config": {
            "grid": os.path.basename(args.grid),
            "gamma0": rep.gamma0,
            "step": rep.step,
            "x_max": rep.x_max,
            "window_frac": args.window_frac,
        },
        "version": VERSION,
    }
    _atomic_write(args.out, json.dumps(payload, indent=2, default=float) + "\n")
    print(f"{cls} at gamma={args.gamma}: {verdict.verdict}"
          + (f" ({verdict.reason})" if verdict.reason else ""))
    if args.expect and args.expect != verdict.verdict:
        return 1
    return 0


def cmd_counterexample(args) -> int:
    cfg = CounterexampleConfig(
        step=args.step,
        x_max=args.xmax,
        window_frac=args.window_frac,
    )
    report = full_report(cfg)
    _atomic_write(args.out, report.to_json(indent=2) + "\n")
    for k, v in sorted(report.pass_flags.items()):
        print(f"{'PASS' if v else 'FAIL'}  {k}")
    print(f"overall: {'PASS' if report.overall_pass else 'FAIL'}")
    if args.expect == "pass" and not report.overall_pass:
        return 1
    if args.expect == "fail" and report.overall_pass:
        return 1
    return 0


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs, ys, label = [], [], "value"
    with open(args.csv, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b = line.split(",")[:2]
            try:
                xs.append(float(a))
                ys.append(float(b))
            except ValueError:
                label = b
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(xs, ys, lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel(label)
    ax.set_title(os.path.basename(args.csv))
    fig.tight_layout()
    fig.savefig(args.out, format="svg")
    plt.close(fig)
    return 0


# -- argument parsing ---------------------------------------------------------------


def _common_grid_flags(p):
    p.add_argument("--gamma0", type=float, default=defaults.GAMMA0)
    p.add_argument("--step", type=float, default=defaults.STEP)
    p.add_argument("--xmax", type=float, default=defaults.X_MAX)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="convroots", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--deterministic", action="store_true",
                    help="omit timestamps so identical inputs give identical bytes")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="grid a distribution spec")
    p.add_argument("spec")
    _common_grid_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_build)

    p = sub.add_parser("conv", help="convolve two grids")
    p.add_argument("grids", nargs=2)
    p.add_argument("--trunc-cap", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_conv)

    p = sub.add_parser("transform", help="sample the complex transform")
    p.add_argument("--spec")
    p.add_argument("--grid")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--z-lo", type=float, default=0.0)
    p.add_argument("--z-hi", type=float, default=defaults.Z_MAX)
    p.add_argument("--z-step", type=float, default=defaults.Z_STEP)
    p.add_argument("--zero-tol", type=float, default=defaults.ZERO_TOL)
    p.add_argument("--expect", choices=["zero", "nozero"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_transform)

    p = sub.add_parser("diagnose", help="class membership verdict for a grid")
    p.add_argument("grid")
    p.add_argument("--class", dest="klass", required=True,
                   choices=["L", "S", "L_delta", "S_delta", "S_loc"])
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--window-frac", type=float, default=defaults.WINDOW_FRAC)
    p.add_argument("--band-tol", type=float, default=defaults.BAND_TOL)
    p.add_argument("--value-tol", type=float, default=defaults.VALUE_TOL)
    p.add_argument("--expect", choices=["holds", "fails", "inconclusive"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("counterexample", help="full reproduction harness")
    p.add_argument("--step", type=float, default=defaults.STEP)
    p.add_argument("--xmax", type=float, default=defaults.X_MAX)
    p.add_argument("--window-frac", type=float, default=defaults.WINDOW_FRAC)
    p.add_argument("--expect", choices=["pass", "fail"])
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_counterexample)

    p = sub.add_parser("plot", help="render an evidence CSV as SVG")
    p.add_argument("csv")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_plot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (ConstructionError, GridMismatchError, FileNotFoundError,
            json.JSONDecodeError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (CapExceededError, DivergenceError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    except ToolkitError as e:  # pragma: no cover - catch-all for new subtypes
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
