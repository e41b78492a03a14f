"""Command-line front end: ``resurge generate | analyze | resum``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 unsupported singularity structure.  Every run leaves a ``manifest.json``
in the output directory, including failed runs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .darboux import DarbouxError, classify_exponent, darboux_fit
from .pade import (PadeError, RootFindingError, dominant_peak, pole_histogram)
from .reference import IntegrationError, compare, integrate_ode
from .series import (BUILTIN_ODES, ResonanceError, SpecError, borel_transform, derive_coefficients,
                     load_ode)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_UNSUPPORTED = 0, 1, 2, 3
NUMERIC_ERRORS = (ResonanceError, PadeError, RootFindingError, DarbouxError, IntegrationError,
                  ArithmeticError, FloatingPointError)


class ConfigError(ValueError):
    pass


class UnsupportedStructure(RuntimeError):
    pass


@dataclass
class PipelineConfig:
    ode: str
    order: int
    precision: int = 64
    out: str = "out"
    # analysis
    pade_orders: tuple[int, int] = (5, 25)
    bins: int = 100
    transform: str = "none"
    darboux_n: tuple[int, ...] = ()
    # approximant
    kind: str = "auto"
    nprime: str = "auto"
    # resummation
    x0: float = 10.0
    ytarget: float = 0.12
    x_range: tuple[float, float] = (5.0, 20.0)
    points: int = 151
    tol: float = 1e-10

    def validate(self) -> None:
        if self.ode not in BUILTIN_ODES and not Path(self.ode).exists():
            raise ConfigError(f"ODE spec {self.ode!r} is neither a file nor a built-in name")
        if self.order < 2:
            raise ConfigError("--order must be >= 2")
        if self.precision < 32:
            raise ConfigError("--precision must be >= 32 digits")
        if self.transform not in ("none", "log-derivative"):
            raise ConfigError("--transform must be 'none' or 'log-derivative'")
        lo, hi = self.pade_orders
        if not 1 <= lo <= hi:
            raise ConfigError("--pade-orders must look like LO:HI with 1 <= LO <= HI")
        if self.bins < 1:
            raise ConfigError("--bins must be positive")
        if self.nprime != "auto":
            try:
                if int(self.nprime) < 1:
                    raise ValueError
            except ValueError:
                raise ConfigError("--nprime must be 'auto' or a positive integer") from None
        if self.x0 <= 0 or self.x_range[0] <= 0 or self.x_range[0] >= self.x_range[1]:
            raise ConfigError("x values must be positive and --x-range increasing")
        if self.points < 2:
            raise ConfigError("--points must be >= 2")


@dataclass
class RunManifest:
    command: str
    config: dict
    version: str = __version__
    status: str = "running"
    failed_stage: str | None = None
    error: str | None = None
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, outdir: Path) -> None:
        outdir.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=outdir, prefix=".manifest-", suffix=".json")
        with os.fdopen(fd, "w") as fh:
            json.dump(asdict(self), fh, indent=2, default=str)
        os.replace(tmp, outdir / "manifest.json")


class Stage:
    """Times a pipeline stage and records it as the failing one on error."""

    def __init__(self, manifest: RunManifest, name: str):
        self.manifest, self.name = manifest, name

    def __enter__(self):
        self.t0 = time.perf_counter()
        self.manifest.failed_stage = self.name
        return self

    def __exit__(self, exc_type, exc, tb):
        self.manifest.timings[self.name] = round(time.perf_counter() - self.t0, 6)
        if exc_type is None:
            self.manifest.failed_stage = None
        return False


def _write_csv(path: Path, header, rows, manifest: RunManifest) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    manifest.outputs.append(path.name)


def _fmt(v) -> str:
    return repr(float(v))


# commands ---------------------------------------------------------------

def cmd_generate(cfg: PipelineConfig, manifest: RunManifest, outdir: Path) -> int:
    with Stage(manifest, "load"):
        ode = load_ode(cfg.ode)
    with Stage(manifest, "series"):
        series = derive_coefficients(ode, cfg.order)
        B = borel_transform(series)
    rows = [(n, str(series[n]), "" if n == 0 else str(B.B(n)), _fmt(series[n]),
             "" if n == 0 else _fmt(B.B(n))) for n in range(series.order + 1)]
    _write_csv(outdir / "series.csv", ["n", "a_n", "B_n", "a_n_float", "B_n_float"], rows, manifest)
    print(f"{ode.name or cfg.ode}: a_1..a_{cfg.order} written to {outdir / 'series.csv'}")
    return EXIT_OK


def _darboux_table(B, ns, precision):
    out = []
    for n in ns:
        try:
            est = darboux_fit(B, n, bracket=(0.0, 6.0), dps=precision)
            out.append((n, est.b, est.s))
        except DarbouxError as exc:
            out.append((n, None, str(exc)))
    return out


def _recommend(table):
    good = [r for r in table if r[1] is not None]
    if not good:
        raise DarbouxError("no Darboux estimate succeeded; try other n")
    n, b, _ = max(good, key=lambda r: r[0])
    kind, exponent = classify_exponent(b)
    return kind, exponent, float(b), n


def cmd_analyze(cfg: PipelineConfig, manifest: RunManifest, outdir: Path) -> int:
    from .plotting import plot_histogram

    with Stage(manifest, "load"):
        ode = load_ode(cfg.ode)
    lo, hi = cfg.pade_orders
    with Stage(manifest, "histogram"):
        hist, records, failed = pole_histogram(ode, range(lo, hi + 1), bins=cfg.bins,
                                               transform=cfg.transform, dps=cfg.precision)
        levels = dominant_peak([r.location.real for r in records if abs(r.location.imag) <= 0.1],
                               *hist.range, bins=cfg.bins)
    _write_csv(outdir / "histogram.csv", ["bin_left", "bin_right", "count"],
               [(_fmt(a), _fmt(b), int(c)) for a, b, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts)],
               manifest)
    _write_csv(outdir / "poles.csv", ["order", "re_z", "im_z", "re_residue", "im_residue"],
               [(r.order, _fmt(r.location.real), _fmt(r.location.imag), _fmt(r.residue.real),
                 _fmt(r.residue.imag)) for r in records], manifest)
    plot_histogram(hist, outdir / "histogram.png", title=f"{ode.name}: Borel-Pade poles, orders {lo}-{hi}",
                   refined=levels[-1])
    manifest.outputs.append("histogram.png")

    with Stage(manifest, "darboux"):
        B = borel_transform(derive_coefficients(ode, max(cfg.order, 13)))
        ns = cfg.darboux_n or tuple(sorted({12, B.order // 2, B.order - 1}))
        table = _darboux_table(B, [n for n in ns if 3 <= n < B.order], cfg.precision)
        kind, exponent, b, n_used = _recommend(table)
    _write_csv(outdir / "darboux.csv", ["n", "b", "s"],
               [(n, "" if b_ is None else mpmath.nstr(b_, 15), s if b_ is None else mpmath.nstr(s, 15))
                for n, b_, s in table], manifest)
    report = {
        "ode": ode.name or cfg.ode,
        "peak": levels[-1].peak,
        "peak_width": levels[-1].width,
        "failed_orders": failed,
        "b": b,
        "b_n": n_used,
        "exponent": str(exponent),
        "recommendation": kind,
        "resummation_supported": kind != "unsupported",
    }
    (outdir / "analysis.json").write_text(json.dumps(report, indent=2) + "\n")
    manifest.outputs.append("analysis.json")
    print(f"{report['ode']}: histogram peak {report['peak']:.5f}, b = {b:.6f} (n={n_used}), "
          f"exponent ~ {exponent}, recommendation: {kind}")
    return EXIT_OK


def cmd_resum(cfg: PipelineConfig, manifest: RunManifest, outdir: Path) -> int:
    from .approximant import build_approximant, predicted_ratios, select_pole_count
    from .plotting import plot_curves, plot_ratios
    from .resummation import resum

    with Stage(manifest, "load"):
        ode = load_ode(cfg.ode)
    N = cfg.order
    with Stage(manifest, "series"):
        B = borel_transform(derive_coefficients(ode, max(N + 12, 40)))
    kind = cfg.kind
    if kind == "auto":
        with Stage(manifest, "classify"):
            table = _darboux_table(B, [B.order - 1], cfg.precision)
            kind, exponent, b, _ = _recommend(table)
        print(f"auto kind: b = {b:.5f} -> {kind}")
    if kind not in ("simple-pole", "branch-1/2"):
        raise UnsupportedStructure(f"no approximant lattice for singularity kind {kind!r}")
    akind = "pole" if kind == "simple-pole" else "sqrt-branch"
    lam = ode.lam

    with Stage(manifest, "approximant"):
        coeffs = list(B.coeffs)
        if cfg.nprime == "auto":
            Np = select_pole_count(coeffs[: N + 2], akind, lam)
        else:
            Np = int(cfg.nprime)
        ra = build_approximant(coeffs[: N + 1], akind, Np, lam)
        ratios = predicted_ratios(ra, coeffs[: N + 11])
        ratios_n = predicted_ratios(build_approximant(coeffs[: N + 1], akind, N, lam), coeffs[: N + 11])
    (outdir / "approximant.json").write_text(ra.to_json() + "\n")
    manifest.outputs.append("approximant.json")
    _write_csv(outdir / "ratios.csv", ["index", "predicted", "exact", "ratio"], ratios.to_rows(), manifest)
    plot_ratios({f"N'={N}": ratios_n, f"N'={Np}": ratios}, outdir / "ratios.png",
                title=f"{ode.name}: predicted/exact, N={N}")
    manifest.outputs.append("ratios.png")

    x = np.linspace(cfg.x_range[0], cfg.x_range[1], cfg.points)
    with Stage(manifest, "resum"):
        sol = resum(ra, cfg.x0, cfg.ytarget, tol=cfg.tol)
        comp = sol.components(x)
    sol_path = outdir / "resummed.csv"
    cols = ["x", "y_med", "pv_part", "exp_sector_1", "exp_sector_2", "exp_sector_3"]
    _write_csv(sol_path, cols, [[_fmt(comp[c][i]) for c in cols] for i in range(len(x))], manifest)

    with Stage(manifest, "reference"):
        lo = min(cfg.x_range[0], cfg.x0)
        hi = max(cfg.x_range[1], cfg.x0)
        ref = integrate_ode(ode, cfg.x0, cfg.ytarget, (lo, hi), tol=cfg.tol)
        rep = compare(ref, lambda xx: np.interp(xx, x, comp["y_med"]), x)
        rep_pv = compare(ref, lambda xx: np.interp(xx, x, comp["pv_part"]), x)
    _write_csv(outdir / "reference.csv", ["x", "y"], [(_fmt(a), _fmt(b)) for a, b in zip(x, ref(x))], manifest)
    _write_csv(outdir / "comparison.csv", ["x", "reference", "y_med", "abs_err", "rel_err", "pv_abs_err"],
               [(_fmt(a), _fmt(r), _fmt(c), _fmt(e), _fmt(q), _fmt(p)) for a, r, c, e, q, p in
                zip(rep.x, rep.reference, rep.candidate, rep.abs_err, rep.rel_err, rep_pv.abs_err)], manifest)
    span = float(np.ptp(ref(x)))
    mid = float(np.mean(ref(x)))
    plot_curves(x, {"reference": ref(x), "median resummation": comp["y_med"], "PV only": comp["pv_part"]},
                outdir / "resummed.png", title=f"{ode.name}: N={N}, N'={Np}, C={sol.C:.5g}",
                ylim=(mid - 1.5 * span, mid + 1.5 * span) if span > 0 else None)
    manifest.outputs.append("resummed.png")
    summary = {"N": N, "Nprime": Np, "kind": akind, "C": sol.C,
               "max_abs_error": rep.max_abs, "max_rel_error": rep.max_rel,
               "pv_max_abs_error": rep_pv.max_abs, "pv_max_rel_error": rep_pv.max_rel}
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    manifest.outputs.append("summary.json")
    print(f"{ode.name}: N={N} N'={Np} C={sol.C:.6g}; {rep.summary()}; PV only: {rep_pv.summary()}")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "analyze": cmd_analyze, "resum": cmd_resum}


# argument handling -------------------------------------------------------

def _pair(text: str, cast):
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected LO:HI, got {text!r}")
    return tuple(cast(p) for p in parts)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="resurge", description="Resurgent resummation of normal-form ODE series.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, order_default):
        sp.add_argument("--config", help="JSON file with option values (command-line flags win)")
        sp.add_argument("--ode", help=f"ODE spec JSON file or built-in name ({', '.join(BUILTIN_ODES)})")
        sp.add_argument("--order", type=int, default=None, help=f"truncation order N (default {order_default})")
        sp.add_argument("--precision", type=int, default=None, help="working precision in digits (default 64)")
        sp.add_argument("--out", default=None, help="output directory (default ./out)")
        sp.set_defaults(order_default=order_default)

    g = sub.add_parser("generate", help="series coefficients a_n and Borel coefficients B_n")
    common(g, 20)

    a = sub.add_parser("analyze", help="Borel-Pade pole histogram and Darboux exponent")
    common(a, 40)
    a.add_argument("--pade-orders", type=lambda s: _pair(s, int), default=None, help="LO:HI (default 5:25)")
    a.add_argument("--bins", type=int, default=None)
    a.add_argument("--transform", choices=("none", "log-derivative"), default=None)
    a.add_argument("--darboux-n", type=lambda s: tuple(int(v) for v in s.split(",")), default=None,
                   help="comma-separated n values for the Darboux fit")

    r = sub.add_parser("resum", help="resurgent approximant, median resummation and reference comparison")
    common(r, 8)
    r.add_argument("--kind", default=None, help="auto | simple-pole | branch-1/2")
    r.add_argument("--nprime", default=None, help="auto or a positive integer")
    r.add_argument("--x0", type=float, default=None)
    r.add_argument("--ytarget", type=float, default=None)
    r.add_argument("--x-range", type=lambda s: _pair(s, float), default=None, help="LO:HI (default 5:20)")
    r.add_argument("--points", type=int, default=None)
    return p



def make_config(args: argparse.Namespace) -> PipelineConfig:
    values: dict = {}
    if args.config:
        try:
            values.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        values = {k.replace("-", "_"): v for k, v in values.items()}
    for name in ("ode", "order", "precision", "out", "pade_orders", "bins", "transform", "darboux_n",
                 "kind", "nprime", "x0", "ytarget", "x_range", "points"):
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    if "ode" not in values:
        raise ConfigError("--ode is required")
    values.setdefault("order", args.order_default)
    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for k in ("pade_orders", "x_range", "darboux_n"):
        if k in values:
            values[k] = tuple(values[k])
    if "nprime" in values:
        values["nprime"] = str(values["nprime"])
    cfg = PipelineConfig(**values)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    outdir = Path(args.out or "out")
    manifest = RunManifest(args.command, {k: v for k, v in vars(args).items() if k != "order_default"})
    code = EXIT_OK
    try:
        try:
            cfg = make_config(args)
        except (ConfigError, TypeError) as exc:
            manifest.failed_stage = "config"
            raise ConfigError(str(exc)) from exc
        manifest.config = asdict(cfg)
        outdir = Path(cfg.out)
        outdir.mkdir(parents=True, exist_ok=True)
        mpmath.mp.dps = cfg.precision
        code = COMMANDS[args.command](cfg, manifest, outdir)
        manifest.status = "ok"
    except (ConfigError, SpecError, OSError) as exc:
        code = EXIT_CONFIG
        manifest.status, manifest.error = "config-error", str(exc)
        manifest.failed_stage = manifest.failed_stage or "config"
        print(f"error: {exc}", file=sys.stderr)
    except UnsupportedStructure as exc:
        code = EXIT_UNSUPPORTED
        manifest.status, manifest.error = "unsupported", str(exc)
        print(f"unsupported: {exc}", file=sys.stderr)
    except NUMERIC_ERRORS as exc:
        code = EXIT_NUMERIC
        manifest.status, manifest.error = "numerical-failure", str(exc)
        print(f"numerical failure in stage {manifest.failed_stage}: {exc}", file=sys.stderr)
    finally:
        try:
            manifest.write(outdir)
        except OSError as exc:
            print(f"warning: could not write manifest: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
