"""qbounce command line.

Subcommands
-----------
units     lab -> dimensionless conversion report
spectrum  table of E_n, E', E'' around the configured energy
predict   analytic revival-time predictions over the lambda list
simulate  one TDSE run; writes the autocorrelation series (and a figure)
sweep     full lambda sweep with numeric revival extraction
compare   merge a sweep's numeric and analytic curves into report files

Configuration is a flat ``key = value`` file (``#`` comments allowed);
every key has a default, unknown keys are rejected with their line number.
``--lambda`` and ``--er`` override the file.  Data files (CSV/.dat) are
byte-identical for identical configs; anything volatile (durations,
versions) goes to a ``.meta`` sidecar in the same key=value format.

Exit codes: 0 success, 1 configuration error, 2 numeric error,
3 detection error.
"""

import argparse
import platform
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import analysis, figures, resonance, scaling, spectrum
from .errors import ConfigError, QbounceError, exit_code_for

_CESIUM_OMEGA = 2.0 * np.pi * 930.0
_FIG1_LAMBDAS = (0.0, 0.05, 0.1, 0.15, 0.2, 0.25)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration (all defaults applied).

    ``z0``, when set, takes precedence over ``E_r``: the packet energy is
    V(z0) on the static potential, i.e. z0 is the release height / outer
    turning point.  ``None`` means "auto" for the optional numeric fields.
    """

    model: str = "numeric"            # "numeric" | "triangular"
    kbar: float = 1.0
    V0: float = 1.0
    kappa: float = 1.0
    E_r: float = 104.1
    z0: float | None = None
    sigma: float | None = None        # auto: packet spans r^(1/3)/2 levels
    p0: float = 0.0
    lambdas: tuple = _FIG1_LAMBDAS    # config key "lambda"
    x_min: float = -10.0
    x_max: float | None = None        # auto: 4*E_r
    n_points: int = 4096
    dt_per_period: int = 2000
    samples_per_period: int = 20
    t_end_factor: float = 1.45
    t_end: float | None = None        # auto: t_end_factor * T_guess
    mass: float = scaling.CESIUM_MASS
    gravity: float = scaling.G_STANDARD
    omega: float = _CESIUM_OMEGA      # lab drive angular frequency, rad/s
    seed: int = 0                     # used only by synthetic-signal tests
    workers: int = 1


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _parse_float(text: str) -> float:
    v = float(text)
    if not np.isfinite(v):
        raise ValueError("value must be finite")
    return v


def _parse_positive(text: str) -> float:
    v = _parse_float(text)
    if v <= 0:
        raise ValueError("value must be > 0")
    return v


def _parse_nonnegative(text: str) -> float:
    v = _parse_float(text)
    if v < 0:
        raise ValueError("value must be >= 0")
    return v


def _parse_auto_positive(text: str):
    if text.strip().lower() == "auto":
        return None
    return _parse_positive(text)


def _parse_auto_float(text: str):
    if text.strip().lower() == "auto":
        return None
    return _parse_float(text)


def _parse_int(text: str, minimum: int = None) -> int:
    v = int(text)
    if minimum is not None and v < minimum:
        raise ValueError(f"value must be >= {minimum}")
    return v


def _parse_n_points(text: str) -> int:
    v = int(text)
    if v < 256 or (v & (v - 1)) != 0:
        raise ValueError("n_points must be a power of two >= 256")
    return v


def _parse_model(text: str) -> str:
    v = text.strip().lower()
    if v not in ("numeric", "triangular"):
        raise ValueError("model must be 'numeric' or 'triangular'")
    return v


def _parse_lambda_list(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if not parts or any(p == "" for p in parts):
        raise ValueError("lambda must be a comma-separated list of numbers")
    vals = tuple(_parse_nonnegative(p) for p in parts)
    return vals


# config key -> (dataclass field, value parser)
_KEY_TABLE = {
    "model": ("model", _parse_model),
    "kbar": ("kbar", _parse_positive),
    "V0": ("V0", _parse_nonnegative),
    "kappa": ("kappa", _parse_positive),
    "E_r": ("E_r", _parse_positive),
    "z0": ("z0", _parse_auto_float),
    "sigma": ("sigma", _parse_auto_positive),
    "p0": ("p0", _parse_float),
    "lambda": ("lambdas", _parse_lambda_list),
    "x_min": ("x_min", _parse_float),
    "x_max": ("x_max", _parse_auto_float),
    "n_points": ("n_points", _parse_n_points),
    "dt_per_period": ("dt_per_period", lambda t: _parse_int(t, 1)),
    "samples_per_period": ("samples_per_period", lambda t: _parse_int(t, 1)),
    "t_end_factor": ("t_end_factor", _parse_positive),
    "t_end": ("t_end", _parse_auto_positive),
    "mass": ("mass", _parse_positive),
    "gravity": ("gravity", _parse_positive),
    "omega": ("omega", _parse_positive),
    "seed": ("seed", lambda t: _parse_int(t)),
    "workers": ("workers", lambda t: _parse_int(t, 1)),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in _KEY_TABLE.items()}


def parse_config(text: str) -> RunConfig:
    """Parse flat key=value text into a RunConfig (defaults applied).

    Raises:
        ConfigError: unknown key, duplicate key, unparseable value or a
            violated cross-field invariant, each with its line number.
    """
    values = {}
    seen_lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}",
                              line=lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEY_TABLE:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in seen_lines:
            raise ConfigError(
                f"duplicate key {key!r} (first set on line {seen_lines[key]})",
                line=lineno)
        seen_lines[key] = lineno
        field_name, parser = _KEY_TABLE[key]
        try:
            values[field_name] = parser(value)
        except (ValueError, TypeError) as err:
            raise ConfigError(f"bad value for {key!r}: {err}", line=lineno) from err
    cfg = RunConfig(**values)
    if cfg.x_max is not None and cfg.x_max <= cfg.x_min:
        raise ConfigError("x_max must exceed x_min",
                          line=seen_lines.get("x_max"))
    return cfg


def _render_value(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ",".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_config(cfg: RunConfig) -> str:
    """Canonical echo of a RunConfig; parse_config(render_config(c)) == c."""
    lines = ["# resolved qbounce configuration"]
    for f in fields(RunConfig):
        lines.append(f"{_FIELD_TO_KEY[f.name]} = {_render_value(getattr(cfg, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# shared plumbing
# ---------------------------------------------------------------------------

def _build_model(cfg: RunConfig) -> spectrum.SpectrumModel:
    if cfg.model == "triangular":
        return spectrum.triangular_well(cfg.kbar)
    return spectrum.numeric_action(cfg.kbar, cfg.V0, cfg.kappa)


def _packet_energy(cfg: RunConfig) -> float:
    if cfg.z0 is not None:
        return float(spectrum.static_potential(cfg.z0, cfg.V0, cfg.kappa))
    return cfg.E_r


def _sim_config(cfg: RunConfig) -> analysis.SimConfig:
    return analysis.SimConfig(
        n_points=cfg.n_points, x_min=cfg.x_min, x_max=cfg.x_max,
        dt_per_period=cfg.dt_per_period,
        samples_per_period=cfg.samples_per_period,
        t_end_factor=cfg.t_end_factor, t_end=cfg.t_end,
        sigma=cfg.sigma, p0=cfg.p0)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _write_kv(path: Path, pairs):
    with open(path, "w", newline="\n") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {value}\n")


def _write_meta(out_dir: Path, cfg: RunConfig, duration: float, tags):
    import scipy
    pairs = [
        ("duration_s", f"{duration:.3f}"),
        ("qbounce_version", _version()),
        ("python", platform.python_version()),
        ("numpy", np.__version__),
        ("scipy", scipy.__version__),
        ("spectrum_model", _build_model(cfg).kind),
        ("propagator", "strang-split spectral"),
    ]
    pairs.extend(tags)
    _write_kv(out_dir / "run.meta", pairs)


def _version() -> str:
    from . import __version__
    return __version__


def _prepare_out(args, cfg: RunConfig, required: bool) -> Path:
    if args.out is None:
        if required:
            raise ConfigError(f"{args.command} requires --out DIR")
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config_resolved.cfg").write_text(render_config(cfg), encoding="utf-8")
    return out


def _print_table(header, rows):
    widths = [max(len(str(h)), *(len(r[i]) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(header)]
    print("  ".join(str(h).ljust(w) for h, w in zip(header, widths)).rstrip())
    for r in rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_units(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    units = scaling.derive_units(cfg.mass, cfg.gravity, cfg.omega)
    E_r = _packet_energy(cfg)
    pairs = [
        ("mass_kg", _fmt(cfg.mass)),
        ("gravity_m_s2", _fmt(cfg.gravity)),
        ("omega_rad_s", _fmt(cfg.omega)),
        ("length_scale_m", _fmt(units.length_scale)),
        ("time_scale_s", _fmt(units.time_scale)),
        ("energy_scale_J", _fmt(units.energy_scale)),
        ("kbar", _fmt(units.kbar)),
        ("E_r_dimensionless", _fmt(E_r)),
        ("E_r_J", _fmt(E_r * units.energy_scale)),
        ("drop_height_m", _fmt(scaling.to_lab_position(E_r, units))),
    ]
    _print_table(("quantity", "value"), [(k, v) for k, v in pairs])
    out = _prepare_out(args, cfg, required=False)
    if out is not None:
        with open(out / "units.csv", "w", newline="\n") as fh:
            fh.write("quantity,value\n")
            for k, v in pairs:
                fh.write(f"{k},{v}\n")
        _write_meta(out, cfg, time.perf_counter() - t0, [])
    return 0


def _cmd_spectrum(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    model = _build_model(cfg)
    E_r = _packet_energy(cfg)
    n_center = int(np.floor(spectrum.level_from_energy(model, E_r) + 0.5))
    n_lo = max(1, n_center - 5)
    recs = []
    for n in range(n_lo, n_center + 6):
        E = spectrum.energy(model, n)
        d1, d2 = spectrum.derivatives(model, n)
        recs.append((n, E, d1, d2))
    rows = [(str(n), _fmt(E), _fmt(d1), _fmt(d2)) for n, E, d1, d2 in recs]
    print(f"# {model.kind}, kbar = {model.kbar:g}, around E = {E_r:g} "
          f"(level {n_center})")
    _print_table(("n", "E", "dE_dn", "d2E_dn2"), rows)
    out = _prepare_out(args, cfg, required=False)
    if out is not None:
        with open(out / "spectrum.csv", "w", newline="\n") as fh:
            fh.write("n,E,dE_dn,d2E_dn2\n")
            for r in rows:
                fh.write(",".join(r) + "\n")
        _write_meta(out, cfg, time.perf_counter() - t0, [])
    return 0


def _predictions(cfg: RunConfig):
    """Per-lambda analytic predictions: (lambda, general, bouncer, simple).

    The general formula uses the configured spectrum model; the two bouncer
    forms are closed-form statements about the hard-wall spectrum and always
    use the triangular resonance center.  Formula-level singularities turn
    into None entries rather than aborting the table.
    """
    model = _build_model(cfg)
    E_r = _packet_energy(cfg)
    tri = spectrum.triangular_well(cfg.kbar)
    e_n_tri = resonance.resonance_center(tri, resonance.select_resonance(tri, E_r))
    recs = []
    for lam in cfg.lambdas:
        ctx = resonance.build_context(model, E_r, lam)
        preds = []
        for make in (
                lambda: resonance.revival_time_general(ctx, lam),
                lambda: resonance.revival_time_bouncer(E_r, e_n_tri, lam, cfg.kbar),
                lambda: resonance.revival_time_bouncer_simple(E_r, e_n_tri, lam, cfg.kbar)):
            try:
                preds.append(make())
            except QbounceError:
                preds.append(None)
        recs.append((lam, ctx, *preds))
    return recs


def _cmd_predict(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    recs = _predictions(cfg)

    def ratio(p):
        return _fmt(p.ratio) if p is not None else "nan"

    def t_lam(p):
        return _fmt(p.T_lambda) if p is not None else "nan"

    rows = []
    for lam, ctx, general, bouncer, simple in recs:
        T0 = resonance.t_zero(ctx)
        rows.append((_fmt(lam), _fmt(T0), t_lam(general), ratio(general),
                     ratio(bouncer), ratio(simple)))
    print(f"# E_r = {_packet_energy(cfg):g}, model = {_build_model(cfg).kind}; "
          "ratios are T_lambda/T0 per formula")
    _print_table(("lambda", "T0", "T_general", "ratio_general",
                  "ratio_bouncer", "ratio_simple"), rows)
    out = _prepare_out(args, cfg, required=False)
    if out is not None:
        with open(out / "predict.csv", "w", newline="\n") as fh:
            fh.write("lambda,T0,T_general,ratio_general,T_bouncer,ratio_bouncer,"
                     "T_simple,ratio_simple\n")
            for (lam, ctx, general, bouncer, simple) in recs:
                fh.write(",".join([
                    _fmt(lam), _fmt(resonance.t_zero(ctx)),
                    t_lam(general), ratio(general),
                    t_lam(bouncer), ratio(bouncer),
                    t_lam(simple), ratio(simple)]) + "\n")
        _write_meta(out, cfg, time.perf_counter() - t0, [])
    return 0


def _cmd_simulate(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    if len(cfg.lambdas) != 1:
        raise ConfigError(
            f"simulate needs exactly one lambda, got {len(cfg.lambdas)} "
            "(set 'lambda = <value>' or pass --lambda)")
    lam = cfg.lambdas[0]
    model = _build_model(cfg)
    E_r = _packet_energy(cfg)
    sim = _sim_config(cfg)
    out = _prepare_out(args, cfg, required=True)
    resolved = analysis.resolve_run(model, E_r, lam, sim)
    series = analysis.run_single(model, E_r, lam, sim)
    analysis.write_series_csv(series, out / "autocorrelation.csv")
    figures.render_autocorrelation(
        series, out / "autocorrelation.png", t_cl=resolved["t_cl"],
        title=f"E_r = {E_r:g}, lambda = {lam:g}")
    print(f"samples: {len(series.times)}  t_end: {series.times[-1]:.6g}  "
          f"norm_error: {series.norm_error:.3e}")
    # extraction here is a convenience report; the CSV is the product
    revival_tag = "none"
    try:
        est = analysis.extract_revival(series, resolved["t_guess"],
                                       smoothing_width=resolved["t_cl"])
        revival_tag = _fmt(est.T_rev)
        print(f"revival near t = {est.T_rev:.6g} "
              f"(guess {resolved['t_guess']:.6g}, T0 {resolved['t0']:.6g})")
    except QbounceError as err:
        print(f"revival: not detected ({err})")
    _write_meta(out, cfg, time.perf_counter() - t0, [
        ("lambda", _fmt(lam)),
        ("E_r", _fmt(E_r)),
        ("T_cl", _fmt(resolved["t_cl"])),
        ("T0", _fmt(resolved["t0"])),
        ("T_guess", _fmt(resolved["t_guess"])),
        ("dt", _fmt(resolved["dt"])),
        ("sample_interval", _fmt(resolved["sample_interval"])),
        ("sigma", _fmt(resolved["sigma"])),
        ("x0", _fmt(resolved["x0"])),
        ("norm_error", _fmt(series.norm_error)),
        ("boundary_max", _fmt(series.boundary_max)),
        ("complete", str(series.complete)),
        ("T_rev_extracted", revival_tag),
    ])
    print(f"wrote {out / 'autocorrelation.csv'}")
    return 0


def _cmd_sweep(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    model = _build_model(cfg)
    E_r = _packet_energy(cfg)
    sim = _sim_config(cfg)
    out = _prepare_out(args, cfg, required=True)
    workers = args.workers if getattr(args, "workers", None) else cfg.workers
    rows = analysis.sweep(model, E_r, cfg.lambdas, sim, workers=workers)
    analysis.write_sweep_csv(rows, out / "sweep.csv")
    figures.render_sweep(rows, out / "sweep.png",
                         title=f"E_r = {E_r:g}, model = {model.kind}")
    _print_table(
        ("lambda", "ratio_numeric", "ratio_general", "ratio_simple", "status"),
        [(_fmt(r.lam), _fmt(r.ratio_numeric), _fmt(r.ratio_analytic_general),
          _fmt(r.ratio_analytic_simple), r.status) for r in rows])
    tags = [("E_r", _fmt(E_r)), ("workers", str(workers)),
            ("rows_ok", str(sum(r.status == "ok" for r in rows)))]
    try:
        slope, r2 = analysis.quadratic_fit(rows)
        print(f"deficit fit: (1 - ratio) = {slope:.6g} * lambda^2, r^2 = {r2:.4f}")
        tags += [("fit_slope", _fmt(slope)), ("fit_r_squared", _fmt(r2))]
    except QbounceError as err:
        print(f"deficit fit unavailable: {err}")
    _write_meta(out, cfg, time.perf_counter() - t0, tags)
    print(f"wrote {out / 'sweep.csv'}")
    if all(r.status != "ok" for r in rows):
        print("all sweep rows failed", file=sys.stderr)
        return 3
    return 0


def _cmd_compare(cfg: RunConfig, args) -> int:
    t0 = time.perf_counter()
    out = _prepare_out(args, cfg, required=True)
    sweep_path = out / "sweep.csv"
    if not sweep_path.is_file():
        raise ConfigError(f"no sweep.csv in {out}; run the sweep subcommand first")
    rows = analysis.read_sweep_csv(sweep_path)
    with open(out / "compare.csv", "w", newline="\n") as fh:
        fh.write("lambda,ratio_numeric,ratio_analytic_general,ratio_analytic_simple\n")
        for r in rows:
            fh.write(f"{_fmt(r.lam)},{_fmt(r.ratio_numeric)},"
                     f"{_fmt(r.ratio_analytic_general)},{_fmt(r.ratio_analytic_simple)}\n")
    curves = (("numeric", "ratio_numeric"),
              ("general", "ratio_analytic_general"),
              ("simple", "ratio_analytic_simple"))
    for name, attr in curves:
        with open(out / f"curve_{name}.dat", "w", newline="\n") as fh:
            for r in rows:
                y = getattr(r, attr)
                if np.isfinite(y):
                    fh.write(f"{_fmt(r.lam)} {_fmt(y)}\n")
    figures.render_sweep(rows, out / "compare.png", title="numeric vs analytic")
    _print_table(
        ("lambda", "ratio_numeric", "ratio_general", "ratio_simple"),
        [(_fmt(r.lam), _fmt(r.ratio_numeric), _fmt(r.ratio_analytic_general),
          _fmt(r.ratio_analytic_simple)) for r in rows])
    _write_meta(out, cfg, time.perf_counter() - t0,
                [("rows", str(len(rows)))])
    print(f"wrote {out / 'compare.csv'} and curve_*.dat")
    return 0


_COMMANDS = {
    "units": _cmd_units,
    "spectrum": _cmd_spectrum,
    "predict": _cmd_predict,
    "simulate": _cmd_simulate,
    "sweep": _cmd_sweep,
    "compare": _cmd_compare,
}


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    """argparse that raises ConfigError instead of calling sys.exit(2)."""

    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="qbounce",
                     description="Revival times of a driven bouncing wave packet.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("units", "lab -> dimensionless conversion report"),
            ("spectrum", "level energies and derivatives around E_r"),
            ("predict", "analytic revival-time predictions"),
            ("simulate", "single TDSE run (one lambda)"),
            ("sweep", "lambda sweep with numeric extraction"),
            ("compare", "merge sweep output into comparison files")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="key=value config file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--lambda", dest="lambda_override", metavar="LIST",
                       help="override the lambda list, e.g. '0,0.1,0.25'")
        p.add_argument("--er", dest="er_override", metavar="VALUE",
                       help="override the packet energy E_r")
        if name == "sweep":
            p.add_argument("--workers", type=int, default=None, metavar="N",
                           help="parallel sweep workers (default from config)")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {}
    if args.lambda_override is not None:
        try:
            overrides["lambdas"] = _parse_lambda_list(args.lambda_override)
        except ValueError as err:
            raise ConfigError(f"bad --lambda: {err}") from err
    if args.er_override is not None:
        try:
            overrides["E_r"] = _parse_positive(args.er_override)
        except ValueError as err:
            raise ConfigError(f"bad --er: {err}") from err
        overrides["z0"] = None  # --er takes back precedence from any config z0
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    return cfg


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](cfg, args)
    except QbounceError as err:
        print(f"error: {err}", file=sys.stderr)
        return exit_code_for(err)


if __name__ == "__main__":
    sys.exit(main())
