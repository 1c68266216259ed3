"""Signal analysis and sweep orchestration.

Turns raw autocorrelation series into classical periods and revival times,
runs lambda-sweeps against the analytic predictions, and writes the
comparison CSVs.
"""

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d

from . import resonance, spectrum, tdse
from .errors import (DetectionError, DomainError, FitError, NoRevivalError,
                     QbounceError, ResonanceSingularityError)

# Deterministic descending ladder of revival-time guesses, as fractions of
# the first guess.  The general formula's guess is only trustworthy for
# small deficits; when the true revival sits far below it (strong driving,
# packet inside the resonance island) the later rungs still cover ratios
# down to ~0.35 of T0 with overlapping windows.
_GUESS_LADDER = (1.0, 0.8, 0.65, 0.5)


@dataclass(frozen=True)
class RevivalEstimate:
    """A numerically extracted revival."""

    T_rev: float
    peak_value: float  # envelope of |A|^2 at the revival
    search_window: tuple
    smoothing_width: float


@dataclass(frozen=True)
class SweepRow:
    """One lambda point of a sweep; times are NaN when extraction failed."""

    lam: float
    T_numeric: float
    T_analytic_general: float
    T_analytic_simple: float
    ratio_numeric: float
    ratio_analytic_general: float
    ratio_analytic_simple: float
    status: str


@dataclass(frozen=True)
class SimConfig:
    """Numerical settings for one TDSE run; 'auto' fields resolve per E_r."""

    n_points: int = 4096
    x_min: float = -10.0
    x_max: float | None = None        # default 4*E_r
    dt_per_period: int = 2000         # dt = T_cl / dt_per_period
    samples_per_period: int = 20      # sample_interval = T_cl / samples_per_period
    t_end_factor: float = 1.45        # t_end = factor * T_guess
    t_end: float | None = None        # overrides the factor policy when set
    sigma: float | None = None        # default: packet spans r^(1/3)/2 levels
    p0: float = 0.0


def resolve_run(model: spectrum.SpectrumModel, E_r: float, lam: float,
                sim: SimConfig) -> dict:
    """Resolve 'auto' settings into concrete run parameters.

    T_cl comes from the analytic context; the initial position is the outer
    turning point of the static potential at energy E_r (packet released at
    rest unless p0 is set).

    The default width makes the packet span ~r^(1/3)/2 levels.  At that
    width the third-order spectral phase accumulated by one revival time is
    ~0.35 rad whatever the energy, so the T0 revival stays sharp; much wider
    packets (e.g. a width of order sqrt(T_cl)) dephase cubically and the
    revival never forms.
    """
    ctx = resonance.build_context(model, E_r, lam)
    t_cl = resonance.classical_period(ctx)
    t0 = resonance.t_zero(ctx)
    guess = t0
    try:
        pred = resonance.revival_time_general(ctx, lam)
        if 0.35 * t0 <= pred.T_lambda <= 1.05 * t0:
            guess = pred.T_lambda
    except ResonanceSingularityError:
        pass
    x_max = sim.x_max if sim.x_max is not None else 4.0 * E_r
    x0 = _outer_turning_point(E_r, model.V0, model.kappa)
    if sim.sigma is not None:
        sigma = sim.sigma
    else:
        # sigma_n levels at spacing E', mapped to length via the potential
        # slope at the release point
        sigma_n = 0.5 * ctx.r ** (1.0 / 3.0)
        slope = 1.0 - model.kappa * model.V0 * np.exp(-model.kappa * x0)
        sigma = float(sigma_n * ctx.E_r1 / abs(slope))
    t_end = sim.t_end if sim.t_end is not None else sim.t_end_factor * guess
    return dict(ctx=ctx, t_cl=t_cl, t0=t0, t_guess=guess, x_max=x_max,
                sigma=sigma, t_end=t_end, x0=x0,
                dt=t_cl / sim.dt_per_period,
                sample_interval=t_cl / sim.samples_per_period)


def _outer_turning_point(E: float, V0: float, kappa: float) -> float:
    from .spectrum import _turning_points
    return _turning_points(E, V0, kappa)[1]


def run_single(model: spectrum.SpectrumModel, E_r: float, lam: float,
               sim: SimConfig) -> tdse.AutocorrelationSeries:
    """One TDSE run with resolved settings; returns the recorded series."""
    r = resolve_run(model, E_r, lam, sim)
    grid = tdse.Grid(x_min=sim.x_min, x_max=r["x_max"], n_points=sim.n_points)
    drive = tdse.DriveSpec(lam=lam, V0=model.V0, kappa=model.kappa,
                           kbar=model.kbar)
    psi0 = tdse.init_gaussian(grid, x0=r["x0"], sigma=r["sigma"], p0=sim.p0,
                              kbar=model.kbar)
    return tdse.evolve_and_record(psi0, t_end=r["t_end"], dt=r["dt"],
                                  sample_interval=r["sample_interval"],
                                  drive=drive)


def extract_revival(series: tdse.AutocorrelationSeries, T_guess: float,
                    smoothing_width: float | None = None) -> RevivalEstimate:
    """Locate the revival as the recurrence-envelope maximum near T_guess.

    The envelope is the moving *maximum* of |A(t)|^2 over one classical
    period (estimated from the series itself when not given): at a revival
    the bounce recurrences reappear as sharp spikes, so their per-period
    peak height is the right statistic.  (A per-period moving average is
    useless here -- it equals sum |c_n|^4 throughout, revival or not.)
    The envelope maximum is searched in [0.7, 1.3]*T_guess and refined to
    the raw-signal peak within half a period.

    Raises:
        NoRevivalError: series does not cover [0.6, 1.4]*T_guess, or the
            envelope maximum is below 2x the window median (noise floor).
    """
    t = series.times
    if T_guess <= 0:
        raise DetectionError("T_guess must be positive")
    if t[0] > 0.6 * T_guess or t[-1] < 1.4 * T_guess:
        raise NoRevivalError(
            f"series [{t[0]:.4g}, {t[-1]:.4g}] does not cover "
            f"[0.6, 1.4]*T_guess = [{0.6*T_guess:.4g}, {1.4*T_guess:.4g}]")
    if smoothing_width is None:
        smoothing_width = extract_classical_period(series)
    abs2 = np.abs(series.values) ** 2
    w = max(1, int(round(smoothing_width / series.sample_interval)))
    envelope = maximum_filter1d(abs2, size=w, mode="nearest")
    lo, hi = 0.7 * T_guess, 1.3 * T_guess
    sel = np.nonzero((t >= lo) & (t <= hi))[0]
    if len(sel) < 3:
        raise NoRevivalError("fewer than 3 samples in the search window")
    env_win = envelope[sel]
    i_max = int(np.argmax(env_win))
    peak = float(env_win[i_max])
    median = float(np.median(env_win))
    if peak < 2.0 * median:
        raise NoRevivalError(
            f"no revival above the noise floor near T_guess = {T_guess:.5g} "
            f"(envelope peak {peak:.3e} < 2x window median {median:.3e})")
    # the max filter gives a plateau; pin down the raw spike inside it
    j = sel[i_max]
    half = max(1, w // 2)
    a, b = max(0, j - half), min(len(t), j + half + 1)
    j_raw = a + int(np.argmax(abs2[a:b]))
    return RevivalEstimate(T_rev=float(t[j_raw]), peak_value=peak,
                           search_window=(lo, hi),
                           smoothing_width=float(smoothing_width))


def extract_classical_period(series: tdse.AutocorrelationSeries) -> float:
    """Period of the bounce recurrences of |A(t)|^2.

    Takes the dominant line of the power spectrum over an early-time window
    (up to 1024 samples; Hann window, parabolic peak interpolation).

    Raises:
        DetectionError: fewer than ~5 periods covered or no dominant line.
    """
    t = series.times
    abs2 = np.abs(series.values) ** 2
    # early-time window: bounce recurrences are cleanest before the packet
    # collapses, and ~50 periods give ample spectral resolution
    n = min(len(t), 1024)
    if n < 16:
        raise DetectionError("series too short for period extraction")
    sig = abs2[:n] - np.mean(abs2[:n])
    window = np.hanning(n)
    power = np.abs(np.fft.rfft(sig * window)) ** 2
    freqs = np.fft.rfftfreq(n, d=series.sample_interval)
    span = t[n - 1] - t[0]
    # ignore slow trends (collapse/revival envelope): need >= ~3 cycles in window
    valid = freqs > 3.0 / span
    if not np.any(valid):
        raise DetectionError("window too short to resolve any period")
    power_valid = power.copy()
    power_valid[~valid] = 0.0
    i = int(np.argmax(power_valid))
    if power_valid[i] <= 25.0 * np.median(power_valid[valid]):
        raise DetectionError("no dominant spectral line in |A|^2")
    # parabolic refinement on log power
    if 1 <= i < len(power) - 1 and power[i - 1] > 0 and power[i + 1] > 0:
        la, lb, lc = np.log(power[i - 1]), np.log(power[i]), np.log(power[i + 1])
        denom = la - 2.0 * lb + lc
        delta = 0.5 * (la - lc) / denom if denom < 0 else 0.0
    else:
        delta = 0.0
    f_peak = freqs[i] + delta * (freqs[1] - freqs[0])
    period = 1.0 / f_peak
    if span < 5.0 * period:
        raise DetectionError(
            f"series covers only {span / period:.1f} periods (need >= 5)")
    return float(period)


def sweep(model: spectrum.SpectrumModel, E_r: float, lambdas,
          sim: SimConfig, workers: int = 1, run_fn=None,
          keep_series: bool = False):
    """Run the TDSE for each lambda and compare with the analytic formulas.

    Per-lambda failures are recorded in the row's status without aborting
    the sweep.  ``run_fn(model, E_r, lam, sim)`` may be injected (tests use
    a caching wrapper); the default is :func:`run_single`.

    Returns a list of SweepRow; with ``keep_series`` a parallel list of the
    recorded series (None where the run failed) is returned as a second
    element.
    """
    lambdas = list(lambdas)
    if not lambdas:
        raise DomainError("lambda list must be non-empty")
    if any(lam < 0 for lam in lambdas):
        raise DomainError("all lambdas must be >= 0")
    runner = run_fn if run_fn is not None else run_single
    if workers > 1:
        # worker processes always use the default runner (picklable args only)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_one, model, E_r, lam, sim, None)
                       for lam in lambdas]
            results = [f.result() for f in futures]
    else:
        results = [_sweep_one(model, E_r, lam, sim, runner) for lam in lambdas]
    rows = [r for r, _ in results]
    if keep_series:
        return rows, [s for _, s in results]
    return rows


def _sweep_one(model, E_r, lam, sim, runner):
    if runner is None:
        runner = run_single
    r = resolve_run(model, E_r, lam, sim)
    ctx, t0, t_cl, g0 = r["ctx"], r["t0"], r["t_cl"], r["t_guess"]
    t_general = t_simple = float("nan")
    ratio_general = ratio_simple = float("nan")
    try:
        pred = resonance.revival_time_general(ctx, lam)
        t_general, ratio_general = pred.T_lambda, pred.ratio
    except QbounceError:
        pass
    try:
        # the simple bouncer formula is a closed-form statement about the
        # hard-wall spectrum; it always uses the triangular resonance center
        # and its own T0, whatever model the sweep itself runs with
        tri = spectrum.triangular_well(model.kbar)
        e_n_tri = resonance.resonance_center(tri, resonance.select_resonance(tri, E_r))
        pred = resonance.revival_time_bouncer_simple(E_r, e_n_tri, lam,
                                                     kbar=model.kbar)
        t_simple, ratio_simple = pred.T_lambda, pred.ratio
    except QbounceError:
        pass
    series = None
    t_numeric = float("nan")
    status = "ok"
    try:
        series = runner(model, E_r, lam, sim)
        last_err = None
        for rung in _GUESS_LADDER:
            try:
                est = extract_revival(series, rung * g0, smoothing_width=t_cl)
                t_numeric = est.T_rev
                break
            except (NoRevivalError, DetectionError) as err:
                last_err = err
        else:
            raise last_err if last_err is not None else NoRevivalError("empty ladder")
    except QbounceError as err:
        status = f"failed:{type(err).__name__}"
    row = SweepRow(
        lam=lam,
        T_numeric=t_numeric,
        T_analytic_general=t_general,
        T_analytic_simple=t_simple,
        ratio_numeric=t_numeric / t0,
        ratio_analytic_general=ratio_general,
        ratio_analytic_simple=ratio_simple,
        status=status,
    )
    return row, series


def quadratic_fit(rows) -> tuple[float, float]:
    """Least-squares fit of (1 - ratio_numeric) against lambda^2.

    Returns (slope, r_squared).  The fit includes an intercept so a small
    extraction offset at lambda = 0 does not bias the slope.

    Raises:
        FitError: fewer than 3 rows with distinct lambda and finite ratio.
    """
    pts = [(row.lam, 1.0 - row.ratio_numeric) for row in rows
           if np.isfinite(row.ratio_numeric)]
    lams = sorted({p[0] for p in pts})
    if len(lams) < 3:
        raise FitError(f"need >= 3 distinct lambdas with finite ratios, got {len(lams)}")
    x = np.array([p[0] ** 2 for p in pts])
    y = np.array([p[1] for p in pts])
    design = np.column_stack([x, np.ones_like(x)])
    coeff, residual, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 2:
        raise FitError("degenerate design matrix (all lambda^2 equal?)")
    y_fit = design @ coeff
    ss_res = float(np.sum((y - y_fit) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(coeff[0]), r_squared


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

SWEEP_HEADER = ("lambda,T_numeric,T_analytic_general,T_analytic_simple,"
                "ratio_numeric,ratio_analytic_general,ratio_analytic_simple,status")


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def write_sweep_csv(rows, path):
    with open(path, "w", newline="\n") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for row in rows:
            fields = [_fmt(row.lam), _fmt(row.T_numeric),
                      _fmt(row.T_analytic_general), _fmt(row.T_analytic_simple),
                      _fmt(row.ratio_numeric), _fmt(row.ratio_analytic_general),
                      _fmt(row.ratio_analytic_simple), row.status]
            fh.write(",".join(fields) + "\n")


def read_sweep_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.append(SweepRow(
                lam=float(rec["lambda"]),
                T_numeric=float(rec["T_numeric"]),
                T_analytic_general=float(rec["T_analytic_general"]),
                T_analytic_simple=float(rec["T_analytic_simple"]),
                ratio_numeric=float(rec["ratio_numeric"]),
                ratio_analytic_general=float(rec["ratio_analytic_general"]),
                ratio_analytic_simple=float(rec["ratio_analytic_simple"]),
                status=rec["status"]))
    return rows


def write_series_csv(series: tdse.AutocorrelationSeries, path):
    with open(path, "w", newline="\n") as fh:
        fh.write("t,re_A,im_A,abs_A2\n")
        for t, a in zip(series.times, series.values):
            fh.write(f"{_fmt(t)},{_fmt(a.real)},{_fmt(a.imag)},"
                     f"{_fmt(abs(a) ** 2)}\n")
