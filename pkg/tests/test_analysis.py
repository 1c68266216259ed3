import math
import warnings

import numpy as np
import pytest

from qbounce import analysis, resonance, spectrum, tdse
from qbounce.errors import (DetectionError, DomainError, FitError,
                            NoRevivalError)

TRI = spectrum.triangular_well(1.0)
NUM = spectrum.numeric_action(1.0, 1.0, 1.0)


def synthetic_series(t0, t_cl, sigma_m=5.0, t_end=None, spp=20, phase0=0.0,
                     detune=1.001):
    """Quadratic-phase toy autocorrelation with known revival time t0.

    A(t) = sum_m w_m exp(-i(omega_1 m t + omega_2 m^2 t / 2)) with Gaussian
    weights of width sigma_m; omega_2 = 4*pi/t0 makes the phases realign at
    t0 exactly.  The recurrence period is detuned slightly from the sampling
    comb, as the analytic-vs-numeric period mismatch does in real runs.
    """
    si = t_cl / spp
    if t_end is None:
        t_end = 1.6 * t0
    times = np.arange(0.0, t_end + 0.5 * si, si)
    half = int(np.ceil(4.0 * sigma_m))
    m = np.arange(-half, half + 1)
    w = np.exp(-(m**2) / (2.0 * sigma_m**2))
    w /= w.sum()
    om1 = 2.0 * np.pi / (t_cl * detune)
    om2 = 4.0 * np.pi / t0
    phases = (om1 * m[None, :] * times[:, None]
              + 0.5 * om2 * (m**2)[None, :] * times[:, None]
              + phase0 * m[None, :])
    values = (w[None, :] * np.exp(-1j * phases)).sum(axis=1)
    return tdse.AutocorrelationSeries(times=times, values=values,
                                      sample_interval=si)


# ---------------------------------------------------------------------------
# revival extraction
# ---------------------------------------------------------------------------

def test_extract_revival_on_clean_signal():
    s = synthetic_series(t0=12000.0, t_cl=25.0, sigma_m=4.0)
    est = analysis.extract_revival(s, T_guess=12000.0, smoothing_width=25.0)
    assert abs(est.T_rev - 12000.0) / 12000.0 < 2e-3
    assert est.peak_value > 0.5
    assert est.search_window == (0.7 * 12000.0, 1.3 * 12000.0)


def test_extract_revival_random_profiles(rng):
    # the revival plateau has width ~t0/(2*pi*sigma_m^2), which bounds how
    # precisely any envelope statistic can pin the peak
    for _ in range(20):
        t_cl = rng.uniform(5.0, 50.0)
        t0 = t_cl * rng.uniform(300.0, 800.0)
        sigma_m = rng.uniform(3.0, 5.5)
        s = synthetic_series(
            t0, t_cl, sigma_m=sigma_m, phase0=rng.uniform(0.0, 2.0 * np.pi),
            detune=1.0 + rng.uniform(5e-4, 3e-3) * rng.choice([-1.0, 1.0]))
        est = analysis.extract_revival(s, T_guess=t0 * rng.uniform(0.88, 1.12),
                                       smoothing_width=t_cl)
        rel = abs(est.T_rev - t0) / t0
        assert rel < 0.4 / sigma_m**2
        assert rel < 5e-3


def test_extract_revival_finds_its_own_smoothing_width():
    s = synthetic_series(t0=15000.0, t_cl=30.0, sigma_m=4.0)
    est = analysis.extract_revival(s, T_guess=15000.0)
    assert abs(est.T_rev - 15000.0) / 15000.0 < 2e-3
    assert est.smoothing_width == pytest.approx(30.0, rel=0.01)


def test_extract_revival_requires_coverage():
    s = synthetic_series(t0=10000.0, t_cl=25.0, t_end=1.2 * 10000.0)
    with pytest.raises(NoRevivalError, match="does not cover"):
        analysis.extract_revival(s, T_guess=10000.0, smoothing_width=25.0)


def test_extract_revival_noise_floor():
    # featureless |A|: envelope peak cannot clear 2x the window median
    times = np.arange(0.0, 1500.0, 1.0)
    flat = tdse.AutocorrelationSeries(times=times,
                                      values=np.ones(len(times), complex),
                                      sample_interval=1.0)
    with pytest.raises(NoRevivalError, match="noise floor"):
        analysis.extract_revival(flat, T_guess=1000.0, smoothing_width=20.0)


def test_extract_revival_rejects_bad_guess():
    s = synthetic_series(t0=10000.0, t_cl=25.0)
    with pytest.raises(DetectionError):
        analysis.extract_revival(s, T_guess=0.0, smoothing_width=25.0)


# ---------------------------------------------------------------------------
# classical-period extraction
# ---------------------------------------------------------------------------

def test_extract_classical_period():
    s = synthetic_series(t0=20000.0, t_cl=25.0, sigma_m=6.0)
    assert analysis.extract_classical_period(s) == pytest.approx(25.0, rel=5e-3)


def test_extract_classical_period_needs_enough_cycles():
    s = synthetic_series(t0=100.0, t_cl=40.0, t_end=80.0)
    with pytest.raises(DetectionError):
        analysis.extract_classical_period(s)


def test_extract_classical_period_needs_a_line():
    times = np.arange(0.0, 500.0, 0.5)
    flat = tdse.AutocorrelationSeries(times=times,
                                      values=np.full(len(times), 0.3 + 0j),
                                      sample_interval=0.5)
    with pytest.raises(DetectionError):
        analysis.extract_classical_period(flat)


# ---------------------------------------------------------------------------
# run resolution
# ---------------------------------------------------------------------------

def test_resolve_run_defaults():
    r = analysis.resolve_run(NUM, 104.1, 0.0, analysis.SimConfig())
    assert r["x_max"] == pytest.approx(4.0 * 104.1)
    assert r["t_guess"] == pytest.approx(r["t0"], rel=1e-12)
    assert r["t_end"] == pytest.approx(1.45 * r["t0"], rel=1e-12)
    assert r["dt"] == pytest.approx(r["t_cl"] / 2000.0, rel=1e-12)
    assert r["sample_interval"] == pytest.approx(r["t_cl"] / 20.0, rel=1e-12)
    # release point: outer turning point of the static potential
    assert float(spectrum.static_potential(r["x0"], 1.0, 1.0)) == \
        pytest.approx(104.1, rel=1e-12)
    # default width spans r^(1/3)/2 levels
    ctx = r["ctx"]
    assert r["sigma"] == pytest.approx(
        0.5 * ctx.r ** (1.0 / 3.0) * ctx.E_r1
        / (1.0 - np.exp(-r["x0"])), rel=1e-12)


def test_resolve_run_honors_overrides():
    sim = analysis.SimConfig(x_max=200.0, sigma=2.5, t_end=1234.0)
    r = analysis.resolve_run(NUM, 104.1, 0.0, sim)
    assert r["x_max"] == 200.0
    assert r["sigma"] == 2.5
    assert r["t_end"] == 1234.0


def test_resolve_run_uses_driven_guess_when_sane():
    ctx = resonance.build_context(TRI, 104.1, 0.2)
    pred = resonance.revival_time_general(ctx, 0.2)
    r = analysis.resolve_run(TRI, 104.1, 0.2, analysis.SimConfig())
    assert r["t_guess"] == pytest.approx(pred.T_lambda, rel=1e-12)


# ---------------------------------------------------------------------------
# sweep orchestration (synthetic runner)
# ---------------------------------------------------------------------------

def _synthetic_runner(model, E_r, lam, sim):
    """Stands in for run_single: revival exactly at the general prediction."""
    r = analysis.resolve_run(model, E_r, lam, sim)
    pred = resonance.revival_time_general(r["ctx"], lam)
    return synthetic_series(pred.T_lambda, r["t_cl"], sigma_m=5.0,
                            t_end=r["t_end"],
                            spp=round(r["t_cl"] / r["sample_interval"]))


def test_sweep_recovers_known_quadratic_law():
    lams = (0.0, 0.1, 0.2, 0.25)
    rows = analysis.sweep(TRI, 70.28, lams, analysis.SimConfig(),
                          run_fn=_synthetic_runner)
    assert [row.status for row in rows] == ["ok"] * 4
    for row in rows:
        assert row.ratio_numeric == pytest.approx(
            row.ratio_analytic_general, abs=5e-3)
    slope, r2 = analysis.quadratic_fit(rows)
    ctx = resonance.build_context(TRI, 70.28, 0.25)
    expected = (1.0 - resonance.revival_time_general(ctx, 0.25).ratio) / 0.25**2
    assert slope == pytest.approx(expected, rel=0.05)
    assert r2 > 0.99


def test_sweep_simple_ratio_uses_hard_wall_form():
    rows = analysis.sweep(TRI, 70.28, (0.25,), analysis.SimConfig(),
                          run_fn=_synthetic_runner)
    E_N = resonance.resonance_center(TRI, 4)
    pred = resonance.revival_time_bouncer_simple(70.28, E_N, 0.25)
    assert rows[0].ratio_analytic_simple == pytest.approx(pred.ratio, rel=1e-12)
    # the same closed form regardless of the sweep's spectrum model
    rows_num = analysis.sweep(NUM, 70.28, (0.25,), analysis.SimConfig(),
                              run_fn=_synthetic_runner)
    assert rows_num[0].ratio_analytic_simple == pytest.approx(pred.ratio,
                                                              rel=1e-12)


def test_sweep_records_runner_failures():
    def broken(model, E_r, lam, sim):
        raise tdse.InstabilityError("blew up")

    rows = analysis.sweep(TRI, 70.28, (0.0, 0.1), analysis.SimConfig(),
                          run_fn=broken)
    assert [row.status for row in rows] == ["failed:InstabilityError"] * 2
    assert all(math.isnan(row.T_numeric) for row in rows)
    assert all(math.isnan(row.ratio_numeric) for row in rows)
    # analytic columns survive a numeric failure
    assert np.isfinite(rows[1].ratio_analytic_general)


def test_sweep_keep_series():
    rows, series = analysis.sweep(TRI, 70.28, (0.0,), analysis.SimConfig(),
                                  run_fn=_synthetic_runner, keep_series=True)
    assert len(series) == 1
    assert isinstance(series[0], tdse.AutocorrelationSeries)


def test_sweep_validates_lambda_list():
    with pytest.raises(DomainError):
        analysis.sweep(TRI, 70.28, (), analysis.SimConfig())
    with pytest.raises(DomainError):
        analysis.sweep(TRI, 70.28, (0.1, -0.2), analysis.SimConfig())


def test_sweep_parallel_matches_serial():
    # real (tiny) runs through both code paths must agree row for row
    sim = analysis.SimConfig(n_points=256, x_max=40.0, dt_per_period=300)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        serial = analysis.sweep(NUM, 20.0, (0.0, 0.1), sim, workers=1)
        parallel = analysis.sweep(NUM, 20.0, (0.0, 0.1), sim, workers=2)
    assert serial == parallel
    assert all(row.status == "ok" for row in serial)


# ---------------------------------------------------------------------------
# quadratic fit
# ---------------------------------------------------------------------------

def _row(lam, ratio):
    return analysis.SweepRow(lam=lam, T_numeric=ratio * 100.0,
                             T_analytic_general=np.nan,
                             T_analytic_simple=np.nan,
                             ratio_numeric=ratio,
                             ratio_analytic_general=np.nan,
                             ratio_analytic_simple=np.nan, status="ok")


def test_quadratic_fit_exact_recovery():
    rows = [_row(lam, 1.0 - 3.0 * lam**2) for lam in (0.0, 0.1, 0.2, 0.3)]
    slope, r2 = analysis.quadratic_fit(rows)
    assert slope == pytest.approx(3.0, rel=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_quadratic_fit_ignores_nan_rows():
    rows = [_row(lam, 1.0 - 2.0 * lam**2) for lam in (0.0, 0.1, 0.2)]
    rows.append(_row(0.3, float("nan")))
    slope, _ = analysis.quadratic_fit(rows)
    assert slope == pytest.approx(2.0, rel=1e-12)


def test_quadratic_fit_needs_three_lambdas():
    with pytest.raises(FitError):
        analysis.quadratic_fit([_row(0.0, 1.0), _row(0.1, 0.98)])
    with pytest.raises(FitError):
        analysis.quadratic_fit([_row(0.1, 0.9), _row(0.1, 0.91),
                                _row(0.1, 0.92)])


# ---------------------------------------------------------------------------
# CSV round trips
# ---------------------------------------------------------------------------

def test_sweep_csv_round_trip(tmp_path):
    rows = [
        analysis.SweepRow(lam=0.0, T_numeric=29396.7, T_analytic_general=28955.6,
                          T_analytic_simple=28955.6, ratio_numeric=1.0152,
                          ratio_analytic_general=1.0, ratio_analytic_simple=1.0,
                          status="ok"),
        analysis.SweepRow(lam=0.1, T_numeric=float("nan"),
                          T_analytic_general=float("nan"),
                          T_analytic_simple=26000.0,
                          ratio_numeric=float("nan"),
                          ratio_analytic_general=float("nan"),
                          ratio_analytic_simple=0.941,
                          status="failed:NoRevivalError"),
    ]
    path = tmp_path / "sweep.csv"
    analysis.write_sweep_csv(rows, path)
    back = analysis.read_sweep_csv(path)
    assert len(back) == 2
    assert back[0] == rows[0]
    assert back[1].status == "failed:NoRevivalError"
    assert math.isnan(back[1].T_numeric)
    assert back[1].ratio_analytic_simple == pytest.approx(0.941)


def test_series_csv_format(tmp_path):
    s = synthetic_series(t0=500.0, t_cl=25.0, t_end=100.0)
    path = tmp_path / "auto.csv"
    analysis.write_series_csv(s, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,re_A,im_A,abs_A2"
    assert len(lines) == len(s.times) + 1
    t, re, im, a2 = (float(v) for v in lines[1].split(","))
    assert (t, re, im) == (0.0, pytest.approx(s.values[0].real),
                           pytest.approx(s.values[0].imag))
    assert a2 == pytest.approx(abs(s.values[0]) ** 2)
