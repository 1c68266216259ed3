import warnings

import numpy as np
import pytest

from qbounce import tdse
from qbounce.errors import ConfigError, DomainError

DRIVE0 = tdse.DriveSpec()


def _packet(n_points=512, x_max=60.0, x0=20.0, sigma=1.0, p0=0.0):
    grid = tdse.Grid(x_min=-10.0, x_max=x_max, n_points=n_points)
    return tdse.init_gaussian(grid, x0=x0, sigma=sigma, p0=p0)


# ---------------------------------------------------------------------------
# grid and packet construction
# ---------------------------------------------------------------------------

def test_grid_geometry():
    g = tdse.Grid(-10.0, 54.0, 256)
    assert g.dx == pytest.approx(0.25)
    x = g.positions()
    assert len(x) == 256
    assert x[0] == -10.0
    assert x[-1] == pytest.approx(54.0 - g.dx)
    k = g.wavenumbers()
    assert np.max(np.abs(k)) == pytest.approx(np.pi / g.dx)


@pytest.mark.parametrize("kwargs", [
    dict(x_min=1.0, x_max=1.0, n_points=256),
    dict(x_min=0.0, x_max=10.0, n_points=128),    # too few points
    dict(x_min=0.0, x_max=10.0, n_points=1000),   # not a power of two
])
def test_grid_validation(kwargs):
    with pytest.raises(DomainError):
        tdse.Grid(**kwargs)


def test_init_gaussian_normalized_and_centered():
    psi = _packet(sigma=1.5, p0=3.0)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert psi.mean_position() == pytest.approx(20.0, abs=1e-9)


def test_init_gaussian_rejects_bad_geometry():
    grid = tdse.Grid(-10.0, 60.0, 256)
    with pytest.raises(ConfigError):
        tdse.init_gaussian(grid, x0=20.0, sigma=0.3)       # under-resolved
    with pytest.raises(ConfigError):
        tdse.init_gaussian(grid, x0=58.0, sigma=1.0)       # hugs the edge


def test_drive_spec_validation():
    with pytest.raises(DomainError):
        tdse.DriveSpec(lam=-0.1)
    with pytest.raises(DomainError):
        tdse.DriveSpec(kappa=0.0)
    with pytest.raises(DomainError):
        tdse.DriveSpec(kbar=-1.0)
    with pytest.raises(DomainError):
        tdse.DriveSpec(V0=-1.0)


def test_potential_includes_drive():
    d = tdse.DriveSpec(lam=0.2)
    x = np.array([0.0, 5.0])
    t = np.pi / 2.0
    expected = x + np.exp(-x) + 0.2 * x * np.sin(t)
    assert np.allclose(tdse.potential(x, t, d), expected, rtol=1e-14)


# ---------------------------------------------------------------------------
# single-step propagator
# ---------------------------------------------------------------------------

def test_energy_expectation_of_gaussian():
    # <H0> = x0 + kbar^2/(8 sigma^2) + p0^2/2 far from the wall
    grid = tdse.Grid(-10.0, 416.4, 4096)
    psi = tdse.init_gaussian(grid, x0=104.1, sigma=3.0, p0=0.0)
    assert tdse.energy_expectation(psi, DRIVE0) == pytest.approx(
        104.1 + 1.0 / 72.0, rel=1e-12)
    psi2 = tdse.init_gaussian(grid, x0=104.1, sigma=3.0, p0=2.0)
    assert tdse.energy_expectation(psi2, DRIVE0) == pytest.approx(
        104.1 + 1.0 / 72.0 + 2.0, rel=1e-12)


def test_step_requires_positive_dt():
    with pytest.raises(DomainError):
        tdse.step(_packet(), 0.0, DRIVE0)


def test_norm_conserved_over_many_steps():
    psi = _packet()
    drive = tdse.DriveSpec(lam=0.1)
    for _ in range(500):
        psi = tdse.step(psi, 0.02, drive)
    assert abs(psi.norm() - 1.0) < 1e-12
    assert psi.time == pytest.approx(10.0, rel=1e-12)


def test_strang_splitting_is_second_order():
    # global error against a fine-step reference must shrink ~4x per halving
    drive = tdse.DriveSpec(lam=0.2)
    T = 2.0

    def final_state(n_steps):
        psi = _packet()
        for _ in range(n_steps):
            psi = tdse.step(psi, T / n_steps, drive)
        return psi.amplitudes

    ref = final_state(512)
    errs = [np.linalg.norm(final_state(n) - ref) for n in (16, 32, 64)]
    assert 3.4 < errs[0] / errs[1] < 4.6
    assert 3.4 < errs[1] / errs[2] < 4.6


def test_harmonic_timescale_at_the_potential_bottom():
    # V = x + exp(-x) has V'' = 1 at its minimum x = 0, so a displaced
    # packet's mean position should swing with period ~2*pi (the measured
    # half-period comes out a few percent long from the cubic anharmonicity)
    grid = tdse.Grid(-12.0, 30.0, 512)
    psi = tdse.init_gaussian(grid, x0=0.4, sigma=0.7071)
    means, times = [], []
    for _ in range(800):
        psi = tdse.step(psi, 0.01, DRIVE0)
        means.append(psi.mean_position())
        times.append(psi.time)
    t_min = times[int(np.argmin(means))]
    assert t_min == pytest.approx(np.pi, rel=0.08)


def test_aliasing_warning_on_coarse_momentum_grid():
    grid = tdse.Grid(0.0, 10.0, 256)
    psi = tdse.init_gaussian(grid, x0=5.0, sigma=0.5)
    with pytest.warns(UserWarning, match="kinetic phase wraps"):
        tdse.step(psi, 0.01, DRIVE0)


# ---------------------------------------------------------------------------
# recorded evolution
# ---------------------------------------------------------------------------

def test_evolve_matches_composed_steps():
    # the merged-kinetic fast path must reproduce plain step() composition
    drive = tdse.DriveSpec(lam=0.3)
    si, dt, t_end = 0.1, 0.025, 2.0
    series = tdse.evolve_and_record(_packet(), t_end, dt, si, drive)

    psi = _packet()
    ref = psi.amplitudes.copy()
    dx = psi.grid.dx
    expected = [np.vdot(ref, psi.amplitudes) * dx]
    for s in range(int(round(t_end / si))):
        for _ in range(4):  # si / dt
            psi = tdse.step(psi, dt, drive)
        expected.append(np.vdot(ref, psi.amplitudes) * dx)
    assert np.allclose(series.values, np.array(expected), atol=1e-10)
    assert series.complete
    assert series.norm_error < 1e-10


def test_evolve_sampling_grid():
    series = tdse.evolve_and_record(_packet(), 1.0, 0.01, 0.25, DRIVE0)
    assert np.allclose(series.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert abs(series.values[0]) == pytest.approx(1.0, abs=1e-12)
    assert series.wall_time > 0.0


def test_evolve_validates_arguments():
    with pytest.raises(DomainError):
        tdse.evolve_and_record(_packet(), -1.0, 0.01, 0.1, DRIVE0)
    with pytest.raises(DomainError):
        tdse.evolve_and_record(_packet(), 1.0, 0.2, 0.1, DRIVE0)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    psi = _packet(sigma=1.3, p0=2.0)
    psi = tdse.step(psi, 0.05, tdse.DriveSpec(lam=0.1))
    path = tmp_path / "state.ckpt"
    tdse.save_checkpoint(psi, path)
    back = tdse.load_checkpoint(path)
    assert back.grid == psi.grid
    assert back.time == psi.time
    assert np.array_equal(back.amplitudes, psi.amplitudes)


def test_checkpoint_rejects_corruption(tmp_path):
    psi = _packet()
    path = tmp_path / "state.ckpt"
    tdse.save_checkpoint(psi, path)
    raw = path.read_bytes()

    bad_magic = tmp_path / "bad_magic.ckpt"
    bad_magic.write_bytes(b"XXNOTCKP" + raw[8:])
    with pytest.raises(ConfigError):
        tdse.load_checkpoint(bad_magic)

    truncated = tmp_path / "short.ckpt"
    truncated.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(ConfigError):
        tdse.load_checkpoint(truncated)

    header_only = tmp_path / "header.ckpt"
    header_only.write_bytes(raw[:20])
    with pytest.raises(ConfigError):
        tdse.load_checkpoint(header_only)
