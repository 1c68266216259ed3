"""Unperturbed spectrum E_n of the gravitational cavity.

Two models of the bound spectrum of H0 = p^2/2 + x + V0*exp(-kappa*x):

* ``TriangularWell`` -- hard wall at x=0 plus gravity; closed forms
  E_n = (3*pi*kbar*(n - 1/4) / (2*sqrt(2)))**(2/3),
  E'  = kbar*pi/sqrt(2E),   E'' = -kbar^2*pi^2/(4E^2).

* ``NumericAction`` -- semiclassical quantization of the actual soft-wall
  potential: E(n) solves I(E) = kbar*(n + maslov_shift) with
  I(E) = (1/pi) * integral of sqrt(2*(E - V(x))) over the classically
  allowed region.  Derivatives come from dE/dn = kbar*Omega(E) with Omega
  the classical orbit frequency.

Both expose energies and derivatives as smooth functions of a *real-valued*
level number n; integer levels are a consumer concern.

Note on accuracy: at kbar = 1 and E ~ 100 the exponential wall with
V0 = kappa = 1 is genuinely soft -- the orbit penetrates ~ln(E) length units
into it, which adds ~19 units of action relative to the hard wall.  The two
models therefore agree on gross features but differ by several percent in
E(n), E'' and hence in revival times.  This is physics, not a numerical
artifact; the sinc-DVR diagonalization oracle in the test suite confirms the
NumericAction values to ~1e-4.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericError

_QUAD_NODES = 2048  # theta-substitution quadrature converges to machine eps well below this


@dataclass(frozen=True)
class SpectrumModel:
    """A model of the unperturbed spectrum.

    Attributes:
        kind: "TriangularWell" or "NumericAction".
        kbar: dimensionless Planck constant.
        V0, kappa: exponential-wall parameters (used by NumericAction and by
            the time-dependent solver; TriangularWell ignores them).
        maslov_shift: constant in the quantization rule
            I(E) = kbar*(n + maslov_shift).  -1/4 for the triangular well
            (one hard wall, one smooth turning point), +1/2 for NumericAction.
    """

    kind: str
    kbar: float = 1.0
    V0: float = 1.0
    kappa: float = 1.0
    maslov_shift: float = 0.0

    def __post_init__(self):
        if self.kind not in ("TriangularWell", "NumericAction"):
            raise DomainError(f"unknown spectrum kind: {self.kind!r}")
        if self.kbar <= 0:
            raise DomainError("kbar must be positive")
        if self.V0 < 0 or self.kappa <= 0:
            raise DomainError("require V0 >= 0 and kappa > 0")


def triangular_well(kbar: float = 1.0) -> SpectrumModel:
    return SpectrumModel(kind="TriangularWell", kbar=kbar, maslov_shift=-0.25)


def numeric_action(kbar: float = 1.0, V0: float = 1.0, kappa: float = 1.0) -> SpectrumModel:
    return SpectrumModel(kind="NumericAction", kbar=kbar, V0=V0, kappa=kappa,
                         maslov_shift=+0.5)


def static_potential(x, V0: float = 1.0, kappa: float = 1.0):
    """V(x) = x + V0*exp(-kappa*x); vectorized."""
    return x + V0 * np.exp(-kappa * x)


def potential_minimum(V0: float, kappa: float) -> tuple[float, float]:
    """Location and value of the potential minimum (x_m, V_min).

    For V0 = 0 the potential is monotone; the hard-wall convention puts the
    minimum at x = 0 with V = 0.
    """
    if V0 == 0.0:
        return 0.0, 0.0
    x_m = np.log(kappa * V0) / kappa
    return x_m, float(static_potential(x_m, V0, kappa))


# ---------------------------------------------------------------------------
# NumericAction internals
# ---------------------------------------------------------------------------

def _turning_points(E: float, V0: float, kappa: float) -> tuple[float, float]:
    """Classical turning points of x + V0*exp(-kappa*x) at energy E.

    Newton-polished to machine precision.  With V0 = 0 the left turning
    point degenerates to the hard wall at x = 0.
    """
    x_m, v_min = potential_minimum(V0, kappa)
    if E <= v_min:
        raise DomainError(f"E = {E} is at or below the potential minimum {v_min}")

    def f(x):
        return x + V0 * np.exp(-kappa * x) - E

    def fp(x):
        return 1.0 - kappa * V0 * np.exp(-kappa * x)

    def polish(x, lo, hi):
        # safeguarded Newton
        for _ in range(100):
            step = f(x) / fp(x)
            x_new = x - step
            if not lo < x_new < hi:
                x_new = 0.5 * ((lo if step > 0 else hi) + x)
            if f(x_new) > 0:
                if x_new > x_m:
                    hi = min(hi, x_new)
                else:
                    lo = max(lo, x_new)
            else:
                if x_new > x_m:
                    lo = max(lo, x_new)
                else:
                    hi = min(hi, x_new)
            if abs(x_new - x) <= 1e-15 * (1.0 + abs(x_new)):
                return x_new
            x = x_new
        return x

    # right turning point: f < 0 at x_m, f > 0 at E + V0
    x_right = polish(E, x_m, E + V0 + 1.0)

    if V0 == 0.0:
        return 0.0, x_right

    # left turning point: bracket where the exponential dominates
    lo = -np.log((2.0 * max(E, 1.0) - v_min + 10.0) / V0) / kappa
    x_left = polish(0.5 * (lo + x_m), lo, x_m)
    return x_left, x_right


def _orbit_integrals(E: float, V0: float, kappa: float,
                     n_nodes: int = _QUAD_NODES) -> tuple[float, float]:
    """Classical period T(E) and action I(E) = (1/pi) * closed-orbit integral.

    Uses the substitution x = mid - half*cos(theta), under which
    2*(E - V(x)) = h(theta) * (x - a) * (b - x) with h smooth and positive,
    so the midpoint rule in theta converges spectrally (the integrand is
    analytic and periodic after the square-root singularities are factored
    out).
    """
    a, b = _turning_points(E, V0, kappa)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    theta = (np.arange(n_nodes) + 0.5) * (np.pi / n_nodes)
    x = mid - half * np.cos(theta)
    denom = (x - a) * (b - x)
    h = 2.0 * (E - static_potential(x, V0, kappa)) / denom
    if np.any(h <= 0):
        raise NumericError(f"non-positive integrand factor in action quadrature at E={E}")
    w = np.pi / n_nodes
    period = 2.0 * np.sum(1.0 / np.sqrt(h)) * w
    action = (half**2 / np.pi) * np.sum(np.sqrt(h) * np.sin(theta) ** 2) * w
    return period, action


def action(model: SpectrumModel, E: float) -> float:
    """I(E): phase-space area / 2*pi of the orbit at energy E."""
    if model.kind == "TriangularWell":
        if E <= 0:
            raise DomainError("triangular well requires E > 0")
        return (2.0 * np.sqrt(2.0) / (3.0 * np.pi)) * E**1.5
    return _orbit_integrals(E, model.V0, model.kappa)[1]


def period(model: SpectrumModel, E: float) -> float:
    """Classical orbit period T(E) at energy E."""
    if model.kind == "TriangularWell":
        if E <= 0:
            raise DomainError("triangular well requires E > 0")
        return 2.0 * np.sqrt(2.0 * E)
    return _orbit_integrals(E, model.V0, model.kappa)[0]


def omega(model: SpectrumModel, E: float) -> float:
    """Classical orbit frequency Omega(E) = 2*pi/T(E)."""
    return 2.0 * np.pi / period(model, E)


def energy(model: SpectrumModel, n) -> float:
    """Energy of (real-valued) level n, counted from n = 1.

    TriangularWell uses the closed form; NumericAction inverts
    I(E) = kbar*(n + maslov_shift) by Newton's method (dI/dE = T/(2*pi)),
    seeded with the triangular closed form.
    """
    n = float(n)
    if n < 1.0:
        raise DomainError(f"level number must be >= 1, got {n}")
    if model.kind == "TriangularWell":
        return (3.0 * np.pi * model.kbar * (n - 0.25) / (2.0 * np.sqrt(2.0))) ** (2.0 / 3.0)

    target = model.kbar * (n + model.maslov_shift)
    _, v_min = potential_minimum(model.V0, model.kappa)
    # triangular seed, kept above the potential minimum
    E = max((3.0 * np.pi * model.kbar * (n - 0.25) / (2.0 * np.sqrt(2.0))) ** (2.0 / 3.0),
            v_min + 1e-6 * model.kbar)
    for _ in range(80):
        T, I = _orbit_integrals(E, model.V0, model.kappa)
        dE = (I - target) / (T / (2.0 * np.pi))
        E_new = E - dE
        if E_new <= v_min:
            E_new = 0.5 * (E + v_min)
        if abs(E_new - E) <= 1e-14 * abs(E_new):
            return E_new
        E = E_new
    raise NumericError(f"action inversion did not converge for n = {n}")


def level_from_energy(model: SpectrumModel, E: float) -> float:
    """Real-valued level number n with energy(model, n) = E."""
    if model.kind == "TriangularWell":
        if E <= 0:
            raise DomainError("triangular well requires E > 0")
        return (2.0 * np.sqrt(2.0) / (3.0 * np.pi * model.kbar)) * E**1.5 + 0.25
    return action(model, E) / model.kbar - model.maslov_shift


def derivatives(model: SpectrumModel, n) -> tuple[float, float]:
    """(E'(n), E''(n)) -- first and second derivatives in level number.

    E' = kbar * Omega(E(n)) is evaluated from the orbit quadrature directly;
    E'' uses a centered finite difference of E' in n with a step chosen
    adaptively (capped at 0.5 levels, reduced near the n >= 1 boundary).
    """
    n = float(n)
    if n < 1.0:
        raise DomainError(f"level number must be >= 1, got {n}")
    if model.kind == "TriangularWell":
        E = energy(model, n)
        d1 = model.kbar * np.pi / np.sqrt(2.0 * E)
        d2 = -(model.kbar**2) * np.pi**2 / (4.0 * E**2)
        return d1, d2

    def d1_at(m):
        return model.kbar * omega(model, energy(model, m))

    h = min(0.5, max(0.05, 0.05 * (n - 1.0)))
    if n - h >= 1.0:
        d1 = d1_at(n)
        d2 = (d1_at(n + h) - d1_at(n - h)) / (2.0 * h)
    else:
        # one-sided second-order stencil for n close to the bottom
        h = 0.25
        d1 = d1_at(n)
        d2 = (-3.0 * d1 + 4.0 * d1_at(n + h) - d1_at(n + 2 * h)) / (2.0 * h)
    return d1, d2
