"""Resonance identification and the analytic revival-time family.

The drive lambda*x*sin(t) (frequency 1 in scaled units) is resonant with the
orbit at energy E_N where N*Omega(E_N) = 1.  A wave packet centered on level
r with energy E_r near that resonance disperses and revives; the secular
(single-resonance) treatment maps the slow dynamics onto the Mathieu
equation, giving Floquet quasi-energies

    E_k = (N^2 * E_r'' / 8) * a_nu(q),   nu = 2k/N,   q = 4*lambda*V/(N^2*E_r''),

and, away from the separatrix, the driven revival time

    T_lambda = T0 * [1 - (1/2)*(lambda*V/E_r'')^2 * (3*mu^2 + N^2/4) / (mu^2 - N^2/4)^3]

with detuning mu = (E_r' - kbar/N)/E_r'' and T0 = 4*pi*kbar/|E_r''|.

The bouncer-specific forms substitute the triangular-well closed forms for
E_N, V and the derivatives; they are kept separate so the generic and
specialized predictions can be compared.
"""

from dataclasses import dataclass

import numpy as np

from . import mathieu, spectrum
from .errors import (DegenerateSpectrumError, DomainError, NoResonanceError,
                     NumericError, ResonanceSingularityError)

_SEPARATRIX_RTOL = 1e-8


@dataclass(frozen=True)
class ResonanceContext:
    """All resonance-local quantities for one (model, E_r, lambda) choice.

    Attributes:
        N: resonance order (drive period = N orbit periods).
        r: integer resonant level (nearest level to E_r).
        E_r: packet energy as requested (not snapped to level r).
        E_r1, E_r2: dE/dn and d2E/dn2 evaluated at n = r.
        V: coupling matrix element (large-m limit, evaluated at E_N).
        kbar: dimensionless Planck constant.
        mu: detuning (E_r1 - kbar/N)/E_r2, in level units.
        q: Mathieu parameter 4*lambda*V/(N^2*E_r2).
        lam: modulation strength the context was built with.
        E_N: resonance-center energy, Omega(E_N) = 1/N.
    """

    N: int
    r: int
    E_r: float
    E_r1: float
    E_r2: float
    V: float
    kbar: float
    mu: float
    q: float
    lam: float
    E_N: float


@dataclass(frozen=True)
class RevivalPrediction:
    """An analytic revival-time prediction T_lambda relative to T0."""

    T0: float
    T_lambda: float
    ratio: float
    formula: str  # "General" | "Bouncer" | "BouncerSimple"


def select_resonance(model: spectrum.SpectrumModel, E_r: float) -> int:
    """Nearest integer resonance order N = round(1/Omega(E_r)).

    Ties at half-integers break toward the smaller N.

    Raises:
        NoResonanceError: if the rounding gives N < 1 (orbit faster than
            half the drive period).
    """
    x = 1.0 / spectrum.omega(model, E_r)  # = kbar/E' at the packet energy
    n_lo = np.floor(x)
    N = int(n_lo) if (x - n_lo) <= 0.5 else int(n_lo) + 1
    if N < 1:
        raise NoResonanceError(
            f"1/Omega(E_r) = {x:.4f} rounds to N = {N}; no resonance order >= 1")
    return N


def resonance_center(model: spectrum.SpectrumModel, N: int) -> float:
    """Energy E_N at which Omega(E_N) = 1/N (exact resonance)."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if model.kind == "TriangularWell":
        return N**2 * np.pi**2 / 2.0
    # Omega decreases with E; bracket and bisect via brentq-style expansion
    from scipy.optimize import brentq
    _, v_min = spectrum.potential_minimum(model.V0, model.kappa)
    lo = v_min + 1e-9 + 1e-9 * abs(v_min)
    hi = max(4.0 * N**2 * np.pi**2, v_min + 10.0)
    f = lambda E: spectrum.omega(model, E) - 1.0 / N
    f_lo = f(lo)
    if f_lo < 0:
        raise NumericError(
            f"Omega near the potential bottom is already below 1/{N}; "
            "no resonance center exists for this N")
    for _ in range(60):
        if f(hi) < 0:
            break
        hi *= 2.0
    else:
        raise NumericError(f"could not bracket the N = {N} resonance center")
    return float(brentq(f, lo, hi, xtol=1e-12, rtol=1e-14))


def coupling(E_m: float, N: int, m: float) -> float:
    """Triangular-well coupling V = -2*E_m / (N^2*pi^2*(1 - N/(6m))^2).

    Raises:
        DomainError: if m <= N/6 (denominator sanity).
    """
    if m <= N / 6.0:
        raise DomainError(f"require m > N/6 (= {N/6.0:.3f}), got m = {m}")
    return -2.0 * E_m / (N**2 * np.pi**2 * (1.0 - N / (6.0 * m)) ** 2)


def coupling_limit(E_N: float, N: int) -> float:
    """Large-m limit of the coupling: V = -2*E_N/(N^2*pi^2).

    Equals exactly -1 when E_N is the triangular-well resonance center
    N^2*pi^2/2, which is why the bouncer formulas carry lambda/E_r with no
    explicit V.
    """
    return -2.0 * E_N / (N**2 * np.pi**2)


def build_context(model: spectrum.SpectrumModel, E_r: float,
                  lam: float = 0.0) -> ResonanceContext:
    """Compose the full resonance context for a packet of energy E_r.

    Derivatives are evaluated at the integer resonant level r (the nearest
    level to E_r); the coupling uses the large-m limit at the resonance
    center.
    """
    if lam < 0:
        raise DomainError(f"modulation strength must be >= 0, got {lam}")
    N = select_resonance(model, E_r)
    n_real = spectrum.level_from_energy(model, E_r)
    r = int(np.floor(n_real + 0.5))
    E_r1, E_r2 = spectrum.derivatives(model, float(r))
    if E_r2 == 0.0:
        raise DegenerateSpectrumError(f"E'' vanishes at level r = {r}")
    E_N = resonance_center(model, N)
    V = coupling_limit(E_N, N)
    mu = (E_r1 - model.kbar / N) / E_r2
    q = 4.0 * lam * V / (N**2 * E_r2)
    return ResonanceContext(N=N, r=r, E_r=E_r, E_r1=E_r1, E_r2=E_r2, V=V,
                            kbar=model.kbar, mu=mu, q=q, lam=lam, E_N=E_N)


def quasi_energy(ctx: ResonanceContext, k: int, method: str = "Series",
                 truncation: int = 64) -> float:
    """Floquet quasi-energy E_k = (N^2*E_r''/8) * a_nu(q), nu = 2k/N.

    ``method`` selects the Mathieu backend ("Series" is the analytic
    default; "Matrix" is the numerically exact oracle).  For N even,
    k = +-N/2 lands on nu = +-1 where the series is singular; the
    SingularOrderError from the mathieu module propagates.
    """
    nu = 2.0 * k / ctx.N
    if method == "Series":
        a = mathieu.char_value_series(nu, ctx.q)
    elif method == "Matrix":
        a = mathieu.char_value_matrix(nu, ctx.q, truncation=truncation)
    else:
        raise DomainError(f"unknown method {method!r}")
    return (ctx.N**2 * ctx.E_r2 / 8.0) * a


def quasi_energy_series(ctx: ResonanceContext, n: float) -> float:
    """Quasi-energy of level n from the second-order Mathieu series.

    Evaluates (N^2*E_r''/8) * [nu_n^2 + (q^2/2)/(nu_n^2 - 1)] with the
    detuned order nu_n = (2/N)*(n - r) + 2*mu/N.  At q = 0 this is the
    energy of the undriven system expanded to second order around r, in
    the frame rotating at the drive's 1/N sub-harmonic.
    """
    nu_n = (2.0 / ctx.N) * (n - ctx.r) + 2.0 * ctx.mu / ctx.N
    a = mathieu.char_value_series(nu_n, ctx.q)
    return (ctx.N**2 * ctx.E_r2 / 8.0) * a


def classical_period(ctx: ResonanceContext) -> float:
    """T_cl = 2*pi*kbar/E_r'."""
    if ctx.E_r1 <= 0:
        raise DomainError("E_r' must be positive")
    return 2.0 * np.pi * ctx.kbar / ctx.E_r1


def t_zero(ctx: ResonanceContext) -> float:
    """Undriven revival time T0 = 4*pi*kbar/|E_r''| (magnitude convention:
    E'' < 0 for this cavity, revival times are reported positive)."""
    if ctx.E_r2 == 0.0:
        raise DegenerateSpectrumError("E'' = 0: no revival time exists")
    return 4.0 * np.pi * ctx.kbar / abs(ctx.E_r2)


def _separatrix_guard(mu2: float, quarter_n2: float):
    if abs(mu2 - quarter_n2) <= _SEPARATRIX_RTOL * quarter_n2:
        raise ResonanceSingularityError(
            f"mu^2 = {mu2:.6g} coincides with N^2/4 = {quarter_n2:.6g}: "
            "packet sits on the resonance separatrix; the secular revival "
            "formula is invalid there")


def revival_time_general(ctx: ResonanceContext, lam: float) -> RevivalPrediction:
    """Driven revival time from the general secular formula.

    T_lambda = T0 * [1 - (1/2)*(lam*V/E_r'')^2 * (3*mu^2 + N^2/4)
                                                / (mu^2 - N^2/4)^3]

    The formula is quadratic in lam and is evaluated exactly as written;
    callers are responsible for staying inside its validity region (deficit
    small, packet outside the resonance island).

    Raises:
        ResonanceSingularityError: mu^2 = N^2/4 within tolerance.
    """
    T0 = t_zero(ctx)
    mu2 = ctx.mu**2
    quarter_n2 = ctx.N**2 / 4.0
    _separatrix_guard(mu2, quarter_n2)
    deficit = 0.5 * (lam * ctx.V / ctx.E_r2) ** 2 \
        * (3.0 * mu2 + quarter_n2) / (mu2 - quarter_n2) ** 3
    ratio = 1.0 - deficit
    return RevivalPrediction(T0=T0, T_lambda=T0 * ratio, ratio=ratio,
                             formula="General")


def revival_time_bouncer(E_r: float, E_N: float, lam: float,
                         kbar: float = 1.0) -> RevivalPrediction:
    """Bouncer revival time with the alpha-shift correction.

    alpha = sqrt(E_N/E_r), a_shift = alpha^2*kbar/(4*E_r):

    T_lambda = T0 * {1 - (1/8)*(lam/E_r)^2 * (3*(1-alpha)^2 + a_shift^2)
                                           / [(1-alpha)^2 - a_shift^2]^3}

    T0 uses the triangular-well closed form 16*E_r^2/(pi*kbar).
    """
    if E_r <= 0 or E_N <= 0:
        raise DomainError("E_r and E_N must be positive")
    alpha = np.sqrt(E_N / E_r)
    a_shift = alpha**2 * kbar / (4.0 * E_r)
    u, v = (1.0 - alpha) ** 2, a_shift**2
    if abs(u - v) <= _SEPARATRIX_RTOL * (u + v):
        raise ResonanceSingularityError(
            "(1-alpha)^2 = a_shift^2: bouncer formula is singular here")
    T0 = 16.0 * E_r**2 / (np.pi * kbar)
    deficit = 0.125 * (lam / E_r) ** 2 * (3.0 * u + v) / (u - v) ** 3
    ratio = 1.0 - deficit
    return RevivalPrediction(T0=T0, T_lambda=T0 * ratio, ratio=ratio,
                             formula="Bouncer")


def revival_time_bouncer_simple(E_r: float, E_N: float, lam: float,
                                kbar: float = 1.0) -> RevivalPrediction:
    """Simplified bouncer formula (a_shift dropped):

    T_lambda = T0 * [1 - (3/8)*(lam/E_r)^2 / (1-alpha)^4],
    alpha = sqrt(E_N/E_r).
    """
    if E_r <= 0 or E_N <= 0:
        raise DomainError("E_r and E_N must be positive")
    alpha = np.sqrt(E_N / E_r)
    if abs(1.0 - alpha) <= _SEPARATRIX_RTOL:
        raise ResonanceSingularityError("alpha = 1: packet at the resonance center")
    T0 = 16.0 * E_r**2 / (np.pi * kbar)
    deficit = 0.375 * (lam / E_r) ** 2 / (1.0 - alpha) ** 4
    ratio = 1.0 - deficit
    return RevivalPrediction(T0=T0, T_lambda=T0 * ratio, ratio=ratio,
                             formula="BouncerSimple")
