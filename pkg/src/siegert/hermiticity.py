"""Surface-term and expanding-window diagnostics for certified poles.

For a state obeying the outgoing boundary condition the bracket
[psi* dpsi/dx] between -L and L reduces to i k (|B|^2 + |C|^2) e^{-2 Im k L}:
its imaginary part vanishes identically on the imaginary k axis (bound
states) and grows without bound off it, which is the numerical face of the
Hermiticity dichotomy.  The expanding-window norm N(t) over
[-L(t), L(t)], L(t) = L0 + 2 Re k t, stays constant for every pole; any
other window speed breaks the cancellation, which the speed override makes
testable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import (NearThresholdWarning, OverflowGuardError, SpuriousPoleError,
                         ValidationError)
from .model import UNITS, Potential1D, TimeSeries, piecewise_cells
from .poles import ANTI_RESONANT, BOUND, RESONANT, ComplexPole
from .transfer import EXPONENT_GUARD

__all__ = [
    "SiegertWavefunction",
    "build_wavefunction",
    "surface_term",
    "expanding_norm",
    "conservation_report",
    "ConservationReport",
]

MATCHING_TOL = 1e-8
GAUSS_ORDER = 32
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GAUSS_ORDER)


@dataclass(frozen=True)
class SiegertWavefunction:
    """Interior samples plus exterior closed forms, normalized to psi(ell) = 1."""

    pole: ComplexPole
    x: np.ndarray
    psi: np.ndarray
    B: complex
    C: complex
    support_halfwidth: float
    matching_residual: float
    interior_norm: float          # integral of |psi|^2 over [-ell, ell]
    potential: Potential1D


def _propagate(state, q, d):
    """Advance (psi, dpsi) by d through a cell of local wavenumber q."""
    psi, dpsi = state
    qd = q * d
    c = np.cos(qd)
    if abs(qd) < 1e-6:
        s_over = d * (1.0 - qd * qd / 6.0)
    else:
        s_over = np.sin(qd) / q
    return (psi * c + dpsi * s_over, -psi * q * q * s_over + dpsi * c)


def build_wavefunction(p: Potential1D, pole: ComplexPole,
                       grid_step: float = 0.01) -> SiegertWavefunction:
    """Solve the interior exactly by propagating leftward from x = ell.

    The start state is (1, i k), i.e. the outgoing exterior continued to the
    right support edge.  The leftover incoming amplitude at -ell is the
    matching residual; above 1e-8 (relative) the pole is rejected as
    spurious.
    """
    if not pole.certified:
        raise ValidationError("refusing to build a wave function for an uncertified pole")
    ell = p.support_halfwidth
    if ell == 0.0:
        raise ValidationError("the empty potential has no discrete states")
    k = pole.k
    cells = piecewise_cells(p)
    # states at the right edge of every cell, walking right to left
    edge_states = {}
    state = (1.0 + 0.0j, 1j * k)
    for xl, xr, v in reversed(cells):
        edge_states[(xl, xr, v)] = state
        q = complex(np.sqrt(complex(k * k - v)))
        state = _propagate(state, q, -(xr - xl))
    psi_left, dpsi_left = state
    ik = 1j * k
    a_in = 0.5 * (psi_left + dpsi_left / ik)
    b_out = 0.5 * (psi_left - dpsi_left / ik)
    residual = abs(a_in) / max(abs(a_in) + abs(b_out), 1e-300)
    if residual > MATCHING_TOL:
        raise SpuriousPoleError(
            f"matching residual {residual:.3e} exceeds {MATCHING_TOL:.1e} at k = {k}")

    def interior(x):
        for cell in cells:
            xl, xr, v = cell
            if xl <= x <= xr:
                q = complex(np.sqrt(complex(k * k - v)))
                return _propagate(edge_states[cell], q, x - xr)[0]
        raise ValidationError(f"x = {x} outside the support")

    n = max(2, int(math.ceil(2 * ell / grid_step)) + 1)
    xs = np.linspace(-ell, ell, n)
    psi = np.array([interior(x) for x in xs])

    interior_mass = 0.0
    for cell in cells:
        xl, xr, v = cell
        q = complex(np.sqrt(complex(k * k - v)))
        half = 0.5 * (xr - xl)
        mid = 0.5 * (xl + xr)
        nodes = mid + half * _GL_NODES
        vals = np.array([_propagate(edge_states[cell], q, x - xr)[0] for x in nodes])
        interior_mass += half * float(np.sum(_GL_WEIGHTS * np.abs(vals) ** 2))

    C = complex(np.exp(-1j * k * ell))            # psi(ell) = 1 by construction
    B = psi_left * complex(np.exp(-1j * k * ell))  # psi(-ell) = B e^{+ik ell}
    return SiegertWavefunction(pole=pole, x=xs, psi=psi, B=B, C=C,
                               support_halfwidth=ell,
                               matching_residual=residual,
                               interior_norm=interior_mass,
                               potential=p)


def _amplitude_sum(w: SiegertWavefunction) -> float:
    return abs(w.B) ** 2 + abs(w.C) ** 2


def _edge_density(w: SiegertWavefunction, L: float) -> float:
    """|psi(L)|^2 + |psi(-L)|^2 from the exterior closed forms."""
    beta = -2.0 * w.pole.k.imag
    if abs(beta * L) > EXPONENT_GUARD:
        raise OverflowGuardError(f"exterior exponent {beta * L:.1f} beyond guard")
    return _amplitude_sum(w) * math.exp(beta * L)


def surface_term(w: SiegertWavefunction, L: float) -> complex:
    """[psi* dpsi/dx] between -L and L, via the exterior closed forms.

    Equals i k (|B|^2 + |C|^2) exp(-2 Im k L); the imaginary part is the
    outgoing momentum flux obstructing Hermiticity.
    """
    L = float(L)
    if L <= w.support_halfwidth:
        raise ValidationError(f"need L > ell = {w.support_halfwidth}, got {L}")
    k = w.pole.k
    return 1j * k * _edge_density(w, L)


def _window_positions(w: SiegertWavefunction, L0, t, speed):
    ell = w.support_halfwidth
    if L0 <= ell:
        raise ValidationError(f"need L0 > ell = {ell}, got {L0}")
    L = L0 + speed * t
    if np.any(L <= ell):
        raise ValidationError("window shrinks into the support on this grid")
    return L

def _norm_values(w: SiegertWavefunction, L, t):
    k = w.pole.k
    beta = -2.0 * k.imag                      # exterior density is e^{beta x}
    if np.any(np.abs(beta * L) > EXPONENT_GUARD):
        raise OverflowGuardError("window grew past the exponent guard")
    decay = 2.0 * (k * k).imag                # d/dt of log |e^{-iEt}|^2
    ell = w.support_halfwidth
    exterior = _amplitude_sum(w) * (np.exp(beta * L) - math.exp(beta * ell)) / beta
    return np.exp(decay * t) * (w.interior_norm + exterior)


def _check_time_direction(w: SiegertWavefunction, t):
    kind = w.pole.kind
    if kind == RESONANT and t[0] < 0:
        raise ValidationError("resonant windows expand forward in time; use t >= 0")
    if kind == ANTI_RESONANT and t[-1] > 0:
        raise ValidationError("anti-resonant windows run backward in time; use t <= 0")
    if kind in (RESONANT, ANTI_RESONANT):
        k = w.pole.k
        if abs(k.real) < abs(k.imag):
            warnings.warn(
                "near-threshold pole: window speed 2 Re k may not outrun the "
                "wave-front spread; conservation is reported but marginal",
                NearThresholdWarning, stacklevel=3)


def expanding_norm(w: SiegertWavefunction, L0: float, t_grid,
                   speed: float | None = None) -> TimeSeries:
    """Probability mass N(t) inside the co-expanding window [-L(t), L(t)].

    L(t) = L0 + 2 Re k t (hbar = 2m = 1 group velocity); ``speed`` overrides
    the window speed for negative-control runs only.  Exterior integrals are
    closed-form exponentials; the interior mass is Gauss-Legendre per cell
    and time-independent up to the global decay factor.
    """
    t = np.asarray(t_grid, dtype=float)
    _check_time_direction(w, t)
    if speed is None:
        speed = UNITS.group_velocity(w.pole.k)
    L = _window_positions(w, float(L0), t, speed)
    values = _norm_values(w, L, t)
    return TimeSeries(t, values, meta={"observable": "expanding_norm",
                                       "L0": float(L0), "speed": speed,
                                       "pole_k": [w.pole.k.real, w.pole.k.imag]})


def _five_point_derivative(y, h):
    """Fourth-order finite differences, one-sided at the ends."""
    y = np.asarray(y, dtype=float)
    n = y.size
    if n < 5:
        raise ValidationError("need at least 5 samples for the 5-point stencil")
    d = np.empty(n)
    d[2:-2] = (y[:-4] - 8 * y[1:-3] + 8 * y[3:-1] - y[4:]) / (12 * h)
    fwd = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
    d[0] = fwd @ y[:5]
    d[1] = fwd @ y[1:6]
    d[-1] = -(fwd @ y[-1:-6:-1])
    d[-2] = -(fwd @ y[-2:-7:-1])
    return d


@dataclass(frozen=True)
class ConservationReport:
    t: np.ndarray
    N: np.ndarray
    dNdt: np.ndarray          # 5-point finite differences
    bulk_term: np.ndarray     # 2 Im E  N(t)
    boundary_term: np.ndarray  # speed (|Psi(L)|^2 + |Psi(-L)|^2)


def conservation_report(w: SiegertWavefunction, L0: float, t_grid,
                        speed: float | None = None) -> ConservationReport:
    """N(t), its numerical derivative, and the two terms that must cancel."""
    t = np.asarray(t_grid, dtype=float)
    if t.size > 1 and not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-12, atol=0):
        raise ValidationError("conservation report needs a uniform grid")
    series = expanding_norm(w, L0, t, speed=speed)
    used_speed = series.meta["speed"]
    L = _window_positions(w, float(L0), t, used_speed)
    k = w.pole.k
    decay = 2.0 * (k * k).imag
    edge = np.array([_edge_density(w, Lv) for Lv in L]) * np.exp(decay * t)
    boundary = used_speed * edge
    bulk = decay * series.values
    h = float(t[1] - t[0]) if t.size > 1 else 1.0
    dN = _five_point_derivative(series.values, h)
    return ConservationReport(t=t, N=series.values, dNdt=dN,
                              bulk_term=bulk, boundary_term=boundary)
