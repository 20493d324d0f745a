"""Finite-lattice survival probability and its discrete-pole decomposition.

The finite chain is diagonalized exactly (it is tridiagonal), so the
survival amplitude is a plain spectral sum and the time-reversal symmetry
P(t) = P(-t) holds to rounding.  Pole contributions come from residues of
the contact Green's function on the continued branch, picked up by a small
contour around each pole; everything the discrete poles do not account for
(band-edge backgrounds, cross-class interference) lands in the residual
channel on purpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .exceptions import NumericalError, ValidationError
from .feshbach import (ADVANCED, RETARDED, effective_hamiltonian,
                       lattice_siegert_poles)
from .model import LatticeModel, TimeSeries, model_fingerprint
from .poles import ANTI_BOUND, ANTI_RESONANT, BOUND, RESONANT, ComplexPole

__all__ = [
    "evolve_survival",
    "pole_decomposition",
    "PoleContribution",
    "SurvivalDecomposition",
    "fit_decay_rate",
    "survival_site",
]

RESIDUE_RADIUS = 1e-3
RESIDUE_NODES = 64
_T_CHUNK = 512


def survival_site(m: LatticeModel) -> int:
    """Index (within the system block) of the site the walker starts on."""
    return m.system_sites // 2


def _finite_chain(m: LatticeModel, total_sites: int):
    """Diagonal and off-diagonal of the truncated chain, plus the start index."""
    n_sys = m.system_sites
    if total_sites % 2 == 0 or total_sites < max(401, n_sys + 2):
        raise ValidationError(
            f"total_sites must be odd and >= 401 (and > system), got {total_sites}")
    left = (total_sites - n_sys) // 2
    right = total_sites - n_sys - left
    diag = np.zeros(total_sites)
    diag[left:left + n_sys] = m.onsite
    off = np.full(total_sites - 1, -m.lead_hopping)
    for i, t in enumerate(m.intra_hopping):
        off[left + i] = -t
    if left > 0:
        off[left - 1] = -m.coupling_left
    if right > 0:
        off[left + n_sys - 1] = -m.coupling_right
    return diag, off, left + survival_site(m)


def evolve_survival(m: LatticeModel, total_sites: int, t_grid) -> TimeSeries:
    """P(t) = |<0| exp(-i H t) |0>|^2 on the finite chain, via full diagonalization.

    The chain must be long enough that the front (speed <= 2J) cannot reach
    the open ends inside the requested times; otherwise the run is rejected
    rather than silently polluted by reflections.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ValidationError("need a 1-d time grid")
    horizon = 2.0 * (2.0 * m.lead_hopping) * float(np.max(np.abs(t)))
    if total_sites <= horizon + m.system_sites:
        raise ValidationError(
            f"boundary-reflection guard: need total_sites > {horizon + m.system_sites:.0f}")
    diag, off, start = _finite_chain(m, total_sites)
    energies, vectors = scipy.linalg.eigh_tridiagonal(diag, off)
    weights = np.abs(vectors[start, :]) ** 2
    p = np.empty(t.size)
    for lo in range(0, t.size, _T_CHUNK):
        chunk = t[lo:lo + _T_CHUNK]
        amp = np.exp(-1j * np.outer(chunk, energies)) @ weights
        p[lo:lo + _T_CHUNK] = np.abs(amp) ** 2
    return TimeSeries(t, p, meta={"observable": "survival_probability",
                                  "model": model_fingerprint(m),
                                  "total_sites": total_sites})


def _contact_green(m: LatticeModel, E: complex, branch: str, site: int) -> complex:
    h = effective_hamiltonian(m, E, branch).matrix
    a = E * np.eye(m.system_sites) - h
    rhs = np.zeros(m.system_sites, dtype=complex)
    rhs[site] = 1.0
    return complex(np.linalg.solve(a, rhs)[site])


def _residue(m: LatticeModel, pole: ComplexPole, site: int) -> complex:
    """Residue of G_00 at the pole by small-circle quadrature on its branch."""
    branch = RETARDED if pole.kind in (RESONANT, BOUND, ANTI_BOUND) else ADVANCED
    theta = 2.0 * math.pi * np.arange(RESIDUE_NODES) / RESIDUE_NODES
    nodes = pole.E + RESIDUE_RADIUS * np.exp(1j * theta)
    try:
        g = np.array([_contact_green(m, e, branch, site) for e in nodes])
    except Exception as exc:  # singular solve right on the contour
        raise NumericalError(f"residue contour failed near {pole.E}: {exc}") from exc
    return complex(RESIDUE_RADIUS * np.mean(g * np.exp(1j * theta)))


@dataclass(frozen=True)
class PoleContribution:
    pole: ComplexPole
    amplitude: complex                # residue c_n of the contact Green's function
    series: TimeSeries                # |c_n exp(-i E_n t)|^2 on its attributed side


@dataclass
class SurvivalDecomposition:
    survival: TimeSeries
    contributions: list[PoleContribution]
    per_class: dict = field(default_factory=dict)   # class -> TimeSeries
    residual: TimeSeries | None = None


def _attribution_mask(kind: str, t: np.ndarray) -> np.ndarray:
    if kind == RESONANT:
        return t >= 0
    if kind == ANTI_RESONANT:
        return t <= 0
    if kind == BOUND:
        return np.ones_like(t, dtype=bool)
    return np.zeros_like(t, dtype=bool)   # anti-bound: reported, never attributed


def pole_decomposition(m: LatticeModel, t_grid, poles=None, survival=None,
                       total_sites=None) -> SurvivalDecomposition:
    """Split the survival probability into discrete-pole channels.

    Resonant poles are attributed to t > 0, anti-resonant to t < 0, bound
    everywhere; anti-bound states are reported but carry no attribution.
    Within a class the amplitudes add coherently; whatever is left of P(t)
    is emitted as the residual diagnostic.
    """
    t = np.asarray(t_grid, dtype=float)
    if poles is None:
        poles = lattice_siegert_poles(m)
    poles = [q for q in poles if q.certified]
    if survival is None:
        if total_sites is None:
            need = 2.0 * (2.0 * m.lead_hopping) * float(np.max(np.abs(t)))
            total_sites = max(401, int(math.ceil(need)) + m.system_sites + 51)
            if total_sites % 2 == 0:
                total_sites += 1
        survival = evolve_survival(m, total_sites, t)
    site = survival_site(m)
    contributions = []
    class_amp = {}
    for pole in poles:
        c = _residue(m, pole, site)
        mask = _attribution_mask(pole.kind, t)
        amp = np.where(mask, c * np.exp(-1j * pole.E * t), 0.0)
        series = TimeSeries(t, np.abs(amp) ** 2,
                            meta={"observable": f"survival_{pole.kind}",
                                  "pole_k": [pole.k.real, pole.k.imag]})
        contributions.append(PoleContribution(pole, c, series))
        class_amp.setdefault(pole.kind, np.zeros(t.size, dtype=complex))
        class_amp[pole.kind] += amp
    per_class = {kind: TimeSeries(t, np.abs(a) ** 2,
                                  meta={"observable": f"survival_{kind}"})
                 for kind, a in class_amp.items()}
    accounted = np.zeros(t.size)
    for series in per_class.values():
        accounted += series.values
    residual = TimeSeries(t, survival.values - accounted,
                          meta={"observable": "survival_residual"})
    return SurvivalDecomposition(survival=survival, contributions=contributions,
                                 per_class=per_class, residual=residual)


def fit_decay_rate(t, p, window: tuple[float, float]) -> float:
    """Least-squares slope of -log p on a time window (the decay rate)."""
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    mask = (t >= window[0]) & (t <= window[1]) & (p > 0)
    if mask.sum() < 8:
        raise ValidationError("decay window holds too few usable samples")
    slope = np.polyfit(t[mask], np.log(p[mask]), 1)[0]
    return -float(slope)
