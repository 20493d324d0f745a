"""Physical models and unit conventions shared by every other module.

Continuum potentials are piecewise constant on a finite support with
hbar = 2m = 1, so a free wave with wavenumber k carries energy E = k**2
exactly.  Lattice models are tight-binding chains coupled to two
semi-infinite uniform leads with hopping J and dispersion
E(kappa) = -2 J cos(kappa); hopping parameters enter the Hamiltonian with
a minus sign, so a model with zero onsite energies, intra_hopping == J and
g_L == g_R == J is the translationally invariant chain.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError

__all__ = [
    "UnitSystem",
    "UNITS",
    "Potential1D",
    "LatticeModel",
    "PendulumPair",
    "TimeSeries",
    "potential_at",
    "piecewise_cells",
    "pendulum_matrix",
    "pendulum_modes",
    "pendulum_evolve",
    "pendulum_state",
    "pendulum_energy",
    "square_well",
    "square_barrier",
    "single_impurity",
    "dimer_dot",
    "load_model",
    "model_to_dict",
    "model_fingerprint",
]


@dataclass(frozen=True)
class UnitSystem:
    """Fixed units hbar = 2m = 1.  Nothing in the package may rescale them."""

    hbar: float = 1.0
    two_m: float = 1.0

    def group_velocity(self, k) -> float:
        # d(k^2)/dk evaluated at Re k; this is the one unit translation the
        # rest of the package relies on (expanding-window speed).
        return 2.0 * (k.real if isinstance(k, complex) else float(k))


UNITS = UnitSystem()


def _finite_real(x, name):
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"{name} must be finite, got {x!r}")
    return x


@dataclass(frozen=True)
class Potential1D:
    """Piecewise-constant real potential on a finite support.

    ``segments`` is stored sorted by left edge.  Segments may touch or leave
    gaps but must not overlap; outside every segment the potential is
    exactly zero.  The support halfwidth is the largest |x| reached by any
    segment.
    """

    segments: tuple[tuple[float, float, float], ...]

    def __init__(self, segments):
        cleaned = []
        for seg in segments:
            xl, xr, v = seg
            xl = _finite_real(xl, "x_left")
            xr = _finite_real(xr, "x_right")
            v = _finite_real(v, "v")
            if not xl < xr:
                raise ValidationError(f"segment needs x_left < x_right, got ({xl}, {xr})")
            cleaned.append((xl, xr, v))
        cleaned.sort(key=lambda s: s[0])
        for a, b in zip(cleaned, cleaned[1:]):
            if b[0] < a[1]:
                raise ValidationError(f"segments {a} and {b} overlap")
        object.__setattr__(self, "segments", tuple(cleaned))

    @property
    def support_halfwidth(self) -> float:
        if not self.segments:
            return 0.0
        return max(max(abs(xl), abs(xr)) for xl, xr, _ in self.segments)


def potential_at(p: Potential1D, x: float) -> float:
    """Potential value at ``x``.

    A point on a shared boundary belongs to the segment with the larger
    left edge, so scanning right-to-left and taking the first hit
    implements the convention.
    """
    x = _finite_real(x, "x")
    for xl, xr, v in reversed(p.segments):
        if xl <= x <= xr:
            return v
    return 0.0


def piecewise_cells(p: Potential1D) -> tuple[tuple[float, float, float], ...]:
    """Contiguous cells (x_left, x_right, v) tiling [-ell, ell], gaps filled with v = 0."""
    ell = p.support_halfwidth
    if ell == 0.0:
        return ()
    cells = []
    cursor = -ell
    for xl, xr, v in p.segments:
        if xl > cursor:
            cells.append((cursor, xl, 0.0))
        cells.append((xl, xr, v))
        cursor = xr
    if cursor < ell:
        cells.append((cursor, ell, 0.0))
    return tuple(cells)


@dataclass(frozen=True)
class LatticeModel:
    """Tight-binding chain: N system sites between two semi-infinite leads."""

    onsite: tuple[float, ...]
    intra_hopping: tuple[float, ...]
    lead_hopping: float
    coupling_left: float
    coupling_right: float

    def __init__(self, onsite, intra_hopping, lead_hopping=1.0,
                 coupling_left=1.0, coupling_right=1.0):
        onsite = tuple(_finite_real(e, "onsite") for e in onsite)
        intra = tuple(_finite_real(t, "intra_hopping") for t in intra_hopping)
        if len(onsite) < 1:
            raise ValidationError("need at least one system site")
        if len(intra) != len(onsite) - 1:
            raise ValidationError(
                f"intra_hopping must have {len(onsite) - 1} entries, got {len(intra)}")
        J = _finite_real(lead_hopping, "lead_hopping")
        if not J > 0:
            raise ValidationError(f"lead_hopping must be positive, got {J}")
        object.__setattr__(self, "onsite", onsite)
        object.__setattr__(self, "intra_hopping", intra)
        object.__setattr__(self, "lead_hopping", J)
        object.__setattr__(self, "coupling_left", _finite_real(coupling_left, "g_L"))
        object.__setattr__(self, "coupling_right", _finite_real(coupling_right, "g_R"))

    @property
    def system_sites(self) -> int:
        return len(self.onsite)

    @property
    def band_halfwidth(self) -> float:
        return 2.0 * self.lead_hopping

    def system_matrix(self) -> np.ndarray:
        """Dense system block: diag(onsite) minus nearest-neighbour hoppings."""
        n = self.system_sites
        h = np.diag(np.asarray(self.onsite, dtype=float))
        for i, t in enumerate(self.intra_hopping):
            h[i, i + 1] = -t
            h[i + 1, i] = -t
        return h


@dataclass(frozen=True)
class PendulumPair:
    """Two identical pendulums of frequency omega joined by a spring alpha >= 0."""

    omega: float
    alpha: float

    def __init__(self, omega, alpha):
        omega = _finite_real(omega, "omega")
        alpha = _finite_real(alpha, "alpha")
        if not omega > 0:
            raise ValidationError(f"omega must be positive, got {omega}")
        if alpha < 0:
            raise ValidationError(f"alpha must be non-negative, got {alpha}")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "alpha", alpha)


@dataclass(frozen=True)
class TimeSeries:
    """Sampled observable over a strictly increasing time grid."""

    t: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise ValidationError("time grid must be a non-empty 1-d array")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValidationError("time grid must be strictly increasing")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", np.asarray(self.values))

    def is_symmetric_grid(self, rtol: float = 1e-12) -> bool:
        t = self.t
        return bool(np.allclose(t + t[::-1], 0.0, atol=rtol * max(1.0, abs(t[-1]))))


# -- coupled pendulums -------------------------------------------------------

def pendulum_matrix(p: PendulumPair) -> np.ndarray:
    """Restoring matrix M with x'' = -M x."""
    return np.array([[p.omega**2 + p.alpha, -p.alpha],
                     [-p.alpha, p.omega**2 + p.alpha]])


def pendulum_modes(p: PendulumPair):
    """Normal modes: (omega, (1,1)/sqrt2) and (sqrt(omega^2 + 2 alpha), (1,-1)/sqrt2)."""
    s = 1.0 / math.sqrt(2.0)
    sym = (p.omega, np.array([s, s]))
    anti = (math.sqrt(p.omega**2 + 2.0 * p.alpha), np.array([s, -s]))
    return sym, anti


def pendulum_state(p: PendulumPair, x0, v0, t_grid):
    """Exact positions and velocities from the mode superposition.

    Returns arrays of shape (nt, 2).
    """
    t = np.asarray(t_grid, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if x0.shape != (2,) or v0.shape != (2,):
        raise ValidationError("x0 and v0 must be 2-vectors")
    xs = np.zeros((t.size, 2))
    vs = np.zeros((t.size, 2))
    for freq, vec in pendulum_modes(p):
        a = float(vec @ x0)
        b = float(vec @ v0)
        c = a * np.cos(freq * t) + (b / freq) * np.sin(freq * t)
        cdot = -a * freq * np.sin(freq * t) + b * np.cos(freq * t)
        xs += np.outer(c, vec)
        vs += np.outer(cdot, vec)
    return xs, vs


def pendulum_evolve(p: PendulumPair, x0, v0, t_grid) -> TimeSeries:
    """Exact mode-superposition trajectory as a TimeSeries of 2-vectors."""
    t = np.asarray(t_grid, dtype=float)
    if t.size > 1 and not np.all(np.diff(t) > 0):
        raise ValidationError("time grid must be strictly increasing")
    xs, _ = pendulum_state(p, x0, v0, t)
    return TimeSeries(t, xs, meta={"observable": "pendulum_positions",
                                   "omega": p.omega, "alpha": p.alpha})


def pendulum_energy(p: PendulumPair, x, v):
    """Quadratic energy 0.5 v.v + 0.5 omega^2 x.x + 0.5 alpha (x1 - x2)^2."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    kin = 0.5 * np.sum(v * v, axis=-1)
    pot = 0.5 * p.omega**2 * np.sum(x * x, axis=-1)
    spring = 0.5 * p.alpha * (x[..., 0] - x[..., 1]) ** 2
    return kin + pot + spring


# -- presets -----------------------------------------------------------------

def square_well(depth: float, halfwidth: float = 1.0) -> Potential1D:
    """Attractive square well of depth V0 > 0 on [-ell, ell]."""
    if not depth > 0:
        raise ValidationError("well depth must be positive")
    return Potential1D([(-halfwidth, halfwidth, -depth)])


def square_barrier(height: float, halfwidth: float = 0.5) -> Potential1D:
    if not height > 0:
        raise ValidationError("barrier height must be positive")
    return Potential1D([(-halfwidth, halfwidth, height)])


def single_impurity(v0: float, J: float = 1.0, g: float = 1.0) -> LatticeModel:
    """One impurity site of energy v0 coupled to both leads with strength g."""
    return LatticeModel([v0], [], lead_hopping=J, coupling_left=g, coupling_right=g)


def dimer_dot(t_d: float = 1.0, g: float = 0.4, J: float = 1.0,
              onsite=(0.0, 0.0)) -> LatticeModel:
    """Two-site dot with internal hopping t_d, weakly coupled to the leads.

    The default (t_d = J = 1, g = 0.4) hosts a resonance pair near
    E = +-1.1 with half-width |Im E| of about 0.15, narrow enough for clean
    decay-law fits on the survival probability.
    """
    return LatticeModel(list(onsite), [t_d], lead_hopping=J,
                        coupling_left=g, coupling_right=g)


# -- model files -------------------------------------------------------------

def _reject_unknown(mapping, allowed, where):
    unknown = set(mapping) - set(allowed)
    if unknown:
        raise ValidationError(f"unknown keys {sorted(unknown)} in {where}")


def load_model(source):
    """Load a continuum or lattice model from a JSON file path or a dict.

    Schema (unknown keys rejected):
      {"continuum": {"segments": [[xl, xr, v], ...]}}
      {"lattice": {"onsite": [...], "intra_hopping": [...],
                   "J": 1.0, "gL": 1.0, "gR": 1.0}}
    """
    if isinstance(source, dict):
        doc = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ValidationError("model document must be a JSON object")
    _reject_unknown(doc, {"continuum", "lattice"}, "model document")
    if ("continuum" in doc) == ("lattice" in doc):
        raise ValidationError("model document needs exactly one of 'continuum' or 'lattice'")
    if "continuum" in doc:
        body = doc["continuum"]
        _reject_unknown(body, {"segments"}, "'continuum'")
        segments = body.get("segments", [])
        if not isinstance(segments, list):
            raise ValidationError("'segments' must be a list")
        for seg in segments:
            if not (isinstance(seg, list) and len(seg) == 3):
                raise ValidationError(f"each segment must be [xl, xr, v], got {seg!r}")
        return Potential1D([tuple(seg) for seg in segments])
    body = doc["lattice"]
    _reject_unknown(body, {"onsite", "intra_hopping", "J", "gL", "gR"}, "'lattice'")
    if "onsite" not in body:
        raise ValidationError("'lattice' requires 'onsite'")
    onsite = body["onsite"]
    intra = body.get("intra_hopping", [0.0] * (len(onsite) - 1) if len(onsite) else [])
    return LatticeModel(onsite, intra,
                        lead_hopping=body.get("J", 1.0),
                        coupling_left=body.get("gL", 1.0),
                        coupling_right=body.get("gR", 1.0))


def model_to_dict(model) -> dict:
    if isinstance(model, Potential1D):
        return {"continuum": {"segments": [list(s) for s in model.segments]}}
    if isinstance(model, LatticeModel):
        return {"lattice": {"onsite": list(model.onsite),
                            "intra_hopping": list(model.intra_hopping),
                            "J": model.lead_hopping,
                            "gL": model.coupling_left,
                            "gR": model.coupling_right}}
    raise ValidationError(f"not a model: {model!r}")


def model_fingerprint(model) -> str:
    """sha256 over the canonical JSON form; stable across runs and platforms."""
    canon = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("ascii")).hexdigest()
