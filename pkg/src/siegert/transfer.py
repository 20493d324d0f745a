"""Transfer matrices and scattering amplitudes for piecewise-constant potentials.

The 2x2 matrix maps the plane-wave amplitude pair (rightward, leftward) at
the left support edge to the pair at the right edge, with amplitudes
referenced locally as a exp(+ik(x + ell)) + b exp(-ik(x - (-ell))) on the
left and the analogous phases at +ell.  Within each constant cell the exact
fundamental solution is used, so the composition is exact for piecewise
potentials; det m == 1 holds analytically because every factor has unit
determinant.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import OverflowGuardError, ValidationError
from .model import Potential1D, piecewise_cells

__all__ = [
    "TransferMatrix",
    "ScatteringResult",
    "transfer_matrix",
    "transfer_elements",
    "scattering_amplitudes",
    "landauer_conductance",
]

# exp arguments beyond this are flagged instead of silently overflowing
EXPONENT_GUARD = 700.0
_SMALL_PHASE = 1e-6


@dataclass(frozen=True)
class TransferMatrix:
    """Edge-referenced amplitude map at fixed complex k."""

    m: np.ndarray
    k: complex

    @property
    def det(self) -> complex:
        return complex(self.m[0, 0] * self.m[1, 1] - self.m[0, 1] * self.m[1, 0])


@dataclass(frozen=True)
class ScatteringResult:
    E: float
    r: complex
    t: complex

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    @property
    def T(self) -> float:
        return abs(self.t) ** 2


def _sinc(z):
    """sin(z)/z with the removable singularity handled by series."""
    z = np.asarray(z)
    small = np.abs(z) < _SMALL_PHASE
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 - z * z / 6.0, np.sin(safe) / safe)


def _check_k(k):
    karr = np.asarray(k, dtype=complex)
    if not np.all(np.isfinite(karr.real) & np.isfinite(karr.imag)):
        raise ValidationError("k must be finite")
    if np.any(karr == 0):
        raise ValidationError("k = 0 is a branch point and is rejected")
    return karr


def transfer_elements(p: Potential1D, k):
    """Entries (m11, m12, m21, m22) broadcast over an array of wavenumbers.

    Exact piecewise composition: inside each cell the local wavenumber obeys
    q^2 = k^2 - v; the degenerate q -> 0 limit goes through the linear
    solution automatically because every entry is analytic in q^2.
    """
    karr = _check_k(k)
    cells = piecewise_cells(p)
    one = np.ones_like(karr)
    zero = np.zeros_like(karr)
    t11, t12, t21, t22 = one.copy(), zero.copy(), zero.copy(), one.copy()
    for xl, xr, v in cells:
        d = xr - xl
        q = np.sqrt(karr * karr - v)
        if np.any(np.abs((q * d).imag) > EXPONENT_GUARD):
            raise OverflowGuardError(
                f"propagation exponent exceeds {EXPONENT_GUARD} in cell ({xl}, {xr})")
        qd = q * d
        c = np.cos(qd)
        s_over = d * _sinc(qd)          # sin(q d)/q
        p11, p12 = c, s_over
        p21, p22 = -q * q * s_over, c   # -q sin(q d)
        t11, t12, t21, t22 = (p11 * t11 + p12 * t21,
                              p11 * t12 + p12 * t22,
                              p21 * t11 + p22 * t21,
                              p21 * t12 + p22 * t22)
    ik = 1j * karr
    m11 = 0.5 * (t11 + t22 + ik * t12 + t21 / ik)
    m12 = 0.5 * (t11 - t22 - ik * t12 + t21 / ik)
    m21 = 0.5 * (t11 - t22 + ik * t12 - t21 / ik)
    m22 = 0.5 * (t11 + t22 - ik * t12 - t21 / ik)
    return m11, m12, m21, m22


def transfer_matrix(p: Potential1D, k: complex) -> TransferMatrix:
    """2x2 transfer matrix of the full support at complex k."""
    kc = complex(k)
    m11, m12, m21, m22 = transfer_elements(p, kc)
    m = np.array([[complex(m11), complex(m12)], [complex(m21), complex(m22)]])
    return TransferMatrix(m, kc)


def scattering_amplitudes(p: Potential1D, E: float) -> ScatteringResult:
    """Reflection and transmission amplitudes r = B/A, t = C/A at energy E > 0."""
    E = float(E)
    if not (math.isfinite(E) and E > 0):
        raise ValidationError(f"scattering needs E > 0, got {E!r}")
    k = math.sqrt(E)
    _, _, m21, m22 = transfer_elements(p, complex(k))
    phase = cmath.exp(-2j * k * p.support_halfwidth)
    r = -complex(m21) / complex(m22) * phase
    t = phase / complex(m22)
    return ScatteringResult(E, r, t)


def landauer_conductance(p: Potential1D, E_F: float) -> float:
    """Conductance in units of the quantum 2 e^2 / h: just T at the Fermi energy."""
    return scattering_amplitudes(p, E_F).T
