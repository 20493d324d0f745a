"""Energy-dependent effective Hamiltonians on the lattice and their poles.

The two semi-infinite leads are eliminated analytically: a uniform lead of
hopping J contributes Sigma(E) = (E -+ sqrt(E^2 - 4 J^2))/2 on its contact
site, the unique solution of Sigma = J^2 / (E - Sigma) on the selected
branch.  The retarded branch is the physical sheet for Im E >= 0 and the
continuation through the band cut for Im E < 0 (the advanced branch is the
mirror image), so resonance hunting below the real axis needs no explicit
sheet bookkeeping beyond the seed's half-plane.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import (BandEdgeError, ExceptionalPointError, NewtonDivergenceError,
                         ValidationError)
from .model import LatticeModel
from .poles import (ANTI_BOUND, ANTI_RESONANT, BOUND, RESONANT, ComplexPole,
                    SearchReport, SearchWindow, zero_search)

__all__ = [
    "RETARDED",
    "ADVANCED",
    "SelfEnergy",
    "EffectiveHamiltonian",
    "BiorthogonalSystem",
    "ExpansionResult",
    "NonlinearEigResult",
    "lead_self_energy",
    "effective_hamiltonian",
    "solve_nonlinear_eig",
    "lattice_siegert_poles",
    "lattice_boundary_function",
    "default_lattice_window",
    "biorthogonalize",
    "biorthogonal_expand",
    "energy_from_bloch",
]

RETARDED = "ret"
ADVANCED = "adv"

BAND_EDGE_TOL = 1e-12
_SOLVE_MAX_ITERS = 200
_COND_LIMIT = 1e8


@dataclass(frozen=True)
class SelfEnergy:
    branch: str
    E: complex
    value: complex


@dataclass(frozen=True)
class EffectiveHamiltonian:
    E: complex
    branch: str
    matrix: np.ndarray


@dataclass(frozen=True)
class BiorthogonalSystem:
    """Right eigenvectors (columns), left covectors (rows), eigenvalues."""

    right: np.ndarray
    left: np.ndarray
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class ExpansionResult:
    coefficients: np.ndarray
    biorthogonal_probability: float   # sum |f_n|^2
    square_modulus: float             # ||f||^2, the closed-system definition
    reconstruction_residual: float


@dataclass(frozen=True)
class NonlinearEigResult:
    E: complex
    residual: float
    iterations: int
    branch: str


def _check_branch(branch):
    if branch not in (RETARDED, ADVANCED):
        raise ValidationError(f"branch must be '{RETARDED}' or '{ADVANCED}', got {branch!r}")


def _sqrt_offband(E: complex, J: float) -> complex:
    # sqrt(E - 2J) sqrt(E + 2J) carries its only cut along the band [-2J, 2J]
    return cmath.sqrt(E - 2 * J) * cmath.sqrt(E + 2 * J)


def lead_self_energy(E: complex, J: float, branch: str) -> SelfEnergy:
    """Contact self-energy of one semi-infinite lead at probe energy E.

    On the real axis the value is the prescription limit: from above for the
    retarded branch, from below for the advanced one.  Off the real axis the
    branch is continued through the band cut, so retarded with Im E < 0
    lands on the second sheet where the resonance zoo lives.  Band edges are
    rejected as singular.
    """
    _check_branch(branch)
    E = complex(E)
    J = float(J)
    if not J > 0:
        raise ValidationError(f"J must be positive, got {J}")
    if abs(E - 2 * J) < BAND_EDGE_TOL or abs(E + 2 * J) < BAND_EDGE_TOL:
        raise BandEdgeError(f"E = {E} sits on a band edge (+-{2 * J})")
    sign = 1.0 if branch == RETARDED else -1.0
    if E.imag == 0.0:
        x = E.real
        if abs(x) < 2 * J:
            value = 0.5 * (x - sign * 1j * math.sqrt(4 * J * J - x * x))
        else:
            value = complex(0.5 * (x - math.copysign(math.sqrt(x * x - 4 * J * J), x)))
        return SelfEnergy(branch, E, value)
    w = _sqrt_offband(E, J)
    physical_side = E.imag > 0 if branch == RETARDED else E.imag < 0
    value = 0.5 * (E - w) if physical_side else 0.5 * (E + w)
    return SelfEnergy(branch, E, value)


def _sigma_on_sheet(E: complex, J: float, sheet: int) -> complex:
    """Self-energy as a fixed single-valued function of one Riemann sheet.

    Sheet 1 (physical, decaying exteriors) carries its cut on the band;
    sheet 2 is the through-the-band continuation, analytic across the
    off-band real axis where anti-bound poles live.
    """
    if abs(E - 2 * J) < BAND_EDGE_TOL or abs(E + 2 * J) < BAND_EDGE_TOL:
        raise BandEdgeError(f"E = {E} sits on a band edge (+-{2 * J})")
    w = _sqrt_offband(complex(E), J)
    return 0.5 * (E - w) if sheet == 1 else 0.5 * (E + w)


def _seed_sheet(branch: str, seed: complex) -> int:
    if branch == RETARDED:
        return 2 if seed.imag < 0 else 1
    return 2 if seed.imag > 0 else 1


def effective_hamiltonian(m: LatticeModel, E: complex, branch: str,
                          sheet: int | None = None) -> EffectiveHamiltonian:
    """System block plus (g/J)^2 Sigma(E) on the two contact diagonal entries.

    With ``sheet`` given, the self-energy is evaluated on that fixed sheet
    instead of the branch's prescription-limit rule (used by the pole
    solvers, whose iterates must see a single analytic function).
    """
    if sheet is None:
        sigma = lead_self_energy(E, m.lead_hopping, branch).value
    else:
        _check_branch(branch)
        sigma = _sigma_on_sheet(E, m.lead_hopping, sheet)
    h = m.system_matrix().astype(complex)
    scale = m.lead_hopping ** 2
    h[0, 0] += (m.coupling_left ** 2 / scale) * sigma
    h[-1, -1] += (m.coupling_right ** 2 / scale) * sigma
    return EffectiveHamiltonian(complex(E), branch, h)


def _determinant(m: LatticeModel, E: complex, branch: str, sheet: int):
    h = effective_hamiltonian(m, E, branch, sheet=sheet).matrix
    d = complex(np.linalg.det(E * np.eye(m.system_sites) - h))
    scale = max(1.0, float(np.linalg.norm(h))) ** m.system_sites
    return d, scale


def solve_nonlinear_eig(m: LatticeModel, branch: str, seed: complex,
                        sheet: int | None = None) -> NonlinearEigResult:
    """Newton on det(E - H_eff(E)) from a complex seed.

    The seed picks the sheet once and the whole iteration stays on it: on
    the retarded branch a seed with Im E < 0 hunts second-sheet poles
    (resonances, anti-bound states) while real or upper seeds hunt
    physical-sheet bound states; the advanced branch mirrors this.  The
    derivative is a central difference, which is exact enough for the
    analytic determinant.
    """
    _check_branch(branch)
    E = complex(seed)
    if sheet is None:
        sheet = _seed_sheet(branch, E)
    if sheet not in (1, 2):
        raise ValidationError(f"sheet must be 1 or 2, got {sheet!r}")
    trace = [E]
    for it in range(1, _SOLVE_MAX_ITERS + 1):
        d, scale = _determinant(m, E, branch, sheet)
        h = 1e-7 * max(1.0, abs(E))
        dp, _ = _determinant(m, E + h, branch, sheet)
        dm, _ = _determinant(m, E - h, branch, sheet)
        dd = (dp - dm) / (2 * h)
        if dd == 0:
            raise NewtonDivergenceError(f"flat determinant at E = {E}", trace)
        step = -d / dd
        E = E + step
        trace.append(E)
        if abs(step) < 1e-12 * max(1.0, abs(E)):
            d, scale = _determinant(m, E, branch, sheet)
            if abs(d) < 1e-12 * scale:
                return NonlinearEigResult(E, abs(d), it, branch)
    raise NewtonDivergenceError(
        f"no convergence from seed {seed} after {_SOLVE_MAX_ITERS} iterations", trace)


# -- lattice boundary-condition route ----------------------------------------

def energy_from_bloch(kappa: complex, J: float) -> complex:
    return -2.0 * J * np.cos(kappa)


def lattice_boundary_function(m: LatticeModel, kappa):
    """Determinant whose zeros are the lattice Siegert states.

    The exterior ansatz psi proportional to e^{i kappa |site|} folds each
    lead onto its contact site as -(g^2/J) e^{i kappa}; the resulting
    N x N determinant is entire in kappa, so winding counts are exact.
    """
    kappa = np.asarray(kappa, dtype=complex)
    scalar = kappa.ndim == 0
    kap = np.atleast_1d(kappa)
    J = m.lead_hopping
    lam = np.exp(1j * kap)
    energy = -J * (lam + 1.0 / lam)
    n = m.system_sites
    h = m.system_matrix()
    vals = np.empty(kap.shape, dtype=complex)
    for i, (lam_i, e_i) in enumerate(zip(lam, energy)):
        a = e_i * np.eye(n, dtype=complex) - h
        a[0, 0] += (m.coupling_left ** 2 / J) * lam_i
        a[-1, -1] += (m.coupling_right ** 2 / J) * lam_i
        vals[i] = np.linalg.det(a)
    return complex(vals[0]) if scalar else vals


def default_lattice_window(im_halfwidth: float = 2.5) -> SearchWindow:
    """One full Bloch period with the Re kappa = 0 and pi lines interior."""
    return SearchWindow((-0.5 * math.pi, 1.5 * math.pi),
                        (-im_halfwidth, im_halfwidth))


def _wrap_re(x: float) -> float:
    wrapped = math.fmod(x + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def _classify_lattice(kappa: complex, J: float, axis_tol: float) -> str:
    a = kappa.real
    if abs(a) < axis_tol or abs(abs(a) - math.pi) < axis_tol:
        return BOUND if kappa.imag > 0 else ANTI_BOUND
    im_E = 2.0 * J * math.sin(a) * math.sinh(kappa.imag)
    if im_E < 0:
        return RESONANT
    if im_E > 0:
        return ANTI_RESONANT
    return RESONANT if a > 0 else ANTI_RESONANT


def lattice_siegert_poles(m: LatticeModel, window: SearchWindow | None = None
                          ) -> list[ComplexPole]:
    poles, _ = search_lattice_poles(m, window)
    return poles


def search_lattice_poles(m: LatticeModel, window: SearchWindow | None = None
                         ) -> tuple[list[ComplexPole], SearchReport]:
    """Winding + Newton search for kappa roots; E = -2 J cos(kappa).

    Reported kappa is wrapped into (-pi, pi]; roots snapped onto the
    Re kappa = 0 or +-pi lines are the (possibly staggered) bound and
    anti-bound families.  A fully decoupled system has no states with
    nonzero exterior amplitude, so it returns an empty list up front.
    """
    if window is None:
        window = default_lattice_window()
    if m.coupling_left == 0.0 and m.coupling_right == 0.0:
        return [], SearchReport()

    def f(kap):
        return lattice_boundary_function(m, kap)

    carve = [complex(x, 0.0) for x in
             (-math.pi, 0.0, math.pi, 2.0 * math.pi, 3.0 * math.pi)
             if window.re_range[0] - 0.1 <= x <= window.re_range[1] + 0.1]
    report = zero_search(f, window, exclusions=tuple(carve))
    J = m.lead_hopping
    poles = []
    seen = []
    for cand in report.zeros:
        z = complex(_wrap_re(cand.z.real), cand.z.imag)
        if abs(z.real) < window.axis_tolerance:
            z = complex(0.0, z.imag)
        elif abs(z.real - math.pi) < window.axis_tolerance:
            z = complex(math.pi, z.imag)
        elif abs(z.real + math.pi) < window.axis_tolerance:
            z = complex(math.pi, z.imag)  # -pi and pi are the same line
        if any(abs(z - s) < 1e-8 for s in seen):
            continue
        seen.append(z)
        res = abs(lattice_boundary_function(m, z))
        poles.append(ComplexPole(
            k=z,
            E=complex(energy_from_bloch(z, J)),
            kind=_classify_lattice(z, J, window.axis_tolerance),
            residual=res,
            newton_iters=cand.newton_iters,
            certified=cand.certified,
            note=cand.note,
        ))
    poles.sort(key=lambda q: (q.k.real, q.k.imag))
    return poles, report


# -- biorthogonal machinery ----------------------------------------------------

def biorthogonalize(matrix, cond_limit: float = _COND_LIMIT) -> BiorthogonalSystem:
    """Right/left eigenpairs normalized to phi_m . psi_n = delta_mn.

    Refuses matrices whose eigenvector basis is ill-conditioned (close to an
    exceptional point), where the expansion is meaningless.
    """
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("matrix must be square")
    w, vl, vr = scipy.linalg.eig(a, left=True, right=True)
    cond = np.linalg.cond(vr)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ExceptionalPointError(
            f"eigenvector condition number {cond:.3e} exceeds {cond_limit:.1e}")
    overlaps = np.sum(vl.conj() * vr, axis=0)
    if np.any(np.abs(overlaps) < 1e-300):
        raise ExceptionalPointError("left/right eigenvector pair is orthogonal")
    left = (vl.conj() / overlaps).T  # rows: phi_n with phi_n . psi_n = 1
    return BiorthogonalSystem(right=vr, left=left, eigenvalues=w)


def biorthogonal_expand(matrix, f) -> ExpansionResult:
    """Expand f over the right eigenvectors; report both probability readings.

    The biorthogonal probability sum |f_n|^2 and the plain square modulus
    ||f||^2 are both returned; they agree exactly for Hermitian matrices.
    """
    f = np.asarray(f, dtype=complex)
    system = biorthogonalize(matrix)
    if f.shape != (system.right.shape[0],):
        raise ValidationError("vector length does not match the matrix size")
    coeffs = system.left @ f
    recon = system.right @ coeffs
    return ExpansionResult(
        coefficients=coeffs,
        biorthogonal_probability=float(np.sum(np.abs(coeffs) ** 2)),
        square_modulus=float(np.sum(np.abs(f) ** 2)),
        reconstruction_residual=float(np.linalg.norm(recon - f)),
    )
