"""Certified zeros of the incoming-amplitude function in a complex-k window.

The search is derivative-free first: the number of zeros inside a
rectangle is measured by the boundary winding number of f (argument
principle), sampled adaptively until every phase step is below pi/2.
Rectangles are subdivided until they isolate single zeros, Newton
refinement polishes each one, and a final winding count of one in a tiny
box certifies it.  A neighbourhood of k = 0 (branch point of E = k^2) is
always excluded from the search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BoundaryProximityError, NumericalError, ValidationError
from .model import Potential1D
from .transfer import transfer_elements

__all__ = [
    "BOUND",
    "ANTI_BOUND",
    "RESONANT",
    "ANTI_RESONANT",
    "ComplexPole",
    "SearchWindow",
    "Subdivision",
    "SearchReport",
    "siegert_function",
    "classify",
    "winding_count",
    "zero_search",
    "find_poles",
    "search_poles",
]

BOUND = "bound"
ANTI_BOUND = "anti-bound"
RESONANT = "resonant"
ANTI_RESONANT = "anti-resonant"

ORIGIN_EXCLUSION = 1e-3      # half-width of the square carved around k = 0
DEDUP_TOL = 1e-8             # below Newton terminal accuracy, above double-root scale
ISOLATION_RADIUS = 1e-6      # certification box half-width
_PHASE_LIMIT = 0.5 * math.pi
_BOUNDARY_REL_TOL = 1e-9
_SPLIT_FRACTIONS = (0.5, 0.529, 0.471, 0.554, 0.446)
_EXPAND_STEPS = (0.0, 2.3e-7, 4.7e-7, 7.9e-7, 1.3e-6)
_NEWTON_MAX_ITERS = 100
_NEWTON_STEP_REL = 1e-7


@dataclass(frozen=True)
class ComplexPole:
    """A zero of the boundary-condition function with its classification.

    ``k`` is the complex wavenumber (continuum) or Bloch phase kappa
    (lattice); ``E`` is the matching complex energy.  ``certified`` means a
    final winding count of one in an isolating box around ``k``.
    """

    k: complex
    E: complex
    kind: str
    residual: float
    newton_iters: int
    certified: bool
    note: str = ""

    @property
    def sheet(self) -> int:
        # first Riemann sheet of E corresponds to decaying exteriors
        return 1 if self.k.imag > 0 else 2


@dataclass(frozen=True)
class SearchWindow:
    re_range: tuple[float, float]
    im_range: tuple[float, float]
    max_subdivisions: int = 48
    axis_tolerance: float = 1e-9

    def __post_init__(self):
        for lo, hi in (self.re_range, self.im_range):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValidationError(f"bad window range ({lo}, {hi})")


Box = tuple[float, float, float, float]  # (re0, re1, im0, im1)


@dataclass(frozen=True)
class Subdivision:
    parent: Box
    parent_count: int
    children: tuple[Box, Box]
    child_counts: tuple[int, int]


@dataclass
class _Zero:
    z: complex
    newton_iters: int
    converged: bool
    certified: bool
    residual: float
    note: str = ""


@dataclass
class SearchReport:
    zeros: list[_Zero] = field(default_factory=list)
    subdivisions: list[Subdivision] = field(default_factory=list)
    evaluations: int = 0


def siegert_function(p: Potential1D, k):
    """Incoming amplitude, pure outgoing normalization: the m22 element.

    Scattering t(E) is proportional to 1/m22, so poles of the scattering
    amplitudes are exactly the zeros of this function.  Accepts a scalar or
    an ndarray of complex k; analytic away from k = 0.
    """
    _, _, _, m22 = transfer_elements(p, k)
    if np.isscalar(k) or np.asarray(k).ndim == 0:
        return complex(m22)
    return m22


def classify(k: complex, axis_tolerance: float = 1e-9) -> str:
    """Quadrant rule with |Re k| < axis_tolerance snapped to the imaginary axis.

    Off-axis zeros with Im k > 0 do not occur for real potentials; if such a
    point is classified anyway the rule extends by the sign of Re k.
    """
    k = complex(k)
    if abs(k.real) < axis_tolerance:
        return BOUND if k.imag > 0 else ANTI_BOUND
    return RESONANT if k.real > 0 else ANTI_RESONANT


# -- winding machinery --------------------------------------------------------

class _BoundaryProximity(Exception):
    """Internal retry signal: a zero is (too close to) the contour."""


def _perimeter_points(box: Box, s):
    """Map perimeter parameters s in [0, 1) to complex points, counterclockwise."""
    re0, re1, im0, im1 = box
    w, h = re1 - re0, im1 - im0
    per = 2.0 * (w + h)
    d = np.asarray(s) * per
    pts = np.empty(d.shape, dtype=complex)
    m0 = d < w
    m1 = (d >= w) & (d < w + h)
    m2 = (d >= w + h) & (d < 2 * w + h)
    m3 = d >= 2 * w + h
    pts[m0] = re0 + d[m0] + 1j * im0
    pts[m1] = re1 + 1j * (im0 + (d[m1] - w))
    pts[m2] = re1 - (d[m2] - w - h) + 1j * im1
    pts[m3] = re0 + 1j * (im1 - (d[m3] - 2 * w - h))
    return pts


def _winding_on_box(f, box: Box, counter, n0: int = 16, max_points: int = 40000) -> int:
    """Boundary winding number with adaptive bisection of phase steps >= pi/2."""
    s = np.linspace(0.0, 1.0, 4 * n0, endpoint=False)
    vals = f(_perimeter_points(box, s))
    counter[0] += s.size
    scale = max(1.0, float(np.median(np.abs(vals))))
    while True:
        absv = np.abs(vals)
        if absv.min() < _BOUNDARY_REL_TOL * scale:
            raise _BoundaryProximity(box)
        ratio = np.roll(vals, -1) / vals
        dphi = np.angle(ratio)
        bad = np.abs(dphi) >= _PHASE_LIMIT
        if not bad.any():
            total = float(dphi.sum())
            wind = total / (2.0 * math.pi)
            if abs(wind - round(wind)) > 0.25:
                raise _BoundaryProximity(box)
            return int(round(wind))
        if s.size > max_points:
            raise _BoundaryProximity(box)
        nxt = np.where(np.roll(s, -1) > s, np.roll(s, -1), 1.0)
        gaps = nxt - s
        if gaps[bad].min() < 1e-13:
            raise _BoundaryProximity(box)
        mids = (s[bad] + gaps[bad] / 2.0) % 1.0
        mvals = f(_perimeter_points(box, mids))
        counter[0] += mids.size
        s = np.concatenate([s, mids])
        vals = np.concatenate([vals, mvals])
        order = np.argsort(s)
        s, vals = s[order], vals[order]


def _expand_box(box: Box, amount: float) -> Box:
    re0, re1, im0, im1 = box
    pad = amount * max(re1 - re0, im1 - im0, 1.0)
    return (re0 - pad, re1 + pad, im0 - pad, im1 + pad)


def _winding_expandable(f, box: Box, counter):
    """Winding with outward perturbation retries; only used on root boxes."""
    for step in _EXPAND_STEPS:
        trial = _expand_box(box, step) if step else box
        try:
            return _winding_on_box(f, trial, counter), trial
        except _BoundaryProximity:
            continue
    raise BoundaryProximityError(
        f"zero stays within {_BOUNDARY_REL_TOL} of the contour of {box} "
        f"after {len(_EXPAND_STEPS)} perturbations")


def _split_box(box: Box, frac: float):
    re0, re1, im0, im1 = box
    if re1 - re0 >= im1 - im0:
        cut = re0 + frac * (re1 - re0)
        return (re0, cut, im0, im1), (cut, re1, im0, im1)
    cut = im0 + frac * (im1 - im0)
    return (re0, re1, im0, cut), (re0, re1, cut, im1)


def _split_with_counts(f, box: Box, counter):
    """Split a box, perturbing the cut line when a zero sits on it."""
    for frac in _SPLIT_FRACTIONS:
        c1, c2 = _split_box(box, frac)
        try:
            w1 = _winding_on_box(f, c1, counter)
            w2 = _winding_on_box(f, c2, counter)
            return (c1, w1), (c2, w2)
        except _BoundaryProximity:
            continue
    raise BoundaryProximityError(
        f"could not place a cut through {box} away from its zeros "
        f"after {len(_SPLIT_FRACTIONS)} attempts")


def _newton(f, z0: complex, counter):
    """Newton with central-difference derivative; returns (z, iters, converged)."""
    z = complex(z0)
    for it in range(1, _NEWTON_MAX_ITERS + 1):
        h = _NEWTON_STEP_REL * max(1.0, abs(z))
        fz, fp, fm = (complex(v) for v in f(np.array([z, z + h, z - h])))
        counter[0] += 3
        df = (fp - fm) / (2.0 * h)
        if df == 0:
            return z, it, False
        step = -fz / df
        z = z + step
        if abs(step) < 1e-12 * max(1.0, abs(z)):
            return z, it, True
    return z, _NEWTON_MAX_ITERS, False


def _inside(box: Box, z: complex, margin: float = 0.0) -> bool:
    re0, re1, im0, im1 = box
    return (re0 - margin <= z.real <= re1 + margin
            and im0 - margin <= z.imag <= im1 + margin)


def _carve(box: Box, points, radius: float):
    """Rectangles tiling ``box`` minus squares of half-width radius at ``points``."""
    pieces = [box]
    for pt in points:
        x, y = pt.real, pt.imag
        nxt = []
        for re0, re1, im0, im1 in pieces:
            if x + radius <= re0 or x - radius >= re1 or y + radius <= im0 or y - radius >= im1:
                nxt.append((re0, re1, im0, im1))
                continue
            if re0 < x - radius:
                nxt.append((re0, x - radius, im0, im1))
            if x + radius < re1:
                nxt.append((x + radius, re1, im0, im1))
            mid0, mid1 = max(re0, x - radius), min(re1, x + radius)
            if mid0 < mid1:
                if im0 < y - radius:
                    nxt.append((mid0, mid1, im0, y - radius))
                if y + radius < im1:
                    nxt.append((mid0, mid1, y + radius, im1))
        pieces = nxt
    return [(a, b, c, d) for a, b, c, d in pieces if b - a > 1e-12 and d - c > 1e-12]


def zero_search(f, window: SearchWindow, exclusions=(0j,),
                exclusion_radius: float = ORIGIN_EXCLUSION) -> SearchReport:
    """Locate every zero of analytic ``f`` in the window, certified by winding counts.

    ``f`` must accept an ndarray of complex points.  Squares of half-width
    ``exclusion_radius`` around each exclusion point are carved out of the
    window and never searched.
    """
    report = SearchReport()
    counter = [0]
    queue = []
    base = (window.re_range[0], window.re_range[1],
            window.im_range[0], window.im_range[1])
    for root in _carve(base, exclusions, exclusion_radius):
        count, used = _winding_expandable(f, root, counter)
        queue.append((used, count, 0))
    while queue:
        box, count, depth = queue.pop()
        if count == 0:
            continue
        if count >= 1 and depth >= window.max_subdivisions:
            z = complex(0.5 * (box[0] + box[1]), 0.5 * (box[2] + box[3]))
            res = abs(complex(f(np.array([z]))[0]))
            counter[0] += 1
            report.zeros.append(_Zero(z, 0, False, False, res,
                                      note=f"unresolved winding {count} at max depth"))
            continue
        if count == 1:
            z, iters, ok = _newton(f, complex(0.5 * (box[0] + box[1]),
                                              0.5 * (box[2] + box[3])), counter)
            diag = math.hypot(box[1] - box[0], box[3] - box[2])
            if ok and _inside(box, z, margin=1e-9 * max(1.0, diag)):
                res = abs(complex(f(np.array([z]))[0]))
                counter[0] += 1
                report.zeros.append(_Zero(z, iters, True, False, res))
                continue
            if not ok and diag < 10 * ISOLATION_RADIUS:
                res = abs(complex(f(np.array([z]))[0]))
                counter[0] += 1
                report.zeros.append(_Zero(z, iters, False, False, res,
                                          note="newton stalled in isolated box"))
                continue
            # escaped or stalled: shrink the box around the zero and retry
        (c1, w1), (c2, w2) = _split_with_counts(f, box, counter)
        if w1 + w2 != count:
            raise NumericalError(
                f"winding additivity violated on {box}: {count} != {w1} + {w2}")
        report.subdivisions.append(Subdivision(box, count, (c1, c2), (w1, w2)))
        queue.append((c1, w1, depth + 1))
        queue.append((c2, w2, depth + 1))
    _dedup_and_certify(f, report, counter)
    report.evaluations = counter[0]
    return report


def _dedup_and_certify(f, report: SearchReport, counter):
    zeros = sorted(report.zeros, key=lambda c: (c.z.real, c.z.imag, c.residual))
    kept: list[_Zero] = []
    for cand in zeros:
        if kept and abs(cand.z - kept[-1].z) < DEDUP_TOL:
            if cand.residual < kept[-1].residual:
                kept[-1] = cand
            continue
        kept.append(cand)
    for cand in kept:
        if not cand.converged:
            continue
        box = (cand.z.real - ISOLATION_RADIUS, cand.z.real + ISOLATION_RADIUS,
               cand.z.imag - ISOLATION_RADIUS, cand.z.imag + ISOLATION_RADIUS)
        try:
            wind, _ = _winding_expandable(f, box, counter)
        except BoundaryProximityError:
            cand.certified = False
            cand.note = "certification contour kept hitting a zero"
            continue
        cand.certified = wind == 1
        if wind != 1:
            cand.note = f"isolating winding count {wind}"
    report.zeros = kept


# -- public continuum operations ----------------------------------------------

def winding_count(p: Potential1D, box) -> int:
    """Number of zeros of the incoming-amplitude function inside a rectangle.

    ``box`` is (re_min, re_max, im_min, im_max); it must keep clear of
    k = 0.  Boxes whose boundary passes within reach of a zero are perturbed
    outward a few times before giving up.
    """
    re0, re1, im0, im1 = (float(v) for v in box)
    if re0 >= re1 or im0 >= im1:
        raise ValidationError(f"bad box {box}")
    if re0 <= 0 <= re1 and im0 <= 0 <= im1:
        raise ValidationError("box must exclude the branch point k = 0")

    def f(karr):
        return siegert_function(p, karr)

    counter = [0]
    count, _ = _winding_expandable(f, (re0, re1, im0, im1), counter)
    return count


def search_poles(p: Potential1D, window: SearchWindow) -> tuple[list[ComplexPole], SearchReport]:
    """find_poles plus the subdivision log, for certification-level checks."""

    def f(karr):
        return siegert_function(p, karr)

    report = zero_search(f, window, exclusions=(0j,), exclusion_radius=ORIGIN_EXCLUSION)
    poles = []
    for cand in report.zeros:
        z = cand.z
        if abs(z.real) < window.axis_tolerance:
            z = complex(0.0, z.imag)  # snap: keeps bound states off the resonant ledger
        res = abs(complex(f(np.array([z]))[0]))
        poles.append(ComplexPole(
            k=z,
            E=z * z,
            kind=classify(z, window.axis_tolerance),
            residual=res,
            newton_iters=cand.newton_iters,
            certified=cand.certified,
            note=cand.note,
        ))
    poles.sort(key=lambda q: (q.k.real, q.k.imag))
    return poles, report


def find_poles(p: Potential1D, window: SearchWindow) -> list[ComplexPole]:
    """All certified zeros of the incoming-amplitude function in the window.

    Recursive winding subdivision isolates candidate boxes, Newton refines
    from each box centre, and each pole is certified by a final winding
    count of one in an isolating box; the list is deduplicated and sorted by
    (Re k, Im k).  Non-convergent candidates are returned uncertified with a
    diagnostic note.
    """
    poles, _ = search_poles(p, window)
    return poles
