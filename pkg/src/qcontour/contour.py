"""Closed piecewise-smooth contours in unit-speed (arc-length) form.

A contour is an ordered list of line segments and circular arcs traversed
counterclockwise, parameterized by arc length t in [0, l] so |z'(t)| = 1.
The tangent phase theta(t) satisfies e^{i theta} = z'(t); at a corner the
incoming piece's tangent is used (any fixed convention gives the same
quadrature convergence rate), except at t = 0 where the first piece's own
start tangent applies.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .numkit import SpectralInfo

_CLOSURE_TOL = 1e-12


@dataclass(frozen=True)
class LineSegment:
    start: complex
    end: complex

    @property
    def length(self) -> float:
        return abs(self.end - self.start)

    def point(self, s):
        u = (self.end - self.start) / self.length
        return self.start + np.asarray(s) * u

    def tangent_phase(self, s):
        u = (self.end - self.start) / self.length
        return np.broadcast_to(float(np.angle(u)), np.shape(s)).copy() if np.ndim(s) else float(np.angle(u))

    def start_point(self):
        return self.start

    def end_point(self):
        return self.end

    def max_abs(self) -> float:
        return max(abs(self.start), abs(self.end))

    def re_range(self):
        lo = min(self.start.real, self.end.real)
        hi = max(self.start.real, self.end.real)
        return lo, hi

    def distance_to(self, p: complex) -> float:
        d = self.end - self.start
        t = ((p - self.start).real * d.real + (p - self.start).imag * d.imag) / (
            self.length**2
        )
        t = min(max(t, 0.0), 1.0)
        return abs(p - (self.start + t * d))


@dataclass(frozen=True)
class Arc:
    """Circular arc, angles in radians; orientation +1 = counterclockwise."""

    center: complex
    radius: float
    start_angle: float
    end_angle: float
    orientation: int = 1

    @property
    def length(self) -> float:
        return self.radius * abs(self.end_angle - self.start_angle)

    def _angle(self, s):
        return self.start_angle + self.orientation * np.asarray(s) / self.radius

    def point(self, s):
        return self.center + self.radius * np.exp(1j * self._angle(s))

    def tangent_phase(self, s):
        return self._angle(s) + self.orientation * np.pi / 2

    def start_point(self):
        return complex(self.point(0.0))

    def end_point(self):
        return complex(self.point(self.length))

    def max_abs(self) -> float:
        # max |z| over the arc: either at an endpoint or where the ray from
        # the origin through the center crosses the arc.
        cands = [abs(self.start_point()), abs(self.end_point())]
        if abs(self.center) > 0:
            phi = float(np.angle(self.center))
            if self._angle_in_range(phi):
                cands.append(abs(self.center) + self.radius)
        else:
            cands.append(self.radius)
        return max(cands)

    def re_range(self):
        a0, a1 = sorted((self._angle(0.0), self._angle(self.length)))
        xs = [float(np.cos(a0)), float(np.cos(a1))]
        for k in range(int(np.floor(a0 / np.pi)), int(np.ceil(a1 / np.pi)) + 1):
            if a0 <= k * np.pi <= a1:
                xs.append(float(np.cos(k * np.pi)))
        lo = self.center.real + self.radius * min(xs)
        hi = self.center.real + self.radius * max(xs)
        return lo, hi

    def _angle_in_range(self, phi: float) -> bool:
        a0, a1 = sorted((self._angle(0.0), self._angle(self.length)))
        k = np.floor((a0 - phi) / (2 * np.pi))
        cand = phi + 2 * np.pi * k
        while cand <= a1 + 1e-15:
            if cand >= a0 - 1e-15:
                return True
            cand += 2 * np.pi
        return False

    def distance_to(self, p: complex) -> float:
        v = p - self.center
        if abs(v) == 0.0:
            return self.radius
        if self._angle_in_range(float(np.angle(v))):
            return abs(abs(v) - self.radius)
        return min(abs(p - self.start_point()), abs(p - self.end_point()))


@dataclass(frozen=True)
class Contour:
    pieces: tuple
    breaks: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        lengths = [p.length for p in self.pieces]
        if min(lengths) <= 0:
            raise errors.PreconditionError("contour piece with zero length")
        brks = np.concatenate([[0.0], np.cumsum(lengths)])
        object.__setattr__(self, "breaks", brks)
        gap = abs(self.pieces[-1].end_point() - self.pieces[0].start_point())
        if gap > _CLOSURE_TOL * max(1.0, brks[-1]):
            raise errors.PreconditionError(f"contour is not closed (gap {gap:.2e})")

    @property
    def total_length(self) -> float:
        return float(self.breaks[-1])

    @property
    def enclosing_radius(self) -> float:
        return max(p.max_abs() for p in self.pieces)

    def points_at(self, t):
        """Vectorized z(t), theta(t) with the incoming-tangent corner rule."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        # interior break hit exactly -> incoming piece (searchsorted 'left');
        # t = 0 stays on piece 0.
        idx = np.searchsorted(self.breaks[1:-1], t, side="left")
        z = np.empty(t.shape, dtype=np.complex128)
        th = np.empty(t.shape, dtype=np.float64)
        for i, piece in enumerate(self.pieces):
            sel = idx == i
            if not np.any(sel):
                continue
            s = t[sel] - self.breaks[i]
            z[sel] = piece.point(s)
            th[sel] = piece.tangent_phase(s)
        return z, th

    def max_re(self) -> float:
        return max(p.re_range()[1] for p in self.pieces)

    def min_re(self) -> float:
        return min(p.re_range()[0] for p in self.pieces)

    def distance_to(self, p: complex) -> float:
        return min(piece.distance_to(p) for piece in self.pieces)

    def fingerprint(self) -> str:
        doc = json.dumps(to_json(self), sort_keys=True)
        return hashlib.sha256(doc.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ContourNodes:
    """Equispaced arc-length discretization: t_k = l k / M."""

    contour: Contour
    m: int
    t: np.ndarray
    z: np.ndarray
    theta: np.ndarray

    @property
    def total_length(self) -> float:
        return self.contour.total_length


def make_circle(center, radius) -> Contour:
    if radius <= 0:
        raise errors.PreconditionError("radius must be positive")
    return Contour(pieces=(Arc(complex(center), float(radius), 0.0, 2 * np.pi),))


def make_truncated_disk(radius, re_min=-np.inf, re_max=np.inf) -> Contour:
    """Boundary of {|z| <= radius, re_min <= Re z <= re_max}, counterclockwise.

    Either bound may be infinite (no cut on that side); both infinite
    reproduces :func:`make_circle` exactly.  A bound tangent to the circle
    raises :class:`errors.DegenerateChord`; a strip missing the open disk
    raises :class:`errors.EmptyRegion`.
    """
    r1 = float(radius)
    if r1 <= 0:
        raise errors.PreconditionError("radius must be positive")
    if re_min >= re_max:
        raise errors.EmptyRegion("re_min >= re_max")
    if re_max <= -r1 or re_min >= r1:
        raise errors.EmptyRegion("strip does not intersect the open disk")
    if re_max == r1 or re_min == -r1:
        raise errors.DegenerateChord("strip boundary tangent to the circle")
    cut_r = re_max < r1
    cut_l = re_min > -r1
    if not cut_r and not cut_l:
        return make_circle(0.0, r1)

    pieces = []
    if cut_r and cut_l:
        phi_r = float(np.arccos(re_max / r1))
        phi_l = float(np.arccos(re_min / r1))
        y_r = r1 * np.sin(phi_r)
        y_l = r1 * np.sin(phi_l)
        pieces = [
            LineSegment(complex(re_max, -y_r), complex(re_max, y_r)),
            Arc(0j, r1, phi_r, phi_l),
            LineSegment(complex(re_min, y_l), complex(re_min, -y_l)),
            Arc(0j, r1, 2 * np.pi - phi_l, 2 * np.pi - phi_r),
        ]
    elif cut_r:
        phi_r = float(np.arccos(re_max / r1))
        y_r = r1 * np.sin(phi_r)
        pieces = [
            LineSegment(complex(re_max, -y_r), complex(re_max, y_r)),
            Arc(0j, r1, phi_r, 2 * np.pi - phi_r),
        ]
    else:
        phi_l = float(np.arccos(re_min / r1))
        y_l = r1 * np.sin(phi_l)
        pieces = [
            Arc(0j, r1, -phi_l, phi_l),
            LineSegment(complex(re_min, y_l), complex(re_min, -y_l)),
        ]
    return Contour(pieces=tuple(pieces))


def make_left_half_disk(radius) -> Contour:
    return make_truncated_disk(radius, re_max=0.0)


def discretize(c: Contour, m: int, phase_offset: float = 0.0) -> ContourNodes:
    """M equispaced arc-length nodes with tangent phases.

    ``phase_offset`` shifts every node by a fixed arc length (mod l) so
    nodes can avoid corners; the default 0 starts at the first piece's
    start point.
    """
    if m < 1:
        raise errors.PreconditionError("node count must be >= 1")
    l = c.total_length
    t = (l * np.arange(m) / m + phase_offset) % l
    z, theta = c.points_at(t)
    return ContourNodes(contour=c, m=m, t=t, z=z, theta=theta)


def sample_arclength(c: Contour, n: int):
    """n midpoint samples (z, theta) along the contour, for grid maxima."""
    t = c.total_length * (np.arange(n) + 0.5) / n
    return c.points_at(t)


@dataclass(frozen=True)
class EnclosureReport:
    enclosed: bool
    windings: np.ndarray
    min_distance: float


def verify_enclosure(c: Contour, spec, polyline=4096) -> EnclosureReport:
    """Winding number (+1 required) and exact minimum distance per eigenvalue.

    Winding numbers come from argument increments over a fine polyline;
    distances are computed exactly per piece (point-to-segment,
    point-to-arc).
    """
    eigs = spec.eigenvalues if isinstance(spec, SpectralInfo) else np.asarray(spec)
    eigs = np.atleast_1d(eigs).astype(np.complex128)
    t = c.total_length * np.arange(polyline) / polyline
    z, _ = c.points_at(t)
    zc = np.concatenate([z, z[:1]])
    windings = np.empty(len(eigs))
    for i, lam in enumerate(eigs):
        d = zc - lam
        with np.errstate(all="ignore"):
            dphi = np.angle(d[1:] / d[:-1])
        raw = float(np.sum(dphi) / (2 * np.pi))
        if not np.isfinite(raw):
            raise errors.NumericalError(
                f"eigenvalue {lam} lies on the contour polyline"
            )
        rounded = round(raw)
        if abs(raw - rounded) > 1e-6:
            raise errors.NumericalError(
                f"winding number {raw} did not round cleanly (eigenvalue {lam})"
            )
        windings[i] = rounded
    min_dist = float(min(c.distance_to(complex(lam)) for lam in eigs))
    return EnclosureReport(
        enclosed=bool(np.all(windings == 1)),
        windings=windings,
        min_distance=min_dist,
    )


# -- JSON schema -----------------------------------------------------------

def to_json(c: Contour) -> dict:
    pieces = []
    for p in c.pieces:
        if isinstance(p, LineSegment):
            pieces.append(
                {
                    "type": "segment",
                    "start": [p.start.real, p.start.imag],
                    "end": [p.end.real, p.end.imag],
                }
            )
        else:
            pieces.append(
                {
                    "type": "arc",
                    "center": [p.center.real, p.center.imag],
                    "radius": p.radius,
                    "startAngle": p.start_angle,
                    "endAngle": p.end_angle,
                    "orientation": p.orientation,
                }
            )
    return {"pieces": pieces}


def from_json(doc: dict) -> Contour:
    """Build a contour from the JSON schema; accepts the named presets
    "circle", "truncated-disk" and "left-half-disk"."""
    if "preset" in doc:
        name = doc["preset"]
        if name == "circle":
            center = doc.get("center", [0.0, 0.0])
            return make_circle(complex(center[0], center[1]), doc["radius"])
        if name == "truncated-disk":
            return make_truncated_disk(
                doc["radius"],
                doc.get("reMin", -np.inf),
                doc.get("reMax", np.inf),
            )
        if name == "left-half-disk":
            return make_left_half_disk(doc["radius"])
        raise errors.ParseError(f"unknown contour preset {name!r}")
    if "pieces" not in doc:
        raise errors.ParseError("contour document needs 'pieces' or 'preset'")
    pieces = []
    for p in doc["pieces"]:
        if p.get("type") == "segment":
            pieces.append(
                LineSegment(
                    complex(p["start"][0], p["start"][1]),
                    complex(p["end"][0], p["end"][1]),
                )
            )
        elif p.get("type") == "arc":
            pieces.append(
                Arc(
                    complex(p["center"][0], p["center"][1]),
                    float(p["radius"]),
                    float(p["startAngle"]),
                    float(p["endAngle"]),
                    int(p.get("orientation", 1)),
                )
            )
        else:
            raise errors.ParseError(f"unknown piece type {p.get('type')!r}")
    return Contour(pieces=tuple(pieces))
