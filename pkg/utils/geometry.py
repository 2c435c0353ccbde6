from typing import List, Tuple

import numpy as np

from models.contour import Arc, BranchSegment, Contour, Segment

TWO_PI = 2.0 * np.pi


def cross(a: complex, b: complex) -> float:
    """z-component of the planar cross product"""
    return (a.conjugate() * b).imag


def point_segment_distance(z: complex, a: complex, b: complex) -> float:
    d = b - a
    if d == 0:
        return abs(z - a)
    u = min(1.0, max(0.0, ((z - a) * d.conjugate()).real / abs(d) ** 2))
    return abs(z - (a + u * d))


def segments_cross(a1, b1, a2, b2):
    """Fractions (u1, u2) where segments a1b1 and a2b2 meet, or None"""
    r, s = b1 - a1, b2 - a2
    denom = cross(r, s)
    if abs(denom) <= 1e-300:
        return None
    u1 = cross(a2 - a1, s) / denom
    u2 = cross(a2 - a1, r) / denom
    if 0.0 <= u1 <= 1.0 and 0.0 <= u2 <= 1.0:
        return u1, u2
    return None


def segment_distance(a1, b1, a2, b2) -> float:
    if segments_cross(a1, b1, a2, b2) is not None:
        return 0.0
    return min(point_segment_distance(a1, a2, b2), point_segment_distance(b1, a2, b2),
               point_segment_distance(a2, a1, b1), point_segment_distance(b2, a1, b1))


def arc_fraction(arc: Arc, z: complex):
    """Fraction along the arc of the point z on its circle, or None when outside the swept range"""
    phi = np.angle(z - arc.center)
    span = arc.theta1 - arc.theta0
    if span == 0:
        return None
    if span > 0:
        u = ((phi - arc.theta0) % TWO_PI) / span
    else:
        u = ((arc.theta0 - phi) % TWO_PI) / (-span)
    return u if u <= 1.0 else None


def _tangent(piece, u: float) -> complex:
    if isinstance(piece, Arc):
        z = piece.points(u)
        return complex(1j * np.sign(piece.theta1 - piece.theta0) * (z - piece.center))
    return piece.end - piece.start


def _circle_line(center, radius, a, b):
    d = b - a
    f = a - center
    A = abs(d) ** 2
    B = 2.0 * (d.conjugate() * f).real
    C = abs(f) ** 2 - radius ** 2
    disc = B * B - 4 * A * C
    if A == 0 or disc <= 0:
        return []
    root = np.sqrt(disc)
    return [(-B - root) / (2 * A), (-B + root) / (2 * A)]


def _circle_circle(c1, r1, c2, r2):
    d = abs(c2 - c1)
    if d == 0 or d > r1 + r2 or d < abs(r1 - r2):
        return []
    a = (r1 ** 2 - r2 ** 2 + d ** 2) / (2 * d)
    h2 = r1 ** 2 - a ** 2
    if h2 <= 0:
        return []
    h = np.sqrt(h2)
    unit = (c2 - c1) / d
    base = c1 + a * unit
    return [base + 1j * h * unit, base - 1j * h * unit]


def piece_crossings(p, q) -> List[Tuple[float, float, complex, int]]:
    """Transversal crossings of two pieces as (u_p, u_q, point, sign).

    sign is +1 when the tangents (p, q) are positively oriented.
    """
    found = []
    p_arc, q_arc = isinstance(p, Arc), isinstance(q, Arc)
    if not p_arc and not q_arc:
        hit = segments_cross(p.start, p.end, q.start, q.end)
        if hit is not None:
            found.append((hit[0], hit[1], p.start + hit[0] * (p.end - p.start)))
    elif p_arc and q_arc:
        for z in _circle_circle(p.center, p.radius, q.center, q.radius):
            up, uq = arc_fraction(p, z), arc_fraction(q, z)
            if up is not None and uq is not None:
                found.append((up, uq, z))
    else:
        arc, seg = (p, q) if p_arc else (q, p)
        for t in _circle_line(arc.center, arc.radius, seg.start, seg.end):
            if 0.0 <= t <= 1.0:
                z = seg.start + t * (seg.end - seg.start)
                ua = arc_fraction(arc, z)
                if ua is not None:
                    found.append((ua, t, z) if p_arc else (t, ua, z))
    out = []
    for up, uq, z in found:
        sign = cross(_tangent(p, up), _tangent(q, uq))
        if sign != 0:
            out.append((float(up), float(uq), complex(z), 1 if sign > 0 else -1))
    return out


def stadium(a: complex, b: complex, radius: float, sheet: int = 0, label: str = "") -> Contour:
    """Counter-clockwise stadium around the segment ab"""
    u = (b - a) / abs(b - a)
    normal = 1j * u
    base = np.angle(-normal)
    pieces = (
        Segment(a - normal * radius, b - normal * radius, sheet),
        Arc(b, radius, base, base + np.pi, sheet),
        Segment(b + normal * radius, a + normal * radius, sheet),
        Arc(a, radius, base + np.pi, base + 2 * np.pi, sheet),
    )
    return Contour(pieces, closed=True, label=label)


def circle(center: complex, radius: float, sheet: int = 0, start_angle: float = 0.0, label: str = "") -> Contour:
    return Contour((Arc(center, radius, start_angle, start_angle + TWO_PI, sheet),), closed=True, label=label)


def detoured_line(start: complex, end: complex, obstacles, start_branch: bool = False,
                  end_branch: bool = False):
    """Straight pieces from start to end with shorter-arc detours around obstacle discs.

    obstacles: iterable of (center, radius). A tie between both arcs goes
    counter-clockwise. Returns the pieces and the obstacle discs that
    contain an endpoint (callers decide how to report those).
    """
    d = end - start
    events = []
    blocked = []
    for center, radius in obstacles:
        hits = _circle_line(center, radius, start, end)
        if len(hits) < 2:
            continue
        u1, u2 = hits
        if u2 <= 0.0 or u1 >= 1.0:
            continue
        if u1 < 0.0 or u2 > 1.0:
            blocked.append(center)
            continue
        events.append((u1, u2, center, radius))
    events.sort(key=lambda e: e[0])

    lines = []
    arcs = []
    cursor = 0.0
    for u1, u2, center, radius in events:
        lines.append((start + cursor * d, start + u1 * d))
        a, b = start + u1 * d, start + u2 * d
        th1 = float(np.angle(a - center))
        delta = (float(np.angle(b - center)) - th1 + np.pi) % TWO_PI - np.pi
        if abs(abs(delta) - np.pi) < 1e-12:
            delta = np.pi
        arcs.append(Arc(center, radius, th1, th1 + delta))
        cursor = u2
    lines.append((start + cursor * d, end))

    pieces = []
    for k, (a, b) in enumerate(lines):
        first, last = k == 0, k == len(lines) - 1
        if first and last and start_branch and end_branch:
            mid = 0.5 * (a + b)
            pieces += [BranchSegment(a, mid, True), BranchSegment(b, mid, False)]
        elif first and start_branch:
            pieces.append(BranchSegment(a, b, True))
        elif last and end_branch:
            pieces.append(BranchSegment(b, a, False))
        elif abs(b - a) > 1e-15 * max(1.0, abs(a)):
            pieces.append(Segment(a, b))
        if k < len(arcs):
            pieces.append(arcs[k])
    return pieces, blocked
