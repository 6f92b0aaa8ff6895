"""Boundary tracing, side splitting and Douglas-Peucker simplification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateBoundary, EmptyBoundary, EmptyMask
from .raster import EIGHT, BinaryMask, GrayImage, Polyline, largest_component

# clockwise (as displayed, y down) starting from west
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))


@dataclass(frozen=True)
class SimplifyParams:
    tolerance: float = 1.5
    corner_factor: float = 3.0
    corner_angle: float = 120.0
    corner_support: float = 25.0  # arc length (px) over which corner angles are measured

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if not self.corner_factor >= 1:
            raise ValueError("corner_factor must be >= 1")


@dataclass(frozen=True)
class BoundarySet:
    outer: Polyline
    inner: Polyline | None = None

    @property
    def working(self) -> Polyline:
        """The boundary used for matching: inner when present."""
        return self.inner if self.inner is not None else self.outer


@dataclass(frozen=True, eq=False)
class SideSegment:
    chain: Polyline
    classification: str  # "uniform" | "non-uniform"
    fragment_id: str = ""
    side_index: int = 0
    start: int = 0  # index of the first chain point on the boundary
    pivot: tuple | None = None  # rotation centre for 180° placements
    extent: tuple | None = None  # (width, height) of the fragment canvas

    @property
    def torn(self) -> bool:
        return self.classification == "non-uniform"


# -- tracing ---------------------------------------------------------------

def trace_boundary(mask) -> Polyline:
    """Moore-neighbour trace of the largest 8-connected component.

    Returns a closed chain of pixel centres, counter-clockwise as displayed,
    starting at the top-most then left-most boundary pixel.
    """
    bits = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    if not bits.any():
        raise EmptyMask("mask has no foreground pixels")
    comp = largest_component(bits)
    area = int(comp.sum())
    if area < 4:
        raise EmptyBoundary(f"largest component has only {area} pixel(s)")
    rows, cols = np.nonzero(comp)
    r0, c0 = rows.min(), cols.min()
    sub = np.pad(comp[r0:rows.max() + 1, c0:cols.max() + 1], 1)
    sy = int(rows[0]) - r0 + 1  # nonzero() is row-major, so rows[0] is the top row
    sx = int(cols[rows == rows[0]].min()) - c0 + 1
    start = (sx, sy)
    # entered from the west neighbour, which is background
    start_back = 0
    states = {}
    seq = []
    p, back = start, start_back
    # walk until a (pixel, backtrack) state repeats; the walk is periodic
    # from there on and one period is the closed boundary
    while (p, back) not in states:
        states[(p, back)] = len(seq)
        seq.append(p)
        for k in range(1, 9):
            d = (back + k) % 8
            dx, dy = _MOORE[d]
            q = (p[0] + dx, p[1] + dy)
            if sub[q[1], q[0]]:
                prev = (back + k - 1) % 8
                # backtrack cell expressed relative to the new pixel
                bx, by = p[0] + _MOORE[prev][0] - q[0], p[1] + _MOORE[prev][1] - q[1]
                back = _MOORE.index((bx, by))
                p = q
                break
    chain = seq[states[(p, back)]:]
    first = chain.index(start)
    chain = chain[first:] + chain[:first]
    pts = np.array(chain, dtype=np.float64)
    # Moore order is clockwise on screen; flip to counter-clockwise
    pts = np.vstack([pts[:1], pts[:0:-1]])
    pts += np.array([c0 - 1, r0 - 1], dtype=np.float64)
    if len(pts) < 2:
        raise EmptyBoundary("boundary collapsed to a single pixel")
    return Polyline(pts, closed=True)


def boundary_pixels(bits: np.ndarray) -> np.ndarray:
    """Foreground pixels with at least one background 4-neighbour (off-image
    counts as background)."""
    pad = np.pad(np.asarray(bits, dtype=bool), 1)
    core = pad[1:-1, 1:-1]
    interior = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return core & ~interior


def points_in_polygon(points, poly: Polyline) -> np.ndarray:
    """Even-odd ray casting; points exactly on an edge count as outside."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    a, b = poly.segments()
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    for (ax, ay), (bx, by) in zip(a, b):
        px, py = pts[:, 0], pts[:, 1]
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        within = ((px - min(ax, bx)) >= 0) & ((px - max(ax, bx)) <= 0) & \
                 ((py - min(ay, by)) >= 0) & ((py - max(ay, by)) <= 0)
        on_edge |= (cross == 0) & within
        cond = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (py - ay) * (bx - ax) / (by - ay)
        inside ^= cond & (px < xint)
    return inside & ~on_edge


@dataclass(frozen=True)
class RimParams:
    band: float = 3.0
    level: float = 0.8  # fraction of the way from background to paper intensity
    interior: float = 6.0


def extract_boundaries(img: GrayImage, mask: BinaryMask, rim: RimParams = RimParams()) -> BoundarySet:
    """Outer silhouette boundary plus an inner one when a dark rim is present."""
    bits = largest_component(mask.bits)
    bits = ndimage.binary_fill_holes(bits)
    outer = trace_boundary(bits)
    inner = _inner_boundary(img.pixels.astype(np.float64), bits, rim, outer)
    return BoundarySet(outer, inner)


def _inner_boundary(pix, bits, rim, outer):
    edt = ndimage.distance_transform_edt(np.pad(bits, 1))[1:-1, 1:-1]
    band = bits & (edt <= rim.band)
    interior = bits & (edt > rim.interior)
    if not band.any() or not interior.any() or bits.all():
        return None
    paper = float(np.median(pix[interior]))
    background = float(np.median(pix[~bits]))
    threshold = background + rim.level * (paper - background)
    if float(pix[band].mean()) >= threshold:
        return None
    region = bits & (pix >= threshold)
    if not region.any():
        return None
    region = ndimage.binary_fill_holes(largest_component(region))
    region = ndimage.binary_opening(region, structure=EIGHT)
    if region.sum() < 4:
        return None
    inner = trace_boundary(region)
    if not points_in_polygon(inner.points, outer).all():
        return None
    return inner


# -- Douglas-Peucker -------------------------------------------------------

def point_segment_distance(p, a, b) -> float:
    px, py = float(p[0]), float(p[1])
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    abx, aby = bx - ax, by - ay
    l2 = abx * abx + aby * aby
    if l2 == 0.0:
        return math.sqrt((px - ax) * (px - ax) + (py - ay) * (py - ay))
    t = ((px - ax) * abx + (py - ay) * aby) / l2
    if t < 0.0:
        return math.sqrt((px - ax) * (px - ax) + (py - ay) * (py - ay))
    if t > 1.0:
        return math.sqrt((px - bx) * (px - bx) + (py - by) * (py - by))
    return abs(abx * (py - ay) - aby * (px - ax)) / math.sqrt(l2)


def segment_distances(pts: np.ndarray, a, b) -> np.ndarray:
    """Vectorised ``point_segment_distance`` (same arithmetic, same results)."""
    px, py = pts[:, 0], pts[:, 1]
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    abx, aby = bx - ax, by - ay
    l2 = abx * abx + aby * aby
    da = np.sqrt((px - ax) * (px - ax) + (py - ay) * (py - ay))
    if l2 == 0.0:
        return da
    t = ((px - ax) * abx + (py - ay) * aby) / l2
    db = np.sqrt((px - bx) * (px - bx) + (py - by) * (py - by))
    perp = np.abs(abx * (py - ay) - aby * (px - ax)) / math.sqrt(l2)
    return np.where(t < 0.0, da, np.where(t > 1.0, db, perp))


def _dp_open_indices(pts: np.ndarray, tol: float) -> list[int]:
    n = len(pts)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[n - 1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j - i < 2:
            continue
        d = segment_distances(pts[i + 1:j], pts[i], pts[j])
        k = int(np.argmax(d))
        if d[k] > tol:
            k += i + 1
            keep[k] = True
            stack.append((k, j))
            stack.append((i, k))
    return np.flatnonzero(keep).tolist()


def farthest_pair(pts: np.ndarray) -> tuple[int, int]:
    """Mutually farthest vertices (i < j); ties go to the lexicographically
    smallest pair."""
    n = len(pts)
    best, bi, bj = -1.0, 0, 1
    for s in range(0, n, 512):
        blk = pts[s:s + 512]
        d2 = ((blk[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        rows = np.arange(s, s + len(blk))[:, None]
        d2[np.arange(n)[None, :] <= rows] = -1.0
        flat = int(np.argmax(d2))
        v = d2.flat[flat]
        if v > best:
            best, bi, bj = v, s + flat // n, flat % n
    return bi, bj


def simplify_indices(line: Polyline, tol: float) -> list[int]:
    pts = line.points
    if not line.closed:
        return _dp_open_indices(pts, tol)
    n = len(pts)
    if n <= 3:
        return list(range(n))
    i, j = farthest_pair(pts)
    first = _dp_open_indices(pts[i:j + 1], tol)
    wrap = np.vstack([pts[j:], pts[:i + 1]])
    second = _dp_open_indices(wrap, tol)
    kept = {i + k for k in first}
    kept.update((j + k) % n for k in second)
    return sorted(kept)


def simplify_dp(line: Polyline, params) -> Polyline:
    tol = params.tolerance if isinstance(params, SimplifyParams) else float(params)
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    idx = simplify_indices(line, tol)
    return Polyline(line.points[idx], closed=line.closed)


# -- sides -----------------------------------------------------------------

def _vertex_angle(prev, cur, nxt) -> float:
    u = prev - cur
    v = nxt - cur
    nu, nv = math.hypot(*u), math.hypot(*v)
    if nu == 0 or nv == 0:
        return 180.0
    c = float(np.dot(u, v)) / (nu * nv)
    return math.degrees(math.acos(max(-1.0, min(1.0, c))))


def max_chord_deviation(pts: np.ndarray) -> float:
    if len(pts) < 3:
        return 0.0
    return float(segment_distances(pts[1:-1], pts[0], pts[-1]).max())


def classify_chain(chain: Polyline, params: SimplifyParams) -> str:
    t = params.tolerance
    kept = _dp_open_indices(chain.points, t)
    if len(kept) > 2 or max_chord_deviation(chain.points) > 2 * t:
        return "non-uniform"
    return "uniform"


def _arc_positions(pts: np.ndarray) -> tuple[np.ndarray, float]:
    closed = np.vstack([pts, pts[:1]])
    seg = np.sqrt(((closed[1:] - closed[:-1]) ** 2).sum(axis=1))
    return np.concatenate([[0.0], np.cumsum(seg[:-1])]), float(seg.sum())


def support_angle(pts: np.ndarray, arc: np.ndarray, total: float, i: int, support: float) -> float:
    """Angle at vertex ``i`` between the boundary points ``support`` px of arc
    length behind and ahead of it (the k-cosine measure)."""
    n = len(pts)
    s = arc[i]
    back = int(np.searchsorted(arc, (s - support) % total, side="right")) - 1
    ahead = int(np.searchsorted(arc, (s + support) % total, side="left")) % n
    return _vertex_angle(pts[back % n], pts[i], pts[ahead])


def find_corners(boundary: Polyline, params: SimplifyParams) -> list[int]:
    """Boundary indices where the outline turns sharply.

    Candidates are the vertices of a coarse (``corner_factor`` x T)
    simplification; a candidate is a corner when the angle measured over
    ``corner_support`` px of arc on each side is at most ``corner_angle``.
    Measuring over a long support keeps small notches (ink cut by the tear)
    from splitting a side.  Corners closer than the support keep the
    sharper one.
    """
    pts = boundary.points
    idx = simplify_indices(boundary, params.corner_factor * params.tolerance)
    arc, total = _arc_positions(pts)
    support = min(params.corner_support, total / 6.0)
    cands = []
    for i in idx:
        ang = support_angle(pts, arc, total, i, support)
        if ang <= params.corner_angle:
            cands.append((ang, i))
    corners = []
    for ang, i in sorted(cands):
        if all(min(abs(arc[i] - arc[j]), total - abs(arc[i] - arc[j])) >= support for j in corners):
            corners.append(i)
    corners.sort()
    if len(corners) >= 2:
        return corners
    # smooth outline: fall back to the diameter endpoints
    if corners:
        c = corners[0]
        d2 = ((pts - pts[c]) ** 2).sum(axis=1)
        return sorted({c, int(np.argmax(d2))})
    i, j = farthest_pair(pts)
    return [i, j]


def split_sides(boundary: Polyline, params: SimplifyParams = SimplifyParams(),
                fragment_id: str = "", pivot=None, extent=None) -> list[SideSegment]:
    """Cut a closed boundary at its corners and classify each side."""
    if not boundary.closed:
        raise ValueError("split_sides expects a closed boundary")
    pts = boundary.points
    n = len(pts)
    if n < 4:
        raise DegenerateBoundary(f"boundary has only {n} points")
    corners = find_corners(boundary, params)
    sides = []
    for k, c in enumerate(corners):
        nxt = corners[(k + 1) % len(corners)]
        if nxt > c:
            chain = pts[c:nxt + 1]
        else:
            chain = np.vstack([pts[c:], pts[:nxt + 1]])
        poly = Polyline(chain)
        sides.append(SideSegment(poly, classify_chain(poly, params), fragment_id, k, c,
                                 pivot, extent))
    return sides
