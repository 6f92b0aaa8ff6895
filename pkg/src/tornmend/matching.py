"""Distance profiles between facing torn sides and side-pair selection.

Two sides are compared by resampling both at equal arc length, reversing
fragment B's traversal (facing boundaries run in opposite directions), and
taking the Euclidean distance between corresponding samples.  A pair fits
when those distances are nearly constant: the profile variance is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .contour import SideSegment
from .errors import NoCandidate, ZeroLengthChain
from .raster import Polyline

ROTATIONS = (0, 180)


@dataclass(frozen=True)
class MatchParams:
    samples: int = 64
    tau: float = 1.5
    expected_gap: float = 2.25
    anchor_weight: float = 1.0
    coarse_step: float = 4.0
    edge_support: float = 0.7
    edge_radius: float = 2.0
    arc_smoothing: float = 2.0  # vertices; see ``resample``

    def __post_init__(self):
        if self.samples < 2:
            raise ValueError("need at least 2 samples")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.expected_gap < 0 or self.anchor_weight < 0:
            raise ValueError("expected_gap and anchor_weight must be >= 0")
        if not self.coarse_step > 0:
            raise ValueError("coarse_step must be positive")
        if self.arc_smoothing < 0:
            raise ValueError("arc_smoothing must be >= 0")
        if not 0 <= self.edge_support <= 1:
            raise ValueError("edge_support must lie in [0, 1]")

    @property
    def separation(self) -> float:
        """Expected distance between facing boundary-pixel centres."""
        return 1.0 + self.expected_gap


@dataclass(frozen=True)
class Placement:
    """Rigid map of fragment B into A's frame: rotate about B's pivot, then
    translate by ``translation`` = (dx, dy)."""

    rotation: int = 0
    translation: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.rotation not in ROTATIONS:
            raise ValueError("rotation must be 0 or 180")
        object.__setattr__(self, "translation", (float(self.translation[0]), float(self.translation[1])))

    def apply(self, points, pivot=(0.0, 0.0)) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if self.rotation == 180:
            pts = 2.0 * np.asarray(pivot, dtype=np.float64) - pts
        return pts + np.asarray(self.translation)

    def inverse(self, pivot_b=(0.0, 0.0), pivot_a=(0.0, 0.0)) -> "Placement":
        """Placement of A into B's frame (rotating about A's pivot)."""
        dx, dy = self.translation
        if self.rotation == 0:
            return Placement(0, (-dx, -dy))
        # p_a = 2 c_b - p_b + t  =>  p_b = 2 c_a - p_a + (2 c_b + t - 2 c_a)
        return Placement(180, (2 * pivot_b[0] + dx - 2 * pivot_a[0],
                               2 * pivot_b[1] + dy - 2 * pivot_a[1]))

    def to_dict(self):
        return {"rotation": self.rotation, "translation": list(self.translation)}


@dataclass
class DistanceProfile:
    samples: np.ndarray

    @property
    def mean(self) -> float:
        return float(self.samples.mean())

    @property
    def variance(self) -> float:
        return float(self.samples.var())


@dataclass
class MatchScore:
    side_a: int
    side_b: int
    placement: Placement
    variance: float
    accepted: bool
    mean: float = 0.0
    edge_support: float | None = None
    reason: str = ""
    candidates: list = field(default_factory=list)

    def to_dict(self):
        return {
            "side_a": self.side_a,
            "side_b": self.side_b,
            "placement": self.placement.to_dict(),
            "variance": self.variance,
            "mean_distance": self.mean,
            "accepted": self.accepted,
            "edge_support": self.edge_support,
            "reason": self.reason,
        }


def euclidean_distance(p, q) -> float:
    dx = float(q[0]) - float(p[0])
    dy = float(q[1]) - float(p[1])
    return math.sqrt(dx * dx + dy * dy)


def resample(chain, n: int, smooth: float = 0.0) -> np.ndarray:
    """``n`` points at equal arc-length spacing, endpoints included.

    With ``smooth`` > 0, arc length is measured along a copy of the chain
    smoothed by a Gaussian of that many vertices, and the points are taken
    from the raw chain at the matching positions.  Pixel-staircase jitter
    then no longer stretches one boundary relative to its partner.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    pts = chain.points if isinstance(chain, Polyline) else np.asarray(chain, dtype=np.float64)
    if isinstance(chain, Polyline) and chain.closed:
        pts = np.vstack([pts, pts[:1]])
    ref = pts
    if smooth > 0 and len(pts) > 2:
        ref = ndimage.gaussian_filter1d(pts, smooth, axis=0, mode="nearest")
    seg = np.sqrt(((ref[1:] - ref[:-1]) ** 2).sum(axis=1))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if not total > 0:
        raise ZeroLengthChain("chain has zero arc length")
    targets = np.linspace(0.0, total, n)
    if ref is not pts:
        # positions along the raw chain, as fractional vertex indices
        idx = np.arange(len(pts), dtype=np.float64)
        u = np.interp(targets, cum, idx)
        cum, targets = idx, u
    out = np.empty((n, 2))
    out[:, 0] = np.interp(targets, cum, pts[:, 0])
    out[:, 1] = np.interp(targets, cum, pts[:, 1])
    out[0], out[-1] = pts[0], pts[-1]
    return out


def _facing_samples(side_a: SideSegment, side_b: SideSegment, rotation: int, n: int,
                    smooth: float = 0.0):
    a = resample(side_a.chain, n, smooth)
    b = resample(side_b.chain.points[::-1], n, smooth)
    pivot = side_b.pivot if side_b.pivot is not None else (0.0, 0.0)
    b = Placement(rotation).apply(b, pivot)
    return a, b


def distance_profile(side_a: SideSegment, side_b: SideSegment, placement: Placement,
                     n: int = 64, smooth: float = 0.0) -> DistanceProfile:
    a, b = _facing_samples(side_a, side_b, placement.rotation, n, smooth)
    b = b + np.asarray(placement.translation)
    d = np.sqrt(((a - b) ** 2).sum(axis=1))
    return DistanceProfile(d)


def outward_normals(points: np.ndarray, span: int = 2) -> np.ndarray:
    """Unit normals pointing out of a counter-clockwise (as displayed) boundary."""
    n = len(points)
    idx = np.arange(n)
    ahead = points[np.minimum(idx + span, n - 1)]
    behind = points[np.maximum(idx - span, 0)]
    t = ahead - behind
    norm = np.sqrt((t ** 2).sum(axis=1))
    norm[norm == 0] = 1.0
    t = t / norm[:, None]
    return np.column_stack([-t[:, 1], t[:, 0]])


def _extent(side_a: SideSegment, side_b: SideSegment) -> float:
    dims = []
    for s in (side_a, side_b):
        if s.extent is not None:
            dims.extend(s.extent)
        else:
            pts = s.chain.points
            dims.extend((pts.max(axis=0) + 1).tolist())
    return float(max(dims))


def _contact_terms(side_a, side_b, rotation, params):
    a, b = _facing_samples(side_a, side_b, rotation, params.samples, params.arc_smoothing)
    w = a - b  # D_i(t) = |t - w_i|
    normals = outward_normals(a)
    contact = (w + params.separation * normals).mean(axis=0)
    return w, contact


def alignment_cost(side_a: SideSegment, side_b: SideSegment, placement: Placement,
                   params: MatchParams = MatchParams()) -> float:
    """The objective ``align_sides`` minimises, evaluated at one placement."""
    w, contact = _contact_terms(side_a, side_b, placement.rotation, params)
    t = np.asarray(placement.translation, dtype=np.float64)[None, :]
    _, var = kernels.profile_stats(w, t)
    d = t[0] - contact
    return float(var[0] + params.anchor_weight * float(d @ d))


@dataclass
class Alignment:
    translation: tuple
    variance: float
    mean: float
    objective: float


def align_sides(side_a: SideSegment, side_b: SideSegment, rotation: int = 0,
                params: MatchParams = MatchParams()) -> Alignment:
    """Translation of B bringing the two sides into facing contact.

    Minimises ``variance(D) + w * |t - t_contact|^2`` where ``t_contact`` is
    the least-squares translation putting every B sample at the expected
    separation along A's outward normal.  The variance term alone is flat
    along whole families of translations (congruent sides give zero variance
    at any offset; far-apart sides give vanishing variance), so the contact
    term pins the solution.  Search: coarse grid over +-W/2 at
    ``coarse_step`` px, then greedy 1 px and 0.25 px refinement.
    """
    w, contact = _contact_terms(side_a, side_b, rotation, params)
    lam = params.anchor_weight

    def objective(offsets):
        _, var = kernels.profile_stats(w, offsets)
        d = offsets - contact
        return var + lam * (d * d).sum(axis=1), var

    half = max(_extent(side_a, side_b) / 2.0, float(np.abs(contact).max()) + 2 * params.coarse_step)
    steps = np.arange(-math.floor(half / params.coarse_step), math.floor(half / params.coarse_step) + 1)
    axis = steps * params.coarse_step
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    score, _ = objective(grid)
    best = _pick(grid, score)

    for step in (1.0, 0.25):
        cur_score = objective(best[None, :])[0][0]
        for _ in range(400):
            nb = best + step * np.array([[dx, dy] for dx in (-1, 0, 1) for dy in (-1, 0, 1)
                                         if dx or dy], dtype=float)
            nb_score, _ = objective(nb)
            k = _pick_index(nb, nb_score)
            if nb_score[k] < cur_score:
                best, cur_score = nb[k], nb_score[k]
            else:
                break
    mean, var = kernels.profile_stats(w, best[None, :])
    obj = float(objective(best[None, :])[0][0])
    return Alignment((float(best[0]), float(best[1])), float(var[0]), float(mean[0]), obj)


def _pick_index(points, score):
    # lowest score, then smallest |t|, then lexicographic (dx, dy)
    order = np.lexsort((points[:, 1], points[:, 0], (points ** 2).sum(axis=1), score))
    return int(order[0])


def _pick(points, score):
    return points[_pick_index(points, score)].copy()


class EdgeSupport:
    """Fraction of side samples lying near detected edge pixels."""

    def __init__(self, edges: np.ndarray, radius: float):
        self.radius = radius
        self.shape = edges.shape
        if edges.any():
            self.dist = ndimage.distance_transform_edt(~edges)
        else:
            self.dist = np.full(edges.shape, np.inf)

    def fraction(self, points: np.ndarray) -> float:
        xs = np.clip(np.rint(points[:, 0]).astype(int), 0, self.shape[1] - 1)
        ys = np.clip(np.rint(points[:, 1]).astype(int), 0, self.shape[0] - 1)
        return float((self.dist[ys, xs] <= self.radius).mean())


def select_pair(sides_a, sides_b, flips=ROTATIONS, params: MatchParams = MatchParams(),
                edges_a: np.ndarray | None = None, edges_b: np.ndarray | None = None,
                same_silhouette: bool = False) -> MatchScore:
    """Best (side_a, side_b, rotation) over all torn-side combinations.

    ``accepted`` requires variance <= tau^2 and, when edge maps are given,
    that at least ``edge_support`` of the matched samples sit near edges.
    """
    torn_a = [s for s in sides_a if s.torn]
    torn_b = [s for s in sides_b if s.torn]
    if not torn_a:
        raise NoCandidate("fragment A has no non-uniform side")
    if not torn_b:
        raise NoCandidate("fragment B has no non-uniform side")
    rows = []
    for sa in torn_a:
        for sb in torn_b:
            for rot in sorted(set(flips)):
                al = align_sides(sa, sb, rot, params)
                rows.append({"side_a": sa.side_index, "side_b": sb.side_index, "rotation": rot,
                             "translation": list(al.translation), "variance": al.variance,
                             "mean_distance": al.mean, "_a": sa, "_b": sb})
    rows.sort(key=lambda r: (r["variance"], r["side_a"], r["side_b"], r["rotation"]))
    limit = params.tau ** 2
    ea = EdgeSupport(edges_a, params.edge_radius) if edges_a is not None else None
    eb = EdgeSupport(edges_b, params.edge_radius) if edges_b is not None else None
    for r in rows:
        r["accepted"] = r["variance"] <= limit
        r["reason"] = "" if r["accepted"] else "variance above tau^2"
        r["edge_support"] = None
        if r["accepted"] and ea is not None and eb is not None:
            a = resample(r["_a"].chain, params.samples)
            b = resample(r["_b"].chain, params.samples)
            support = min(ea.fraction(a), eb.fraction(b))
            r["edge_support"] = support
            if support < params.edge_support:
                r["accepted"] = False
                r["reason"] = "matched sides lack edge support"
        if r["accepted"] and same_silhouette and r["rotation"] == 0 \
                and math.hypot(*r["translation"]) < 1.0:
            r["accepted"] = False
            r["reason"] = "self-match"
    best = rows[0]
    table = [{k: v for k, v in r.items() if not k.startswith("_")} for r in rows]
    return MatchScore(best["side_a"], best["side_b"],
                      Placement(best["rotation"], tuple(best["translation"])),
                      best["variance"], best["accepted"], best["mean_distance"],
                      best["edge_support"], best["reason"], table)
