"""Bounding boxes, placement of fragment B next to A, seam blending, and the
end-to-end ``stitch`` pipeline."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import canny as canny_mod
from .contour import extract_boundaries, split_sides
from .diffusion import anisotropic_diffuse
from .errors import EmptyMask, PlacementOutOfRange
from .matching import MatchScore, Placement, outward_normals, resample, select_pair
from .orient import normalize_pair
from .raster import BinaryMask, Fragment, GrayImage, Polyline

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class Rect:
    first_row: int
    last_row: int
    first_col: int
    last_col: int

    def __post_init__(self):
        if self.first_row > self.last_row or self.first_col > self.last_col:
            raise ValueError("empty rectangle")

    @property
    def height(self) -> int:
        return self.last_row - self.first_row + 1

    @property
    def width(self) -> int:
        return self.last_col - self.first_col + 1


def bounding_box(mask) -> Rect:
    """First/last foreground row from a row scan, first/last column from a
    column scan."""
    bits = mask.bits if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(bits.any(axis=1))
    if rows.size == 0:
        raise EmptyMask("no foreground pixels")
    cols = np.flatnonzero(bits.any(axis=0))
    return Rect(int(rows[0]), int(rows[-1]), int(cols[0]), int(cols[-1]))


@dataclass(frozen=True)
class BlendParams:
    feather_width: float = 3.0

    def __post_init__(self):
        if not self.feather_width >= 0:
            raise ValueError("feather width must be >= 0")


@dataclass
class Canvas:
    """Both fragments laid out in a common frame.

    ``origin`` is the position of canvas pixel (0, 0) in fragment A's frame.
    ``image`` is the hard composite (B over A, uncovered pixels white).
    """

    image: GrayImage
    alpha_a: np.ndarray
    alpha_b: np.ndarray
    seam: Polyline
    layer_a: np.ndarray
    layer_b: np.ndarray
    origin: tuple = (0, 0)
    seam_normals: np.ndarray | None = None

    @property
    def gap_mask(self) -> np.ndarray:
        return (self.alpha_a <= 0) & (self.alpha_b <= 0)


def _round(v: float) -> int:
    return int(np.floor(v + 0.5))


def _dedupe(points: np.ndarray) -> np.ndarray:
    keep = np.ones(len(points), dtype=bool)
    keep[1:] = np.any(points[1:] != points[:-1], axis=1)
    return points[keep]


def place(frag_a: Fragment, frag_b: Fragment, placement: Placement, side_a=None, side_b=None,
          samples: int = 64, margin: int = 2, smooth: float = 0.0) -> Canvas:
    """Lay B over A's frame with the (integer-rounded) placement."""
    tx, ty = (_round(v) for v in placement.translation)
    limit = 4 * max(frag_a.extent + frag_b.extent)
    if abs(tx) > limit or abs(ty) > limit:
        raise PlacementOutOfRange(f"translation ({tx}, {ty}) exceeds {limit} px")
    img_b, mask_b = frag_b.image.pixels, frag_b.mask.bits
    if placement.rotation == 180:
        img_b, mask_b = np.rot90(img_b, 2), np.rot90(mask_b, 2)
    ra = bounding_box(frag_a.mask)
    rb = bounding_box(mask_b)
    y0 = min(ra.first_row, rb.first_row + ty) - margin
    x0 = min(ra.first_col, rb.first_col + tx) - margin
    y1 = max(ra.last_row, rb.last_row + ty) + margin
    x1 = max(ra.last_col, rb.last_col + tx) + margin
    shape = (y1 - y0 + 1, x1 - x0 + 1)

    def lay(pix, bits, ox, oy):
        layer = np.full(shape, 255, dtype=np.uint8)
        alpha = np.zeros(shape)
        h, w = bits.shape
        # intersection of the source rectangle with the canvas
        cy0, cx0 = max(oy - y0, 0), max(ox - x0, 0)
        cy1, cx1 = min(oy - y0 + h, shape[0]), min(ox - x0 + w, shape[1])
        if cy0 >= cy1 or cx0 >= cx1:
            return layer, alpha
        sy0, sx0 = cy0 - (oy - y0), cx0 - (ox - x0)
        src = (slice(sy0, sy0 + cy1 - cy0), slice(sx0, sx0 + cx1 - cx0))
        dst = (slice(cy0, cy1), slice(cx0, cx1))
        m = bits[src]
        layer[dst][m] = pix[src][m]
        alpha[dst][m] = 1.0
        return layer, alpha

    layer_a, alpha_a = lay(frag_a.image.pixels, frag_a.mask.bits, 0, 0)
    layer_b, alpha_b = lay(img_b, mask_b, tx, ty)
    composite = np.where(alpha_b > 0, layer_b, layer_a)

    seam, normals = None, None
    if side_a is not None and side_b is not None:
        a = resample(side_a.chain, samples, smooth)
        b = resample(side_b.chain.points[::-1], samples, smooth)
        b = Placement(placement.rotation, (tx, ty)).apply(b, frag_b.pivot)
        mid = _dedupe((a + b) / 2.0 - np.array([x0, y0]))
        if len(mid) >= 2:
            seam = Polyline(mid)
            normals = outward_normals(a)
    if seam is None:
        seam = Polyline(np.array([[0.0, 0.0], [shape[1] - 1.0, 0.0]]))
    return Canvas(GrayImage(composite), alpha_a, alpha_b, seam, layer_a, layer_b, (x0, y0),
                  normals)


def _dense_seam(seam: Polyline, spacing: float = 0.5):
    n = max(2, int(np.ceil(seam.length() / spacing)) + 1)
    pts = resample(seam, n)
    return pts, outward_normals(pts)


def signed_seam_distance(canvas: Canvas, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Distance to the seam, negative on A's side."""
    pts, normals = _dense_seam(canvas.seam)
    q = np.column_stack([cols, rows]).astype(np.float64)
    dist, idx = cKDTree(pts).query(q)
    side = ((q - pts[idx]) * normals[idx]).sum(axis=1)
    return np.where(side < 0, -dist, dist)


def blend(canvas: Canvas, params: BlendParams = BlendParams()) -> GrayImage:
    """Feathered composite.  Where both fragments cover a pixel, A's weight
    ramps linearly from 1 to 0 across a band of ``feather_width`` either side
    of the seam, and past the band each fragment keeps its own side.  With
    no band B wins overlaps.  Uncovered pixels are white."""
    a, b = canvas.alpha_a > 0, canvas.alpha_b > 0
    out = np.full(a.shape, 255.0)
    out[a] = canvas.layer_a[a]
    out[b] = canvas.layer_b[b]
    w = params.feather_width
    both = a & b
    if w > 0 and both.any():
        rows, cols = np.nonzero(both)
        s = signed_seam_distance(canvas, rows, cols)
        with np.errstate(over="ignore"):  # tiny widths: +-inf clips to a hard edge
            alpha = np.clip(0.5 - s / (2.0 * w), 0.0, 1.0)
        va = canvas.layer_a[rows, cols].astype(np.float64)
        vb = canvas.layer_b[rows, cols].astype(np.float64)
        out[rows, cols] = alpha * va + (1.0 - alpha) * vb
    return GrayImage(np.floor(out + 0.5).astype(np.uint8))


@dataclass
class ReconstructionResult:
    image: GrayImage | None
    match: MatchScore
    gap_mask: np.ndarray | None
    report: dict
    canvas: Canvas | None = None
    fragments: tuple = ()
    timings: dict = field(default_factory=dict)
    sides: tuple = ()

    @property
    def accepted(self) -> bool:
        return bool(self.match.accepted)


def _interior_gap(gap: np.ndarray) -> np.ndarray:
    covered = ~gap
    if not covered.any():
        return np.zeros_like(gap)
    r = bounding_box(covered)
    inner = np.zeros_like(gap)
    inner[r.first_row:r.last_row + 1, r.first_col:r.last_col + 1] = True
    return gap & inner


def stitch(frag_a, frag_b, config=None) -> ReconstructionResult:
    """Full pipeline on two decoded fragments (GrayImage or Fragment)."""
    from .config import Config  # avoid an import cycle

    cfg = config or Config()
    timings = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = round((now - clock) * 1000.0, 3)
        clock = now

    raw = []
    for name, f in (("A", frag_a), ("B", frag_b)):
        img = f.image if isinstance(f, Fragment) else f
        raw.append(img)
    identical = raw[0] == raw[1]
    den = [anisotropic_diffuse(img, cfg.diffusion) for img in raw]
    lap("filter")
    frags = [Fragment.from_image(d, fid, invert=cfg.invert) for d, fid in zip(den, "AB")]
    fa, fb, flips, estimates = normalize_pair(frags[0], frags[1], cfg.orient)
    lap("orient")
    sides = []
    for f in (fa, fb):
        bset = extract_boundaries(f.image, f.mask, cfg.rim)
        sides.append(split_sides(bset.working, cfg.simplify, f.fragment_id, f.pivot, f.extent))
    lap("contour")
    edges = [canny_mod.canny(f.image.pixels, cfg.canny).final for f in (fa, fb)]
    lap("edges")
    match = select_pair(sides[0], sides[1], flips, cfg.match, edges[0], edges[1],
                        same_silhouette=identical)
    if identical and match.accepted:
        match.accepted = False
        match.reason = "self-match"
    lap("match")
    report = {
        "schema_version": SCHEMA_VERSION,
        "accepted": match.accepted,
        "match": match.to_dict(),
        "flip_candidates": list(flips),
        "skew_degrees": [e.skew_degrees for e in estimates],
        "sides": [[{"index": s.side_index, "classification": s.classification,
                    "points": len(s.chain.points)} for s in group] for group in sides],
        "candidates": match.candidates,
    }
    if not match.accepted:
        return ReconstructionResult(None, match, None, report, None, (fa, fb), timings,
                                    tuple(sides))
    side_a = next(s for s in sides[0] if s.side_index == match.side_a)
    side_b = next(s for s in sides[1] if s.side_index == match.side_b)
    canvas = place(fa, fb, match.placement, side_a, side_b, cfg.match.samples,
                   smooth=cfg.match.arc_smoothing)
    image = blend(canvas, cfg.blend)
    gap = canvas.gap_mask
    interior = _interior_gap(gap)
    lap("assemble")
    report["canvas"] = {"width": image.width, "height": image.height,
                        "origin": list(canvas.origin)}
    report["gap_pixels"] = int(interior.sum())
    if cfg.repair.enabled:
        from .repair import GlyphAtlas, default_atlas, default_dictionary, load_dictionary, repair_image

        atlas = (GlyphAtlas.load(cfg.repair.atlas, cfg.repair.atlas_manifest)
                 if cfg.repair.atlas else default_atlas())
        words = (tuple(load_dictionary(cfg.repair.dictionary)) if cfg.repair.dictionary
                 else default_dictionary())
        outcome = repair_image(image, interior, atlas, words)
        image = outcome.image
        report["repair"] = outcome.to_dict()
        lap("repair")
    return ReconstructionResult(image, match, gap, report, canvas, (fa, fb), timings, tuple(sides))
