"""Synthetic torn documents with ground truth, and reconstruction scoring.

A page of monospaced text is split by a top-to-bottom tear path.  Pixels
within ``gap_width / 2`` of the path are lost; the left piece becomes
fragment A and the right piece fragment B.  Each piece is pasted at its page
position onto a dark scanner canvas with a ``margin`` border, B is shifted by
``displace_b`` and optionally turned 180°, and Gaussian noise is added.
Because both canvases share the page frame, the true placement of B is the
translation ``-displace_b`` (with the flip, if any, undone about B's canvas
centre).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage, signal
from scipy.spatial import cKDTree

from .codec import read_image, write_image
from .errors import InvalidSpec, TextOverflow, TornMendError
from .matching import Placement
from .raster import GrayImage, binarize, rotate_array
from .repair import GlyphAtlas, default_atlas, default_dictionary

TEAR_KINDS = ("straight", "polyline")
STUB = 20  # vertical run of a polyline tear where it meets the page edges


@dataclass(frozen=True)
class TearSpec:
    tear_kind: str = "straight"
    teeth: int = 3
    amplitude: float = 8.0
    gap_width: float = 0.0
    noise_sigma: float = 0.0
    flip_b: bool = False
    displace_b: tuple = (0, 0)
    seed: int = 0
    doc_seed: int | None = None
    page_width: int = 800
    page_height: int = 600
    margin: int = 64
    background: int = 40
    slant_deg: float | None = None  # straight tears; None draws one in [-6, 6]
    rim: bool = False
    decoy: bool = False
    skew_deg: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "displace_b", tuple(int(v) for v in self.displace_b))
        if self.tear_kind not in TEAR_KINDS:
            raise InvalidSpec(f"tear_kind must be one of {TEAR_KINDS}")
        if self.gap_width < 0 or self.noise_sigma < 0:
            raise InvalidSpec("gap_width and noise_sigma must be >= 0")
        if not 0 < self.amplitude < (self.page_width / 2) / 4:
            raise InvalidSpec("amplitude must be positive and below a quarter of the fragment width")
        if not self.gap_width < self.amplitude:
            raise InvalidSpec("gap_width must be below the amplitude")
        if self.teeth < 1:
            raise InvalidSpec("a polyline tear needs at least one tooth")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        if any(abs(v) > self.margin - 8 for v in self.displace_b):
            raise InvalidSpec(f"displacement must stay within {self.margin - 8} px")

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["displace_b"] = list(self.displace_b)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TearSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - names
        if extra:
            raise InvalidSpec(f"unknown TearSpec fields: {', '.join(sorted(extra))}")
        return cls(**data)


# -- documents -------------------------------------------------------------

def render_document(text: str, atlas: GlyphAtlas | None = None, width: int = 800,
                    height: int = 600, margin: int = 40) -> GrayImage:
    """Black monospaced text on a white page, one line per ``\\n``."""
    atlas = atlas or default_atlas()
    page = np.full((height, width), 255, dtype=np.uint8)
    lines = text.split("\n") if text else []
    lh = atlas.line_height
    if lines and margin + (len(lines) - 1) * lh + atlas.cell_h > height:
        raise TextOverflow(f"{len(lines)} lines do not fit a {height}-px page")
    for r, line in enumerate(lines):
        if margin + (len(line) - 1) * atlas.advance + atlas.cell_w > width and line:
            raise TextOverflow(f"line {r} ({len(line)} chars) does not fit a {width}-px page")
        y = margin + r * lh
        for c, ch in enumerate(line):
            if ch == " ":
                continue
            if ch not in atlas.glyphs:
                raise ValueError(f"character {ch!r} is not in the atlas")
            x = margin + c * atlas.advance
            cell = page[y:y + atlas.cell_h, x:x + atlas.cell_w]
            cell[atlas.bitmap(ch)] = 0
    return GrayImage(page)


def page_capacity(atlas: GlyphAtlas, width: int, height: int, margin: int = 40):
    cols = (width - 2 * margin - atlas.cell_w) // atlas.advance + 1
    rows = (height - 2 * margin - atlas.cell_h) // atlas.line_height + 1
    return cols, rows


def random_text(seed: int, cols: int, rows: int, dictionary=None) -> str:
    """Lines of dictionary words, greedily wrapped to ``cols`` characters."""
    words = [w for w in (dictionary or default_dictionary()) if len(w) <= cols]
    rng = np.random.default_rng(seed)
    lines = []
    for _ in range(rows):
        line = ""
        while True:
            w = words[int(rng.integers(len(words)))]
            cand = w if not line else line + " " + w
            if len(cand) > cols:
                break
            line = cand
        lines.append(line)
    return "\n".join(lines)


def make_document(seed: int, width: int = 800, height: int = 600,
                  atlas: GlyphAtlas | None = None) -> tuple[GrayImage, str]:
    atlas = atlas or default_atlas()
    cols, rows = page_capacity(atlas, width, height)
    text = random_text(seed, cols, rows)
    return render_document(text, atlas, width, height), text


# -- tears -----------------------------------------------------------------

def _triangle(u):
    """Triangle wave with period 1, starting at 0 and rising to 1 at u = 0.25."""
    return 4.0 * np.abs(np.mod(u - 0.25, 1.0) - 0.5) - 1.0


def _roughness(rng, n, scale, smooth=6.0):
    walk = ndimage.gaussian_filter1d(np.cumsum(rng.normal(size=n)), smooth, mode="nearest")
    walk -= np.linspace(walk[0], walk[-1], n)
    peak = np.abs(walk).max()
    return walk * (scale / peak) if peak > 0 else walk


def tear_path(spec: TearSpec, rng) -> np.ndarray:
    """Tear x position for every page row (x(y) is piecewise linear)."""
    w, h = spec.page_width, spec.page_height
    y = np.arange(h, dtype=np.float64)
    x0 = w / 2.0 + rng.uniform(-w / 10.0, w / 10.0)
    if spec.tear_kind == "straight":
        slant = spec.slant_deg if spec.slant_deg is not None else rng.uniform(-6.0, 6.0)
        if abs(slant) > 30:
            raise InvalidSpec("slant must stay within 30 degrees of vertical")
        x = x0 + math.tan(math.radians(slant)) * (y - h / 2.0)
        return x + _roughness(rng, h, spec.amplitude / 2.0)
    span = h - 1 - 2 * STUB
    slope = 2.0 * spec.amplitude * spec.teeth / span
    if 2.0 * math.degrees(math.atan(slope)) >= 60.0:
        raise InvalidSpec("teeth too steep: each turn must stay below 60 degrees")
    u = np.clip((y - STUB) / span, 0.0, 1.0) * spec.teeth
    x = x0 + spec.amplitude / 2.0 * _triangle(u)
    return x + _roughness(rng, h, 1.0, smooth=3.0)


def path_points(xs: np.ndarray, step: float = 0.25) -> np.ndarray:
    h = len(xs)
    ys = np.arange(0.0, h - 1 + 1e-9, step)
    return np.column_stack([np.interp(ys, np.arange(h), xs), ys])


def path_distance(xs: np.ndarray, shape, limit: float | None = None) -> np.ndarray:
    """Euclidean distance from every pixel centre to the tear path.

    With ``limit``, only pixels that can lie within ``limit`` of the path
    are measured; the rest get ``inf``.
    """
    tree = cKDTree(path_points(xs))
    rows, cols = np.mgrid[0:shape[0], 0:shape[1]]
    if limit is None:
        cand = np.ones(shape, dtype=bool)
    else:
        reach = int(np.ceil(limit)) + 1
        lo = ndimage.minimum_filter1d(xs, 2 * reach + 1, mode="nearest") - limit - 1
        hi = ndimage.maximum_filter1d(xs, 2 * reach + 1, mode="nearest") + limit + 1
        cand = (cols >= lo[:, None]) & (cols <= hi[:, None])
    q = np.column_stack([cols[cand], rows[cand]]).astype(np.float64)
    out = np.full(shape, np.inf)
    out[cand], _ = tree.query(q)
    return out


@dataclass
class GroundTruth:
    placement: Placement
    path_x: np.ndarray  # tear x per page row
    gap_width: float
    origin_a: tuple  # page pixel (0, 0) in A's canvas
    origin_b: tuple  # page pixel (0, 0) in B's canvas before any flip
    size_b: tuple  # (width, height) of B's canvas
    gap_mask: np.ndarray | None = None  # page-frame lost pixels
    skew_deg: float = 0.0
    spec: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "schema_version": 1,
            "placement": self.placement.to_dict(),
            "path_x": [round(float(v), 6) for v in self.path_x],
            "gap_width": self.gap_width,
            "origin_a": list(self.origin_a),
            "origin_b": list(self.origin_b),
            "size_b": list(self.size_b),
            "skew_deg": self.skew_deg,
            "spec": self.spec,
        }

    @classmethod
    def from_dict(cls, d):
        pl = d["placement"]
        return cls(Placement(pl["rotation"], tuple(pl["translation"])), np.array(d["path_x"]),
                   d["gap_width"], tuple(d["origin_a"]), tuple(d["origin_b"]),
                   tuple(d["size_b"]), None, d.get("skew_deg", 0.0), d.get("spec", {}))

    def page_gap(self, shape) -> np.ndarray:
        if self.gap_mask is not None:
            return self.gap_mask
        if self.gap_width <= 0:
            return np.zeros(shape, dtype=bool)
        return path_distance(self.path_x, shape, self.gap_width / 2.0) <= self.gap_width / 2.0


@dataclass
class FragmentPair:
    a: GrayImage
    b: GrayImage
    truth: GroundTruth
    mask_a: np.ndarray  # page-frame pieces
    mask_b: np.ndarray


def _rim(piece: np.ndarray, width: float = 2.0) -> np.ndarray:
    edt = ndimage.distance_transform_edt(np.pad(piece, 1))[1:-1, 1:-1]
    return piece & (edt <= width)


def generate_pair(doc: GrayImage, spec: TearSpec) -> FragmentPair:
    h, w = doc.height, doc.width
    if (w, h) != (spec.page_width, spec.page_height):
        spec = dataclasses.replace(spec, page_width=w, page_height=h)
    rng = np.random.default_rng(spec.seed)
    xs = tear_path(spec, rng)
    if xs.min() < 1 or xs.max() > w - 2:
        raise InvalidSpec("tear path leaves the page")
    cols = np.arange(w, dtype=np.float64)[None, :]
    left = cols < xs[:, None]
    gap = np.zeros((h, w), dtype=bool)
    if spec.gap_width > 0:
        gap = path_distance(xs, (h, w), spec.gap_width / 2.0) <= spec.gap_width / 2.0
    piece_a = left & ~gap
    piece_b = ~left & ~gap
    if spec.decoy:
        # jagged left border on A: a second non-uniform side to reject
        y = np.arange(h, dtype=np.float64)
        cut = 8.0 + 5.0 * _triangle(y * 6.0 / h)
        piece_a &= ~(cols < cut[:, None])

    m = spec.margin
    dx, dy = spec.displace_b
    shape = (h + 2 * m, w + 2 * m)
    page = doc.pixels.astype(np.float64)

    def canvas(piece, ox, oy):
        out = np.full(shape, float(spec.background))
        mask = np.zeros(shape, dtype=bool)
        content = page.copy()
        if spec.rim:
            content[_rim(piece)] = np.minimum(content[_rim(piece)], 165.0)
        out[oy:oy + h, ox:ox + w][piece] = content[piece]
        mask[oy:oy + h, ox:ox + w] = piece
        return out, mask

    img_a, _ = canvas(piece_a, m, m)
    img_b, _ = canvas(piece_b, m + dx, m + dy)
    if spec.flip_b:
        img_b = np.rot90(img_b, 2)
    if spec.skew_deg:
        img_a, _ = rotate_array(img_a, spec.skew_deg, 1, float(spec.background))
        img_b, _ = rotate_array(img_b, spec.skew_deg, 1, float(spec.background))
    out = []
    for img in (img_a, img_b):
        if spec.noise_sigma > 0:
            img = img + rng.normal(0.0, spec.noise_sigma, img.shape)
        out.append(GrayImage(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8)))
    truth = GroundTruth(Placement(180 if spec.flip_b else 0, (-dx, -dy)), xs, spec.gap_width,
                        (m, m), (m + dx, m + dy), (shape[1], shape[0]), gap, spec.skew_deg,
                        spec.to_dict())
    return FragmentPair(out[0], out[1], truth, piece_a, piece_b)


def pair_from_spec(spec: TearSpec, atlas: GlyphAtlas | None = None):
    doc_seed = spec.seed if spec.doc_seed is None else spec.doc_seed
    doc, text = make_document(doc_seed, spec.page_width, spec.page_height, atlas)
    return doc, generate_pair(doc, spec)


# -- evaluation ------------------------------------------------------------

@dataclass
class EvalReport:
    accepted: bool
    match_correct: bool
    placement_error: float | None
    pixel_agreement: float
    ink_agreement: float
    ink_recall: float
    ink_precision: float
    ink_agreement_rigid: float
    shifts: list = field(default_factory=list)
    repaired_words: dict = field(default_factory=lambda: {"correct": 0, "ambiguous": 0, "failed": 0})
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("pixel_agreement", "ink_agreement", "ink_recall", "ink_precision",
                     "ink_agreement_rigid"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    def to_dict(self, timings: bool = False):
        d = dataclasses.asdict(self)
        if not timings:
            d.pop("timings")
        for k, v in d.items():
            if isinstance(v, float):
                d[k] = round(v, 6)
        return d


def _chain_on_path(points, xs, tol) -> float:
    tree = cKDTree(path_points(xs))
    d, _ = tree.query(points)
    return float((d <= tol).mean())


def side_matches_truth(result, truth: GroundTruth) -> bool:
    """Chosen sides lie on the true tear (>= 90% of their points within
    ``gap/2 + 4`` px) and the rotation is right."""
    if result.match.placement.rotation != truth.placement.rotation:
        return False
    sides = getattr(result, "sides", None)
    if not sides or any(abs(f.rotation) > 0 for f in result.fragments):
        return False
    sa = next((s for s in sides[0] if s.side_index == result.match.side_a), None)
    sb = next((s for s in sides[1] if s.side_index == result.match.side_b), None)
    if sa is None or sb is None:
        return False
    tol = truth.gap_width / 2.0 + 4.0
    pa = sa.chain.points - np.asarray(truth.origin_a, dtype=float)
    pb = sb.chain.points
    if truth.placement.rotation == 180:
        pb = np.array([truth.size_b[0] - 1, truth.size_b[1] - 1], dtype=float) - pb
    pb = pb - np.asarray(truth.origin_b, dtype=float)
    return min(_chain_on_path(pa, truth.path_x, tol), _chain_on_path(pb, truth.path_x, tol)) >= 0.9


def _window(arr, base, radius, shape):
    """``arr`` cropped to ``shape`` grown by ``radius`` on every side, placed
    so that page (0, 0) sits at ``base`` in ``arr``; zeros off ``arr``."""
    h, w = shape[0] + 2 * radius, shape[1] + 2 * radius
    out = np.zeros((h, w), dtype=np.float64)
    y0, x0 = base[1] - radius, base[0] - radius
    sy0, sx0 = max(y0, 0), max(x0, 0)
    sy1, sx1 = min(y0 + h, arr.shape[0]), min(x0 + w, arr.shape[1])
    if sy0 < sy1 and sx0 < sx1:
        out[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = arr[sy0:sy1, sx0:sx1]
    return out


def _shift_counts(rec_ink, page_mask, base, radius):
    """For every shift s in [-radius, radius]^2, the number of reconstruction
    ink pixels at page positions p in ``page_mask`` (sampled at p + base + s)."""
    win = _window(rec_ink, base, radius, page_mask.shape)
    corr = signal.correlate(win, page_mask.astype(np.float64), mode="valid", method="fft")
    return np.rint(corr).astype(np.int64)  # indexed [sy + radius, sx + radius]


def _best_shift(orig_ink, region, rec_ink, base, radius):
    """Shift maximising binary agreement over ``region``.

    ``base`` maps page (x, y) to reconstruction (col, row).  Returns
    (shift, agree, both, rec_in_region, n_orig, n_region).
    """
    both = _shift_counts(rec_ink, region & orig_ink, base, radius)
    rec_in = _shift_counts(rec_ink, region, base, radius)
    n_orig = int((region & orig_ink).sum())
    n_region = int(region.sum())
    agree = n_region - (n_orig + rec_in - 2 * both)
    best = None
    for sy in range(-radius, radius + 1):
        for sx in range(-radius, radius + 1):
            a = int(agree[sy + radius, sx + radius])
            key = (-a, sx * sx + sy * sy, sx, sy)
            if best is None or key < best[0]:
                best = (key, (sx, sy))
    sx, sy = best[1]
    i, j = sy + radius, sx + radius
    return (sx, sy), int(agree[i, j]), int(both[i, j]), int(rec_in[i, j]), n_orig, n_region


def evaluate(result, truth: GroundTruth, original: GrayImage, band: float = 5.0,
             radius: int = 8) -> EvalReport:
    """Score a reconstruction against the page it was torn from.

    Ink is Otsu-binarised in both images.  Each side of the true tear is
    aligned separately by an exhaustive +-``radius`` px search (the two
    pieces are placed independently, so one rigid shift cannot fit both to
    a pixel); a single rigid alignment is reported too.  Pixels within
    ``band + gap/2`` of the tear are excluded.
    """
    accepted = bool(result.match.accepted)
    correct = bool(accepted and side_matches_truth(result, truth))
    perr = None
    if result.match.placement.rotation == truth.placement.rotation and not truth.skew_deg:
        perr = float(np.hypot(*(np.subtract(result.match.placement.translation,
                                            truth.placement.translation))))
    timings = dict(getattr(result, "timings", {}) or {})
    if result.image is None:
        return EvalReport(accepted, False, perr, 0.0, 0.0, 0.0, 0.0, 0.0, timings=timings)
    shape = (original.height, original.width)
    orig_ink = original.pixels < binarize(original).threshold
    rec = result.image
    rec_ink = rec.pixels < binarize(rec).threshold
    excl = band + truth.gap_width / 2.0
    keep = path_distance(truth.path_x, shape, excl) > excl
    left = np.arange(shape[1])[None, :] < truth.path_x[:, None]
    ox, oy = result.canvas.origin if result.canvas is not None else (0, 0)
    base = (truth.origin_a[0] - ox, truth.origin_a[1] - oy)
    regions = (keep & left, keep & ~left)
    agree = both = rec_in = n_orig = n_region = 0
    shifts = []
    for reg in regions:
        s, a, b, r, no, nr = _best_shift(orig_ink, reg, rec_ink, base, radius)
        shifts.append(list(s))
        agree, both, rec_in, n_orig, n_region = agree + a, both + b, rec_in + r, n_orig + no, n_region + nr
    union = n_orig + rec_in - both
    _, _, rb, rr, rno, _ = _best_shift(orig_ink, keep, rec_ink, base, radius)
    runion = rno + rr - rb
    repaired = {"correct": 0, "ambiguous": 0, "failed": 0}
    rep = result.report.get("repair") if result.report else None
    if rep:
        repaired["ambiguous"] = len(rep["ambiguous"])
        repaired["failed"] = len(rep["failed"])
        repaired["correct"] = _count_correct_repairs(rep, original, base, shifts[0], rec)
    return EvalReport(
        accepted, correct, perr,
        agree / n_region if n_region else 1.0,
        both / union if union else 1.0,
        both / n_orig if n_orig else 1.0,
        both / rec_in if rec_in else (1.0 if n_orig == 0 else 0.0),
        rb / runion if runion else 1.0,
        shifts, repaired, timings)


def _count_correct_repairs(rep, original, base, shift, rec) -> int:
    """Repaired cells whose pixels correlate >= 0.9 with the original page."""
    from .repair import _ncc_many

    count = 0
    for item in rep["repaired"]:
        ok = True
        for (top, left, bottom, right), obs in zip(item.get("cells", []), item["observed"]):
            if obs != "?":
                continue
            y0, x0 = top - base[1] - shift[1], left - base[0] - shift[0]
            if y0 < 0 or x0 < 0 or y0 + bottom - top > original.height or \
                    x0 + right - left > original.width:
                ok = False
                break
            o = original.pixels[y0:y0 + bottom - top, x0:x0 + right - left]
            r = rec.pixels[top:bottom, left:right]
            if _ncc_many(r, o[None])[0] < 0.9:
                ok = False
                break
        count += int(ok and bool(item.get("cells")))
    return count


# -- corpus ----------------------------------------------------------------

def write_pair(directory, doc: GrayImage, pair: FragmentPair):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_image(pair.a, d / "a.png")
    write_image(pair.b, d / "b.png")
    write_image(doc, d / "original.png")
    (d / "truth.json").write_text(json.dumps(pair.truth.to_dict(), indent=1, sort_keys=True) + "\n")


def read_pair(directory):
    d = Path(directory)
    truth = GroundTruth.from_dict(json.loads((d / "truth.json").read_text()))
    return read_image(d / "a.png"), read_image(d / "b.png"), read_image(d / "original.png"), truth


def load_manifest(path) -> list[TearSpec]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise InvalidSpec("manifest must be a JSON array of TearSpec records")
    specs = [TearSpec.from_dict(rec) for rec in data]
    seeds = [s.seed for s in specs]
    if len(set(seeds)) != len(seeds):
        raise InvalidSpec("manifest seeds must be unique (they name the pair directories)")
    return specs


def synthesize(specs, out_dir, atlas: GlyphAtlas | None = None) -> list[Path]:
    out = []
    for spec in specs:
        doc, pair = pair_from_spec(spec, atlas)
        d = Path(out_dir) / f"pair_{spec.seed}"
        write_pair(d, doc, pair)
        out.append(d)
    return out


def evaluate_pair(directory, config=None) -> tuple[str, dict, dict]:
    from .assemble import stitch

    a, b, original, truth = read_pair(directory)
    try:
        result = stitch(a, b, config)
    except TornMendError as exc:
        row = EvalReport(False, False, None, 0.0, 0.0, 0.0, 0.0, 0.0).to_dict()
        row["error"] = f"{type(exc).__name__}: {exc}"
        return Path(directory).name, row, {}
    report = evaluate(result, truth, original)
    return Path(directory).name, report.to_dict(), dict(result.timings)


def aggregate(rows: list[dict]) -> dict:
    n = len(rows)
    correct = [r for r in rows if r["match_correct"]]
    errs = [r["placement_error"] for r in correct if r["placement_error"] is not None]
    return {
        "pairs": n,
        "accepted": sum(r["accepted"] for r in rows),
        "match_correct": len(correct),
        "max_placement_error": round(max(errs), 6) if errs else None,
        "min_ink_agreement": round(min(r["ink_agreement"] for r in correct), 6) if correct else None,
        "mean_pixel_agreement": round(sum(r["pixel_agreement"] for r in rows) / n, 6) if n else None,
        "repaired_words": {k: sum(r["repaired_words"][k] for r in rows)
                           for k in ("correct", "ambiguous", "failed")},
    }
