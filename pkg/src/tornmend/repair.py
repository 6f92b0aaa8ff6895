"""Seam-damaged word repair: template OCR plus wildcard dictionary lookup."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy import ndimage

from .codec import read_image
from .errors import Ambiguous, LowConfidence, NoCompletion
from .raster import GrayImage, binarize

WILDCARD = "?"
GAP_FRACTION = 0.3
MIN_SCORE = 0.5


@dataclass(frozen=True, eq=False)
class GlyphAtlas:
    """Fixed-cell bitmap font; glyph arrays are bool, True = ink."""

    charset: str
    glyphs: dict
    advance: int
    cell_w: int
    cell_h: int

    def __post_init__(self):
        if set(self.charset) != set(self.glyphs) or len(set(self.charset)) != len(self.charset):
            raise ValueError("every charset character needs exactly one glyph")
        for ch, g in self.glyphs.items():
            if g.shape != (self.cell_h, self.cell_w):
                raise ValueError(f"glyph {ch!r} has shape {g.shape}, expected "
                                 f"{(self.cell_h, self.cell_w)}")

    @property
    def line_height(self) -> int:
        return self.cell_h + self.cell_h // 6

    def bitmap(self, ch: str) -> np.ndarray:
        return self.glyphs[ch]

    @classmethod
    def load(cls, pgm_path, manifest_path) -> "GlyphAtlas":
        strip = read_image(pgm_path).pixels < 128
        charset, glyphs, advance = [], {}, None
        cell_w = None
        for line in Path(manifest_path).read_text(encoding="utf-8").splitlines():
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "#":
                if len(parts) == 4 and parts[1] == "cell":
                    cell_w = int(parts[2])
                continue
            ch, off, adv = parts[0], int(parts[1]), int(parts[2])
            w = cell_w or adv
            charset.append(ch)
            glyphs[ch] = strip[:, off:off + w].copy()
            advance = adv if advance is None else advance
            if adv != advance:
                raise ValueError("atlas must be monospaced")
        if not charset:
            raise ValueError("empty atlas manifest")
        return cls("".join(charset), glyphs, advance, cell_w or advance, strip.shape[0])


def data_path(name: str) -> Path:
    return Path(str(resources.files("tornmend") / "data" / name))


@lru_cache(maxsize=None)
def default_atlas() -> GlyphAtlas:
    return GlyphAtlas.load(data_path("atlas.pgm"), data_path("atlas.txt"))


def load_dictionary(path=None) -> list[str]:
    path = data_path("words.txt") if path is None else Path(path)
    return [w.strip() for w in path.read_text(encoding="utf-8").splitlines() if w.strip()]


@lru_cache(maxsize=None)
def default_dictionary() -> tuple:
    return tuple(load_dictionary())


@dataclass
class WordCandidate:
    cells: list  # (top, left, bottom, right), bottom/right exclusive
    text: str

    @property
    def damaged_count(self) -> int:
        return self.text.count(WILDCARD)

    def to_dict(self):
        return {"cells": [list(c) for c in self.cells], "text": self.text}


@dataclass
class RepairOutcome:
    image: GrayImage
    repaired: list = field(default_factory=list)  # (observed, completed, cells)
    ambiguous: list = field(default_factory=list)  # (observed, hits)
    failed: list = field(default_factory=list)  # observed

    def to_dict(self):
        return {
            "repaired": [{"observed": o, "completed": c, "cells": [list(b) for b in cells]}
                         for o, c, cells in self.repaired],
            "ambiguous": [{"observed": o, "hits": list(h)} for o, h in self.ambiguous],
            "failed": list(self.failed),
        }


# -- recognition -----------------------------------------------------------

def _ncc_many(cell: np.ndarray, stack: np.ndarray) -> np.ndarray:
    """NCC of one cell against each template in ``stack`` (k, h, w)."""
    c = cell.astype(np.float64).ravel()
    c = c - c.mean()
    t = stack.reshape(len(stack), -1).astype(np.float64)
    t = t - t.mean(axis=1, keepdims=True)
    denom = np.sqrt((c * c).sum() * (t * t).sum(axis=1))
    num = t @ c
    out = np.zeros(len(stack))
    ok = denom > 0
    out[ok] = num[ok] / denom[ok]
    return out


def _resize_nearest(cell: np.ndarray, h: int, w: int) -> np.ndarray:
    rows = (np.arange(h) * cell.shape[0] // h).clip(0, cell.shape[0] - 1)
    cols = (np.arange(w) * cell.shape[1] // w).clip(0, cell.shape[1] - 1)
    return cell[np.ix_(rows, cols)]


def _template_stack(atlas: GlyphAtlas) -> np.ndarray:
    return np.stack([atlas.glyphs[ch] for ch in atlas.charset])


def recognize_glyph(cell, atlas: GlyphAtlas | None = None) -> tuple[str, float]:
    """Best atlas character for an ink bitmap (True or dark = ink)."""
    atlas = atlas or default_atlas()
    cell = np.asarray(cell)
    if cell.size == 0:
        raise ValueError("empty cell")
    ink = cell if cell.dtype == bool else cell < 128
    if ink.shape != (atlas.cell_h, atlas.cell_w):
        ink = _resize_nearest(ink, atlas.cell_h, atlas.cell_w)
    scores = _ncc_many(ink, _template_stack(atlas))
    k = int(np.argmax(scores))
    ch, score = atlas.charset[k], float(scores[k])
    if score < MIN_SCORE:
        raise LowConfidence(ch, score)
    return ch, score


# -- locating damaged words ------------------------------------------------

@dataclass(frozen=True)
class TextGrid:
    line_tops: tuple
    phase: int  # x of a cell origin modulo the advance


def _glyph_offsets(atlas: GlyphAtlas):
    out = {}
    for ch in atlas.charset:
        ys, xs = np.nonzero(atlas.glyphs[ch])
        out[ch] = (int(ys.min()), int(xs.min()), int(ys.max()), int(xs.max()))
    return out


def estimate_grid(ink: np.ndarray, gap: np.ndarray, atlas: GlyphAtlas,
                  region: np.ndarray | None = None, limit: int = 80) -> TextGrid | None:
    """Cell grid recovered from clean, confidently recognised components."""
    labels, n = ndimage.label(ink, structure=np.ones((3, 3), bool))
    if n == 0:
        return None
    boxes = ndimage.find_objects(labels)
    near = ndimage.binary_dilation(gap, iterations=2) if gap.any() else gap
    offs = _glyph_offsets(atlas)
    stack = _template_stack(atlas)
    h, w = atlas.cell_h, atlas.cell_w
    found = []
    order = range(n)
    if region is not None:
        order = [i for i in order if region[boxes[i]].any()]
    for i in order:
        sl = boxes[i]
        top, left = sl[0].start, sl[1].start
        bh, bw = sl[0].stop - top, sl[1].stop - left
        if bh < 4 or bh > h or bw > w or (labels[sl] == i + 1)[near[sl]].any():
            continue
        best = None
        for k, ch in enumerate(atlas.charset):
            gy, gx, gy2, gx2 = offs[ch]
            if (gy2 - gy + 1, gx2 - gx + 1) != (bh, bw):
                continue
            oy, ox = top - gy, left - gx
            if oy < 0 or ox < 0 or oy + h > ink.shape[0] or ox + w > ink.shape[1]:
                continue
            s = _ncc_many(ink[oy:oy + h, ox:ox + w], stack[k:k + 1])[0]
            if best is None or s > best[0]:
                best = (s, oy, ox)
        if best is not None and best[0] >= 0.9:
            found.append((best[1], best[2]))
            if len(found) >= limit:
                break
    if not found:
        return None
    ys = np.array(sorted(f[0] for f in found))
    tops = []
    for y in ys:
        if tops and y - tops[-1][-1] <= 3:
            tops[-1].append(y)
        else:
            tops.append([y])
    line_tops = tuple(int(np.median(t)) for t in tops)
    phases = np.bincount(np.array([f[1] for f in found]) % atlas.advance, minlength=atlas.advance)
    return TextGrid(line_tops, int(np.argmax(phases)))


def _read_cell(ink: np.ndarray, top: int, left: int, atlas: GlyphAtlas, stack: np.ndarray,
               jitter: int):
    """Best (score, char, dy, dx) over cell windows shifted by up to
    ``jitter`` px.  The two fragments' text grids can disagree by a pixel
    after placement, and a one-pixel horizontal slip is enough to confuse
    glyphs, so each cell is read where it fits best."""
    h, w = atlas.cell_h, atlas.cell_w
    H, W = ink.shape
    shifts, cells = [], []
    for dy in range(-jitter, jitter + 1):
        for dx in range(-jitter, jitter + 1):
            t, l = top + dy, left + dx
            if t < 0 or l < 0 or t + h > H or l + w > W:
                continue
            cell = ink[t:t + h, l:l + w]
            if cell.any():
                shifts.append((dy, dx))
                cells.append(cell.ravel())
    if not cells:
        return None
    c = np.array(cells, dtype=np.float64)
    c -= c.mean(axis=1, keepdims=True)
    t = stack.reshape(len(stack), -1).astype(np.float64)
    t -= t.mean(axis=1, keepdims=True)
    denom = np.sqrt((c * c).sum(axis=1)[:, None] * (t * t).sum(axis=1)[None, :])
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(denom > 0, (c @ t.T) / denom, 0.0)
    # first maximum in (shift, character) order keeps ties deterministic
    i, k = np.unravel_index(int(np.argmax(scores)), scores.shape)
    return float(scores[i, k]), atlas.charset[k], shifts[i][0], shifts[i][1]


def find_damaged_words(image: GrayImage, gap_mask: np.ndarray, atlas: GlyphAtlas | None = None,
                       reach: float = 3.0, jitter: int = 2) -> list[WordCandidate]:
    """Words on text lines within ``reach`` cell heights of the gap that have
    at least one cell covered more than 30% by the gap."""
    atlas = atlas or default_atlas()
    gap = np.asarray(gap_mask, dtype=bool)
    if not gap.any():
        return []
    pix = image.pixels
    ink = (pix < binarize(image).threshold) & ~gap
    h, w, adv = atlas.cell_h, atlas.cell_w, atlas.advance
    region = ndimage.binary_dilation(gap, iterations=int(reach * h))
    grid = estimate_grid(ink, gap, atlas, region)
    if grid is None:
        return []
    H, W = pix.shape
    stack = _template_stack(atlas)
    words = []
    for top in grid.line_tops:
        if top < 0 or top + h > H:
            continue
        band_gap = gap[top:top + h]
        if not band_gap.any():
            continue
        x = grid.phase
        row = []
        while x + w <= W:
            box = (top, x, top + h, x + w)
            g = gap[top:top + h, x:x + w].mean()
            if g > GAP_FRACTION:
                row.append((box, WILDCARD, None))
            elif ink[top:top + h, x:x + w].any():
                best = _read_cell(ink, top, x, atlas, stack, jitter)
                if best is None or best[0] < MIN_SCORE:
                    row.append((box, WILDCARD, None))
                else:
                    row.append((box, best[1], best[2:]))
            else:
                row.append(None)
            x += adv
        # words are maximal runs of occupied cells
        run = []
        for item in row + [None]:
            if item is not None:
                run.append(item)
                continue
            text = "".join(c for _, c, _ in run)
            if WILDCARD in text and text.strip(WILDCARD):
                # cells follow the word's own grid, read off its clean glyphs
                offs = np.array([o for _, _, o in run if o is not None])
                dy, dx = (int(v) for v in np.round(np.median(offs, axis=0))) if len(offs) else (0, 0)
                cells = [(t + dy, l + dx, b + dy, r + dx) for (t, l, b, r), _, _ in run]
                if all(t >= 0 and l >= 0 and b <= H and r <= W for t, l, b, r in cells):
                    words.append(WordCandidate(cells, text))
            run = []
    return words


# -- completion ------------------------------------------------------------

def complete_word(candidate, dictionary) -> str:
    """Unique case-insensitive wildcard match; the observed case is kept."""
    text = candidate.text if isinstance(candidate, WordCandidate) else str(candidate)
    if WILDCARD not in text:
        return text
    pattern = re.compile("".join("." if c == WILDCARD else re.escape(c) for c in text),
                         re.IGNORECASE)
    hits = sorted({w for w in dictionary if len(w) == len(text) and pattern.fullmatch(w)},
                  key=lambda s: (s.lower(), s))
    lowered = sorted({h.lower() for h in hits})
    if not hits:
        raise NoCompletion(text)
    if len(lowered) > 1:
        raise Ambiguous(lowered)
    word = lowered[0]
    out = []
    for obs, ch in zip(text, word):
        if obs != WILDCARD:
            out.append(obs)
        elif text.replace(WILDCARD, "").isupper() and len(text) > 1:
            out.append(ch.upper())
        else:
            out.append(ch)
    return "".join(out)


def render_repair(image: GrayImage, candidate: WordCandidate, completed: str,
                  atlas: GlyphAtlas | None = None) -> GrayImage:
    """Redraw the recovered characters into their cells; nothing else changes."""
    atlas = atlas or default_atlas()
    if len(completed) != len(candidate.text):
        raise ValueError("completion length differs from the candidate")
    pix = image.pixels.copy()
    for (top, left, bottom, right), obs, ch in zip(candidate.cells, candidate.text, completed):
        if obs != WILDCARD or ch == WILDCARD or ch not in atlas.glyphs:
            continue
        glyph = atlas.bitmap(ch)
        if glyph.shape != (bottom - top, right - left):
            glyph = _resize_nearest(glyph, bottom - top, right - left)
        pix[top:bottom, left:right] = np.where(glyph, 0, 255).astype(np.uint8)
    return GrayImage(pix)


def repair_image(image: GrayImage, gap_mask: np.ndarray, atlas: GlyphAtlas | None = None,
                 dictionary=None) -> RepairOutcome:
    atlas = atlas or default_atlas()
    dictionary = default_dictionary() if dictionary is None else dictionary
    out = RepairOutcome(image)
    for cand in find_damaged_words(image, gap_mask, atlas):
        try:
            word = complete_word(cand, dictionary)
        except Ambiguous as exc:
            out.ambiguous.append((cand.text, tuple(exc.hits)))
            continue
        except NoCompletion:
            out.failed.append(cand.text)
            continue
        out.image = render_repair(out.image, cand, word, atlas)
        out.repaired.append((cand.text, word, cand.cells))
    return out
