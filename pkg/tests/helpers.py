"""Small builders shared by the module tests and the acceptance suite."""

import dataclasses

import numpy as np

from tornmend.canny import convolve, gaussian_kernel
from tornmend.contour import SideSegment, extract_boundaries, segment_distances, split_sides
from tornmend.diffusion import anisotropic_diffuse
from tornmend.harness import render_document
from tornmend.raster import Fragment, GrayImage, Polyline

MARGIN = 40


def fragment(img, fid):
    return Fragment.from_image(anisotropic_diffuse(img), fid)


def sides_of(img, fid):
    """Sides of a fragment image, built the way the pipeline builds them."""
    f = fragment(img, fid)
    bset = extract_boundaries(f.image, f.mask)
    return split_sides(bset.working, fragment_id=fid, pivot=f.pivot, extent=f.extent)


def shifted(side: SideSegment, offset):
    """The same side moved rigidly by ``offset`` (pivot included)."""
    offset = np.asarray(offset, dtype=float)
    pivot = None if side.pivot is None else tuple(np.asarray(side.pivot) + offset)
    return dataclasses.replace(side, chain=Polyline(side.chain.points + offset), pivot=pivot)


def straight_side(x, y0, y1, n=None, torn=True, index=0, fid="A"):
    """A vertical side from (x, y0) to (x, y1) sampled every pixel."""
    n = n or abs(y1 - y0) + 1
    ys = np.linspace(y0, y1, n)
    pts = np.column_stack([np.full(n, float(x)), ys])
    return SideSegment(Polyline(pts), "non-uniform" if torn else "uniform", fid, index)


def sawtooth_side(x, y0, y1, height=10.0, period=20.0, index=0, fid="A"):
    ys = np.arange(y0, y1 + 1, dtype=float)
    phase = ((ys - y0) % period) / period
    xs = x + height * (1.0 - np.abs(2.0 * phase - 1.0))
    return SideSegment(Polyline(np.column_stack([xs, ys])), "non-uniform", fid, index)


def linear_step(u, lam):
    """Conduction fixed at 1, Neumann borders, written out directly."""
    p = np.pad(u, 1, mode="edge")
    lap = p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4 * u
    return u + lam * lap


def blurred_step(h=32, w=32, at=16, sigma=1.4):
    img = np.zeros((h, w))
    img[:, at:] = 255.0
    return convolve(img, gaussian_kernel(sigma))


def random_polyline(rng, n):
    """Random walk without repeated consecutive points."""
    steps = rng.integers(-4, 5, size=(n, 2)).astype(float)
    steps[np.all(steps == 0, axis=1)] = (1.0, 0.0)
    return np.cumsum(steps, axis=0)


def chain_distance(pts, chain):
    return np.min([segment_distances(pts, a, b) for a, b in zip(chain[:-1], chain[1:])], axis=0)


def erased_word(word, k, atlas, band=8):
    """``word`` rendered on one line with glyph ``k`` cut out by a vertical
    band of ``band`` px; returns (original page, damaged page, gap mask)."""
    page = render_document(word, atlas, width=2 * MARGIN + len(word) * atlas.advance + 16,
                           height=120, margin=MARGIN)
    x0 = MARGIN + k * atlas.advance + atlas.cell_w // 2 - band // 2
    gap = np.zeros(page.pixels.shape, bool)
    gap[:, x0:x0 + band] = True
    pix = page.pixels.copy()
    pix[gap] = 255
    return page, GrayImage(pix), gap
