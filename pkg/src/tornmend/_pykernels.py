"""Pure numpy implementations of the hot pixel kernels.

Used when the compiled ``_kernels`` extension is unavailable or when
``TORNMEND_PURE_PYTHON=1`` is set.  Every function here has the same
signature and semantics as its compiled twin.
"""

import numpy as np
from scipy import ndimage

from .errors import MalformedFile

_EIGHT = np.ones((3, 3), dtype=bool)
# (dx, dy) of the forward neighbour for direction codes 0°, 45°, 90°, 135°
NMS_STEPS = ((1, 0), (1, 1), (0, 1), (-1, 1))


def png_unfilter(raw, height, stride, bpp):
    raw = np.asarray(raw, dtype=np.uint8)
    out = np.zeros((height, stride), dtype=np.uint8)
    prior = np.zeros(stride, dtype=np.int64)
    for r in range(height):
        base = r * (stride + 1)
        ftype = int(raw[base])
        line = raw[base + 1:base + 1 + stride].astype(np.int64)
        if ftype == 0:
            recon = line
        elif ftype == 1:
            recon = np.empty_like(line)
            for k in range(bpp):
                recon[k::bpp] = np.cumsum(line[k::bpp]) & 0xFF
        elif ftype == 2:
            recon = (line + prior) & 0xFF
        elif ftype in (3, 4):
            recon = line.copy()
            for i in range(0, stride, bpp):
                j = min(i + bpp, stride)
                up = prior[i:j]
                if i >= bpp:
                    left = recon[i - bpp:j - bpp]
                    ul = prior[i - bpp:j - bpp]
                else:
                    left = np.zeros(j - i, dtype=np.int64)
                    ul = left
                if ftype == 3:
                    pred = (left + up) >> 1
                else:
                    p = left + up - ul
                    pa, pb, pc = np.abs(p - left), np.abs(p - up), np.abs(p - ul)
                    pred = np.where((pa <= pb) & (pa <= pc), left, np.where(pb <= pc, up, ul))
                recon[i:j] = (line[i:j] + pred) & 0xFF
        else:
            raise MalformedFile(f"unknown PNG filter type {ftype}")
        out[r] = recon
        prior = recon
    return out


def diffuse_step(u, lam, kappa, kind):
    u = np.asarray(u, dtype=np.float64)
    dn = np.zeros_like(u)
    ds = np.zeros_like(u)
    de = np.zeros_like(u)
    dw = np.zeros_like(u)
    dn[1:, :] = u[:-1, :] - u[1:, :]
    ds[:-1, :] = u[1:, :] - u[:-1, :]
    de[:, :-1] = u[:, 1:] - u[:, :-1]
    dw[:, 1:] = u[:, :-1] - u[:, 1:]
    if kind == 0:
        def cond(d):
            r = d / kappa
            return np.exp(-(r * r))
    else:
        def cond(d):
            r = d / kappa
            return 1.0 / (1.0 + r * r)
    flux = cond(dn) * dn + cond(ds) * ds
    flux = flux + cond(de) * de
    flux = flux + cond(dw) * dw
    return u + lam * flux


def convolve(img, kernel):
    img = np.asarray(img, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    k = kernel.shape[0]
    r = k // 2
    h, w = img.shape
    pad = np.pad(img, r, mode="edge")
    acc = np.zeros_like(img)
    for i in range(k):
        for j in range(k):
            acc = acc + kernel[i, j] * pad[2 * r - i:2 * r - i + h, 2 * r - j:2 * r - j + w]
    return acc


def nms(mag, direction):
    mag = np.asarray(mag, dtype=np.float64)
    h, w = mag.shape
    pad = np.pad(mag, 1)
    keep = np.zeros(mag.shape, dtype=bool)
    for code, (dx, dy) in enumerate(NMS_STEPS):
        sel = direction == code
        fwd = pad[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
        bwd = pad[1 - dy:1 - dy + h, 1 - dx:1 - dx + w]
        keep |= sel & (mag > fwd) & (mag >= bwd)
    return np.where(keep, mag, 0.0)


def hysteresis(labels):
    labels = np.asarray(labels)
    comp, n = ndimage.label(labels > 0, structure=_EIGHT)
    if n == 0:
        return np.zeros(labels.shape, dtype=bool)
    has_strong = np.zeros(n + 1, dtype=bool)
    has_strong[np.unique(comp[labels == 2])] = True
    has_strong[0] = False
    return has_strong[comp]


def profile_stats(w, offsets):
    """Mean and population variance of ``|offset - w_i|`` for every offset."""
    w = np.asarray(w, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64).reshape(-1, 2)
    n = len(w)
    means = np.empty(len(offsets))
    variances = np.empty(len(offsets))
    for s in range(0, len(offsets), 4096):
        off = offsets[s:s + 4096]
        dx = off[:, 0:1] - w[None, :, 0]
        dy = off[:, 1:2] - w[None, :, 1]
        d = np.sqrt(dx * dx + dy * dy)
        mu = d.sum(axis=1) / n
        dev = d - mu[:, None]
        means[s:s + 4096] = mu
        variances[s:s + 4096] = (dev * dev).sum(axis=1) / n
    return means, variances
