"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--size H W] [--json OUT]

Each kernel runs on the same synthetic inputs under both backends; the
table reports the best-of-N wall time and the speedup.  Outputs are also
compared so a fast but wrong build is caught here.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from tornmend import _pykernels, kernels
from tornmend.canny import gaussian_kernel


def _inputs(h, w, seed):
    rng = np.random.default_rng(seed)
    img = rng.normal(200.0, 30.0, (h, w)).clip(0, 255)
    img[h // 3:2 * h // 3, w // 4:3 * w // 4] -= 120.0
    mag = np.hypot(*np.gradient(img))
    direction = rng.integers(0, 4, (h, w)).astype(np.uint8)
    labels = rng.choice(np.array([0, 1, 2], dtype=np.uint8), (h, w), p=[0.7, 0.25, 0.05])
    rows = np.clip(img, 0, 255).astype(np.uint8)
    raw = bytearray()
    for r, row in enumerate(rows):
        ftype = r % 5
        raw.append(ftype)
        raw.extend(row.tobytes())  # filter bytes need not be meaningful to time the decoder
    w_pts = rng.normal(0.0, 40.0, (64, 2))
    offsets = rng.uniform(-200.0, 200.0, (20000, 2))
    return {
        "diffuse_step": (img, 0.2, 20.0, 0),
        "convolve": (img, gaussian_kernel(1.4)),
        "nms": (mag, direction),
        "hysteresis": (labels,),
        "png_unfilter": (np.frombuffer(bytes(raw), np.uint8), h, w, 1),
        "profile_stats": (w_pts, offsets),
    }


def _best(fn, args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _same(a, b):
    if isinstance(a, tuple):
        return all(_same(x, y) for x, y in zip(a, b))
    a, b = np.asarray(a), np.asarray(b)
    if a.dtype.kind == "f":
        return bool(np.allclose(a, b, rtol=0, atol=1e-9))
    return bool(np.array_equal(a, b))


def run(size=(600, 800), repeat=5, seed=0):
    compiled = kernels.compiled_module()
    rows = []
    for name, args in _inputs(*size, seed).items():
        t_py, out_py = _best(getattr(_pykernels, name), args, repeat)
        row = {"kernel": name, "python_ms": t_py * 1e3, "compiled_ms": None,
               "speedup": None, "outputs_match": None}
        if compiled is not None:
            t_c, out_c = _best(getattr(compiled, name), args, repeat)
            row.update(compiled_ms=t_c * 1e3, speedup=t_py / t_c if t_c > 0 else None,
                       outputs_match=_same(out_py, out_c))
        rows.append(row)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, nargs=2, default=(600, 800), metavar=("H", "W"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--json", help="also write the rows as JSON")
    args = ap.parse_args(argv)
    rows = run(tuple(args.size), args.repeat, args.seed)
    if kernels.compiled_module() is None:
        print("compiled extension not built; timing the numpy fallback only", file=sys.stderr)
    print(f"{'kernel':<14} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}  match")
    for r in rows:
        c = f"{r['compiled_ms']:12.2f}" if r["compiled_ms"] is not None else f"{'-':>12}"
        s = f"{r['speedup']:7.1f}x" if r["speedup"] is not None else f"{'-':>8}"
        print(f"{r['kernel']:<14} {r['python_ms']:10.2f} {c} {s}  {r['outputs_match']}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=1)
    return 0 if all(r["outputs_match"] is not False for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
