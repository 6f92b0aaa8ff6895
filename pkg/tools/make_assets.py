"""Regenerate the bundled glyph atlas and word list.

Needs Pillow (with FreeType) and wordfreq; the package itself needs neither.

    python3 tools/make_assets.py src/tornmend/data
"""

import argparse
import re
import string
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

FONT = "/usr/share/fonts/truetype/dejavu/DejaVuSansMono.ttf"
CHARSET = string.ascii_uppercase + string.ascii_lowercase + string.digits
CELL_W, CELL_H = 16, 24


def render_glyph(font, ch):
    im = Image.new("L", (CELL_W, CELL_H), 255)
    ImageDraw.Draw(im).text((2, 0), ch, fill=0, font=font)
    arr = np.asarray(im)
    return np.where(arr >= 128, 255, 0).astype(np.uint8)


def build_atlas(out: Path, size: int = 20):
    font = ImageFont.truetype(FONT, size)
    strip = np.hstack([render_glyph(font, ch) for ch in CHARSET])
    header = f"P5\n{strip.shape[1]} {strip.shape[0]}\n255\n".encode()
    (out / "atlas.pgm").write_bytes(header + strip.tobytes())
    lines = [f"# cell {CELL_W} {CELL_H}", "# char offset advance"]
    lines += [f"{ch} {i * CELL_W} {CELL_W}" for i, ch in enumerate(CHARSET)]
    (out / "atlas.txt").write_text("\n".join(lines) + "\n")


def build_words(out: Path, count: int = 10000):
    from wordfreq import top_n_list

    words = []
    for w in top_n_list("en", 4 * count):
        if w.isascii() and w.isalpha() and w not in words:
            words.append(w)
        if len(words) == count:
            break
    # one spelling family: drop British -ise forms whose -ize twin is listed
    present = set(words)
    british = re.compile(r"is(e|ed|es|ing|ation|ations)$")
    words = [w for w in words if not (british.search(w) and british.sub(r"iz\1", w) in present)]
    (out / "words.txt").write_text("\n".join(words) + "\n")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", type=Path)
    ap.add_argument("--words", type=int, default=10000)
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    build_atlas(args.out)
    build_words(args.out, args.words)
    return 0


if __name__ == "__main__":
    sys.exit(main())
