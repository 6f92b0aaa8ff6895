"""Command-line entry point.

    tornmend mend A B -o OUT --report R.json [--config C.toml]
    tornmend stage {filter|orient|simplify|edges|match} IN... -o OUT
    tornmend synth --manifest M.json -o DIR [--seed S]
    tornmend eval --corpus DIR --report R.json [--jobs N]

Exit status: 0 success (accepted match), 2 no match (report still written),
1 usage or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import config as config_mod
from .assemble import SCHEMA_VERSION, stitch
from .canny import canny
from .codec import read_image, write_image
from .contour import extract_boundaries, simplify_dp, split_sides
from .diffusion import anisotropic_diffuse
from .errors import NoCandidate, TornMendError
from .harness import aggregate, evaluate_pair, load_manifest, synthesize
from .matching import select_pair
from .orient import normalize_fragment
from .raster import Fragment, GrayImage

EXIT_OK, EXIT_ERROR, EXIT_NOMATCH = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _config(args) -> config_mod.Config:
    cfg = config_mod.load(args.config) if args.config else config_mod.Config()
    over = {}
    if getattr(args, "invert", False):
        over["invert"] = True
    if getattr(args, "no_repair", False):
        over["repair"] = {"enabled": False}
    for flag, section, key in (("tau", "match", "tau"), ("samples", "match", "samples"),
                               ("feather", "blend", "feather_width"),
                               ("tolerance", "simplify", "tolerance")):
        v = getattr(args, flag, None)
        if v is not None:
            over.setdefault(section, {})[key] = v
    return cfg.with_overrides(**over) if over else cfg


def _add_config_flags(p):
    p.add_argument("--config", help="TOML file with stage parameters")
    p.add_argument("--invert", action="store_true",
                   help="paper is darker than the scanner background")
    p.add_argument("--tau", type=float, help="acceptance threshold on profile spread (px)")
    p.add_argument("--samples", type=int, help="samples per matched side")
    p.add_argument("--feather", type=float, help="blend band half-width (px)")
    p.add_argument("--tolerance", type=float, help="simplification tolerance T (px)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="tornmend", description="Reconstruct a torn document from two scans.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("mend", help="run the full pipeline on two fragments")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("-o", "--output", required=True, help="reconstructed image (.png or .pgm)")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--no-repair", action="store_true", help="skip character repair")
    _add_config_flags(p)

    p = sub.add_parser("stage", help="run a single stage for debugging")
    p.add_argument("name", choices=("filter", "orient", "simplify", "edges", "match"))
    p.add_argument("inputs", nargs="+")
    p.add_argument("-o", "--output", required=True,
                   help="output file; simplify writes JSON for .json, else one SVG path per side")
    _add_config_flags(p)

    p = sub.add_parser("synth", help="generate a synthetic corpus from a manifest")
    p.add_argument("--manifest", required=True, help="JSON array of TearSpec records")
    p.add_argument("-o", "--output", required=True, help="corpus directory")
    p.add_argument("--seed", type=int, default=0,
                   help="base seed for records that do not set one (record i gets seed + i)")

    p = sub.add_parser("eval", help="reconstruct and score every pair of a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--timings", help="optional JSON file for per-stage wall-clock times")
    _add_config_flags(p)
    return ap


def cmd_mend(args) -> int:
    cfg = _config(args)
    a, b = read_image(args.a), read_image(args.b)
    try:
        result = stitch(a, b, cfg)
    except NoCandidate as exc:
        report = {"schema_version": SCHEMA_VERSION, "accepted": False, "reason": "no-candidate",
                  "error": str(exc)}
        if args.report:
            _write_json(args.report, report)
        print(f"no match: {exc}", file=sys.stderr)
        return EXIT_NOMATCH
    report = dict(result.report)
    report["timings_ms"] = result.timings
    if args.report:
        _write_json(args.report, report)
    m = result.match
    if not result.accepted:
        print(f"no match: best variance {m.variance:.3f} ({m.reason})")
        return EXIT_NOMATCH
    write_image(result.image, args.output)
    dx, dy = m.placement.translation
    rep = report.get("repair", {})
    print(f"matched side {m.side_a} of A with side {m.side_b} of B, rotation "
          f"{m.placement.rotation}, translation ({dx:.2f}, {dy:.2f}), variance {m.variance:.3f}; "
          f"gap {report['gap_pixels']} px; {len(rep.get('repaired', []))} word(s) repaired")
    return EXIT_OK


def _need(args, n):
    if len(args.inputs) != n:
        raise UsageError(f"stage {args.name} takes {n} input(s)")


def _fragment(path, cfg, fid):
    img = anisotropic_diffuse(read_image(path), cfg.diffusion)
    return Fragment.from_image(img, fid, invert=cfg.invert)


def _sides(frag, cfg):
    bset = extract_boundaries(frag.image, frag.mask, cfg.rim)
    return bset, split_sides(bset.working, cfg.simplify, frag.fragment_id, frag.pivot, frag.extent)


def _svg_path(points) -> str:
    return "M " + " L ".join(f"{x:g} {y:g}" for x, y in points)


def cmd_stage(args) -> int:
    cfg = _config(args)
    name = args.name
    if name == "filter":
        _need(args, 1)
        write_image(anisotropic_diffuse(read_image(args.inputs[0]), cfg.diffusion), args.output)
    elif name == "orient":
        _need(args, 1)
        frag, est = normalize_fragment(_fragment(args.inputs[0], cfg, "A"), cfg.orient)
        write_image(frag.image, args.output)
        print(json.dumps({"skew_degrees": est.skew_degrees, "confidence": round(est.confidence, 6),
                          "flip_candidates": list(est.flip_candidates)}))
    elif name == "edges":
        _need(args, 1)
        img = anisotropic_diffuse(read_image(args.inputs[0]), cfg.diffusion)
        edges = canny(img.pixels, cfg.canny)
        write_image(GrayImage(np.where(edges.final, 255, 0).astype(np.uint8)), args.output)
    elif name == "simplify":
        _need(args, 1)
        frag = _fragment(args.inputs[0], cfg, "A")
        bset, sides = _sides(frag, cfg)
        out = {
            "schema_version": SCHEMA_VERSION,
            "inner_boundary": bset.inner is not None,
            "boundary_points": len(bset.working.points),
            "simplified": simplify_dp(bset.working, cfg.simplify).points.tolist(),
            "sides": [{"index": s.side_index, "classification": s.classification,
                       "start": s.start, "points": len(s.chain.points),
                       "simplified": simplify_dp(s.chain, cfg.simplify).points.tolist()}
                      for s in sides],
        }
        if args.output.endswith(".json"):
            _write_json(args.output, out)
        else:
            Path(args.output).write_text("".join(_svg_path(s["simplified"]) + "\n" for s in out["sides"]),
                                         encoding="utf-8")
    else:
        _need(args, 2)
        fa, fb = _fragment(args.inputs[0], cfg, "A"), _fragment(args.inputs[1], cfg, "B")
        _, sa = _sides(fa, cfg)
        _, sb = _sides(fb, cfg)
        flips = (0,) if cfg.orient.assume_upright else (0, 180)
        m = select_pair(sa, sb, flips, cfg.match)
        _write_json(args.output, {"schema_version": SCHEMA_VERSION, "best": m.to_dict(),
                                  "candidates": m.candidates})
    return EXIT_OK


def cmd_synth(args) -> int:
    raw = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise UsageError("manifest must be a JSON array")
    for i, rec in enumerate(raw):
        if isinstance(rec, dict) and "seed" not in rec:
            rec["seed"] = args.seed + i
    tmp = Path(args.output) / "manifest.json"
    Path(args.output).mkdir(parents=True, exist_ok=True)
    _write_json(tmp, raw)
    dirs = synthesize(load_manifest(tmp), args.output)
    print(f"wrote {len(dirs)} pair(s) to {args.output}")
    return EXIT_OK


def _eval_one(job):
    directory, cfg = job
    return evaluate_pair(directory, cfg)


def cmd_eval(args) -> int:
    cfg = _config(args)
    root = Path(args.corpus)
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and (p / "truth.json").exists())
    if not dirs:
        raise UsageError(f"no pairs found under {root}")
    jobs = [(d, cfg) for d in dirs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_eval_one, jobs))
    else:
        rows = [_eval_one(j) for j in jobs]
    rows.sort(key=lambda r: r[0])
    pairs = {name: rep for name, rep, _ in rows}
    report = {"schema_version": SCHEMA_VERSION, "summary": aggregate(list(pairs.values())),
              "pairs": pairs}
    _write_json(args.report, report)
    if args.timings:
        _write_json(args.timings, {name: t for name, _, t in rows})
    s = report["summary"]
    print(f"{s['pairs']} pair(s): {s['accepted']} accepted, {s['match_correct']} correct")
    return EXIT_OK


COMMANDS = {"mend": cmd_mend, "stage": cmd_stage, "synth": cmd_synth, "eval": cmd_eval}


def run_cli(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (TornMendError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main(argv=None):
    sys.exit(run_cli(argv))


if __name__ == "__main__":
    main()
