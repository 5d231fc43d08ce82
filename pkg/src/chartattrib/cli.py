"""Command-line front-end.

Per-item results go to stdout as JSON lines; `--report PATH` writes a
single JSON document (with summary figures alongside) for the whole
run. Configuration precedence is flags > CHARTATTRIB_* environment
variables > built-in defaults, and the effective config is echoed into
every report.

Exit codes: 0 success, 1 I/O, 2 contract/validation, 3 verification
mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .attribution import (
    GridRegion,
    WindowConfig,
    attribute_topk,
    grid_to_pixels,
)
from .dataset import compute_stats, load_manifest
from .errors import ChartAttribError, ContractError, VerificationError
from .metrics import AgreementTable, BoxSet, kappa, multibox_iou, rasterize
from .raster import load_png, mask_outside, overlay_boxes, save_png
from .report import build_report, write_report
from .tensorio import load_tensor, save_tensor
from .verification import (
    SyntheticSpec,
    brute_force_attribute,
    exact_multibox_iou,
    gen_synthetic,
)

ENV_PREFIX = "CHARTATTRIB_"

_DEFAULTS = {
    "min_size": 3,
    "max_size": 35,
    "square_only": True,
    "stride": 1,
    "k": 5,
    "nms_iou": 0.3,
    "jobs": 1,
}


def _env(name: str):
    return os.environ.get(ENV_PREFIX + name.upper())


def _resolve(args, name: str):
    """flags > environment > defaults."""
    value = getattr(args, name, None)
    if value is not None:
        return value
    raw = _env(name)
    if raw is not None:
        default = _DEFAULTS[name]
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return type(default)(raw)
    return _DEFAULTS[name]


def _window_config(args) -> tuple[WindowConfig, dict]:
    cfg = WindowConfig(
        min_size=_resolve(args, "min_size"),
        max_size=_resolve(args, "max_size"),
        square_only=_resolve(args, "square_only"),
        stride=_resolve(args, "stride"),
    )
    echo = {
        "min_size": cfg.min_size,
        "max_size": cfg.max_size,
        "square_only": cfg.square_only,
        "stride": cfg.stride,
    }
    return cfg, echo


def _emit(record: dict):
    print(json.dumps(record, sort_keys=True))


def _parse_quad(text: str, what: str = "box x1,y1,x2,y2"):
    parts = [int(p) for p in text.replace(",", " ").split()]
    if len(parts) != 4:
        raise ContractError(f"expected {what}, got '{text}'")
    return tuple(parts)


def _gather_boxes(args, frame) -> BoxSet:
    boxes = [_parse_quad(b) for b in (args.box or [])]
    if args.boxes_json:
        boxes.extend(tuple(int(v) for v in b)
                     for b in json.loads(Path(args.boxes_json).read_text()))
    if args.manifest:
        m = load_manifest(args.manifest, verify_images=False)
        if not args.qa:
            raise ContractError("--manifest needs --qa to pick a region source")
        qa = m.qa(args.qa)
        if args.step is None:
            boxes.extend(b.as_tuple() for b in qa.answer_regions)
        else:
            steps = [s for s in m.steps_for(args.qa) if s.step == args.step]
            if not steps:
                raise ContractError(f"qa '{args.qa}' has no step {args.step}")
            boxes.extend(b.as_tuple() for b in steps[0].regions)
    return BoxSet(boxes, frame)


# ---------------------------------------------------------------- attribute


def cmd_attribute(args) -> int:
    grid = load_tensor(args.grid)
    query = load_tensor(args.query)
    if grid.ndim != 3:
        raise ContractError(f"grid tensor must be rank 3, got rank {grid.ndim}")
    if query.ndim != 1:
        raise ContractError(f"query tensor must be rank 1, got rank {query.ndim}")
    cfg, echo = _window_config(args)
    k = _resolve(args, "k")
    nms = _resolve(args, "nms_iou")
    echo.update({"k": k, "nms_iou": nms})

    image = load_png(args.image) if args.image else None
    img_w = img_h = None
    if image is not None:
        img_h, img_w = image.shape[:2]
    elif args.width or args.height:
        if not (args.width and args.height):
            raise ContractError("--width and --height must be given together")
        img_w, img_h = args.width, args.height

    results = attribute_topk(grid, query, cfg, k=k, nms_iou=nms)

    if args.verify:
        oracle = brute_force_attribute(grid, query, cfg)
        got = results[0]
        if got.region != oracle.region or abs(got.score - oracle.score) > 1e-5:
            raise VerificationError(
                f"attribute mismatch: fast {got.region} {got.score!r} "
                f"vs brute force {oracle.region} {oracle.score!r}"
            )

    gh, gw = grid.shape[:2]
    items = []
    for rank, sr in enumerate(results):
        r = sr.region
        rec = {"rank": rank, "i": r.i, "j": r.j, "h": r.h, "w": r.w,
               "score": float(sr.score)}
        if img_w is not None:
            rec["box"] = list(grid_to_pixels(r, gh, gw, img_w, img_h).as_tuple())
        items.append(rec)
        _emit(rec)

    if args.overlay:
        if image is None:
            raise ContractError("--overlay needs --image")
        boxes = BoxSet([tuple(it["box"]) for it in items], (img_w, img_h))
        save_png(overlay_boxes(image, boxes, width=args.stroke_width), args.overlay)

    if args.report:
        rep = build_report("attribute", __version__, echo, items)
        write_report(rep, args.report, figures=args.figures)
    return 0


# ---------------------------------------------------------------------- iou


def _iou_items(pred, gt, level: str):
    """(item id, chart_type, frame, pred regions, gt regions) per scored item."""
    frames = {c.chart_id: (c.width, c.height) for c in gt.charts}
    types = {c.chart_id: c.chart_type for c in gt.charts}
    for c in pred.charts:
        if c.chart_id in frames and frames[c.chart_id] != (c.width, c.height):
            raise ContractError(
                f"chart '{c.chart_id}' frame differs between manifests"
            )

    def check_match(pred_ids, gt_ids, what):
        missing = sorted(gt_ids - pred_ids)
        extra = sorted(pred_ids - gt_ids)
        if missing or extra:
            raise ContractError(
                f"unmatched {what}: missing from pred {missing}, not in gt {extra}"
            )

    items = []
    if level in ("answer", "both"):
        pq = {q.qa_id: q for q in pred.qa_pairs}
        gq = {q.qa_id: q for q in gt.qa_pairs}
        check_match(set(pq), set(gq), "qa ids")
        for qid in sorted(gq):
            chart = gq[qid].chart_id
            items.append((qid, types[chart], frames[chart],
                          pq[qid].answer_regions, gq[qid].answer_regions))
    if level in ("reasoning", "both"):
        ps = {(s.qa_id, s.step): s for s in pred.reasoning_steps}
        gs = {(s.qa_id, s.step): s for s in gt.reasoning_steps}
        check_match(set(ps), set(gs), "reasoning steps")
        for key in sorted(gs):
            chart = next(q.chart_id for q in gt.qa_pairs if q.qa_id == key[0])
            items.append((f"{key[0]}#step{key[1]}", types[chart], frames[chart],
                          ps[key].regions, gs[key].regions))
    return items


def cmd_iou(args) -> int:
    pred = load_manifest(args.pred, verify_images=False)
    gt = load_manifest(args.gt, verify_images=False)
    jobs = _resolve(args, "jobs")
    work = _iou_items(pred, gt, args.level)

    def score(entry):
        item_id, ctype, frame, p_regions, g_regions = entry
        p = BoxSet(p_regions, frame)
        g = BoxSet(g_regions, frame)
        value = multibox_iou(p, g)
        if args.verify:
            exact = exact_multibox_iou(p, g)
            if value != exact:
                raise VerificationError(
                    f"iou mismatch on {item_id}: mask {value!r} vs exact {exact!r}"
                )
        return {"id": item_id, "chart_type": ctype, "iou": value}

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            items = list(pool.map(score, work))
    else:
        items = [score(e) for e in work]

    for rec in items:
        _emit(rec)
    config = {"level": args.level, "jobs": jobs, "verify": bool(args.verify)}
    rep = build_report("iou", __version__, config, items)
    _emit({"aggregate": rep.aggregates})
    if args.report:
        write_report(rep, args.report, figures=args.figures)
    return 0


# ------------------------------------------------------------ mask / overlay


def cmd_mask(args) -> int:
    image = load_png(args.image)
    h, w = image.shape[:2]
    boxes = _gather_boxes(args, (w, h))
    save_png(mask_outside(image, boxes), args.out)
    _emit({"out": str(args.out), "kept_pixels": rasterize(boxes).count(),
           "frame": [w, h]})
    return 0


def cmd_overlay(args) -> int:
    image = load_png(args.image)
    h, w = image.shape[:2]
    boxes = _gather_boxes(args, (w, h))
    stroke = tuple(int(v) for v in args.stroke.split(","))
    if len(stroke) != 3:
        raise ContractError(f"--stroke must be R,G,B - got '{args.stroke}'")
    save_png(overlay_boxes(image, boxes, stroke, args.stroke_width), args.out)
    _emit({"out": str(args.out), "boxes": len(boxes), "frame": [w, h]})
    return 0


# --------------------------------------------------------------- agreement


def cmd_agreement(args) -> int:
    if args.table:
        a, b, c, d = args.table
        value = kappa(AgreementTable(a, b, c, d))
        items = [{"id": "table", "kappa": value, "n": a + b + c + d}]
        for rec in items:
            _emit(rec)
        config = {"source": "table"}
    else:
        if not (args.first and args.second):
            raise ContractError("agreement needs either --table or --first/--second")
        m1 = load_manifest(args.first, verify_images=False)
        m2 = load_manifest(args.second, verify_images=False)

        s1 = {(s.qa_id, s.step): s for s in m1.reasoning_steps}
        s2 = {(s.qa_id, s.step): s for s in m2.reasoning_steps}
        shared = sorted(set(s1) & set(s2))
        counts = [0, 0, 0, 0]  # a, b, c, d over the validity flags
        for key in shared:
            v1, v2 = s1[key].valid, s2[key].valid
            counts[0 if v1 and v2 else 1 if v1 else 2 if v2 else 3] += 1
        items = []
        if shared:
            items.append({"id": "stage1-validity",
                          "kappa": kappa(AgreementTable(*counts)),
                          "n": len(shared)})

        frames = {c.chart_id: (c.width, c.height) for c in m1.charts}
        q1 = {q.qa_id: q for q in m1.qa_pairs}
        q2 = {q.qa_id: q for q in m2.qa_pairs}
        for qid in sorted(set(q1) & set(q2)):
            frame = frames[q1[qid].chart_id]
            items.append({"id": qid, "level": "answer",
                          "iou": multibox_iou(BoxSet(q1[qid].answer_regions, frame),
                                              BoxSet(q2[qid].answer_regions, frame))})
        for key in shared:
            frame = frames[q1[key[0]].chart_id]
            items.append({"id": f"{key[0]}#step{key[1]}", "level": "reasoning",
                          "iou": multibox_iou(BoxSet(s1[key].regions, frame),
                                              BoxSet(s2[key].regions, frame))})
        for rec in items:
            _emit(rec)
        config = {"source": "manifests"}

    rep = build_report("agreement", __version__, config, items)
    _emit({"aggregate": rep.aggregates})
    if args.report:
        write_report(rep, args.report, figures=args.figures)
    return 0


# -------------------------------------------------------------------- stats


def cmd_stats(args) -> int:
    m = load_manifest(args.manifest, verify_images=not args.skip_images)
    stats = compute_stats(m)
    doc = {
        "per_type": {
            t: {"charts": tc.charts, "qa_pairs": tc.qa_pairs,
                "reasoning_steps": tc.reasoning_steps,
                "qa_regions": tc.qa_regions,
                "reasoning_regions": tc.reasoning_regions,
                "total": tc.total}
            for t, tc in stats.per_type.items()
        },
        "totals": {"charts": stats.totals.charts,
                   "qa_pairs": stats.totals.qa_pairs,
                   "reasoning_steps": stats.totals.reasoning_steps,
                   "qa_regions": stats.totals.qa_regions,
                   "reasoning_regions": stats.totals.reasoning_regions},
        "grand_total": stats.grand_total,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.report:
        items = [{"chart_type": t, **doc["per_type"][t]} for t in doc["per_type"]]
        rep = build_report("stats", __version__, {"manifest": str(args.manifest)}, items)
        write_report(rep, args.report, figures=args.figures)
    return 0


# ------------------------------------------------------------ gen-synthetic


def cmd_gen_synthetic(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    regions = [GridRegion(*_parse_quad(p, "region i,j,h,w"))
               for p in (args.plant or [])]
    signal_rng = np.random.default_rng([args.seed, 1])
    signal = signal_rng.standard_normal(args.dim)
    spec = SyntheticSpec(
        seed=args.seed, height=args.height, width=args.width, dim=args.dim,
        planted=tuple((r, signal) for r in regions), noise=args.noise,
    )
    grid, query, expected = gen_synthetic(spec)
    save_tensor(grid, out / "grid.rtn")
    save_tensor(query.astype(np.float32), out / "query.rtn")
    doc = {
        "seed": args.seed, "height": args.height, "width": args.width,
        "dim": args.dim, "noise": args.noise,
        "expected": [[r.i, r.j, r.h, r.w] for r in expected],
    }
    (out / "expected.json").write_text(json.dumps(doc, indent=2) + "\n")
    _emit({"out": str(out), "files": ["grid.rtn", "query.rtn", "expected.json"],
           "expected": doc["expected"]})
    return 0


# --------------------------------------------------------------------- main


def _add_report_flags(p):
    p.add_argument("--report", metavar="PATH", help="write a JSON run report")
    p.add_argument("--figures", default=True,
                   action=argparse.BooleanOptionalAction,
                   help="render summary figures next to the report")


def _add_window_flags(p):
    p.add_argument("--min-size", dest="min_size", type=int)
    p.add_argument("--max-size", dest="max_size", type=int)
    p.add_argument("--square-only", dest="square_only",
                   action=argparse.BooleanOptionalAction)
    p.add_argument("--stride", type=int)


def _add_box_sources(p):
    p.add_argument("--box", action="append", metavar="X1,Y1,X2,Y2")
    p.add_argument("--boxes-json", dest="boxes_json", metavar="FILE")
    p.add_argument("--manifest", metavar="FILE")
    p.add_argument("--qa", metavar="QA_ID")
    p.add_argument("--step", type=int, metavar="N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chartattrib",
        description="Sliding-window chart attribution and box-set evaluation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attribute", help="locate chart regions supporting a query")
    p.add_argument("--grid", required=True, help="patch-grid .rtn tensor (H x W x D)")
    p.add_argument("--query", required=True, help="query .rtn tensor (D)")
    p.add_argument("--image", help="chart PNG for pixel mapping and overlay")
    p.add_argument("--width", type=int, help="image width when no --image given")
    p.add_argument("--height", type=int, help="image height when no --image given")
    p.add_argument("--overlay", metavar="OUT.png")
    p.add_argument("--stroke-width", dest="stroke_width", type=int, default=2)
    _add_window_flags(p)
    p.add_argument("--k", type=int)
    p.add_argument("--nms-iou", dest="nms_iou", type=float)
    p.add_argument("--verify", action="store_true",
                   help="cross-check against the brute-force oracle")
    _add_report_flags(p)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("iou", help="multi-box IOU between two manifests")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--level", choices=("answer", "reasoning", "both"),
                   default="answer")
    p.add_argument("--jobs", type=int)
    p.add_argument("--verify", action="store_true",
                   help="cross-check against the exact-geometry oracle")
    _add_report_flags(p)
    p.set_defaults(func=cmd_iou)

    p = sub.add_parser("mask", help="zero pixels outside attributed regions")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    _add_box_sources(p)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("overlay", help="draw region outlines on a chart")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stroke", default="255,0,0", metavar="R,G,B")
    p.add_argument("--stroke-width", dest="stroke_width", type=int, default=2)
    _add_box_sources(p)
    p.set_defaults(func=cmd_overlay)

    p = sub.add_parser("agreement", help="kappa and pairwise IOU agreement")
    p.add_argument("--table", nargs=4, type=int, metavar=("A", "B", "C", "D"))
    p.add_argument("--first", metavar="MANIFEST")
    p.add_argument("--second", metavar="MANIFEST")
    _add_report_flags(p)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("stats", help="dataset composition statistics")
    p.add_argument("--manifest", required=True)
    p.add_argument("--skip-images", dest="skip_images", action="store_true",
                   help="do not open chart files to verify dims")
    _add_report_flags(p)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("gen-synthetic", help="write a synthetic grid/query fixture")
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--height", type=int, default=35)
    p.add_argument("--width", type=int, default=35)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--plant", action="append", metavar="I,J,H,W")
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_gen_synthetic)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VerificationError as exc:
        print(f"chartattrib: verification failed: {exc}", file=sys.stderr)
        return 3
    except ChartAttribError as exc:
        print(f"chartattrib: {exc}", file=sys.stderr)
        return 2
    except (OSError, EOFError) as exc:
        print(f"chartattrib: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
