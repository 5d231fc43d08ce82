#!/usr/bin/env python3
"""Regenerate the bundled sample dataset under src/chartattrib/data/sample/.

Draws four small deterministic charts (two line, one bar, one pie) and
writes the ground-truth manifest plus a perturbed prediction manifest
used by the iou/agreement demos.
"""

import json
from pathlib import Path

from PIL import Image, ImageDraw

ROOT = Path(__file__).resolve().parents[1] / "src" / "chartattrib" / "data" / "sample"

GRAY = (200, 200, 200)
BLUE = (40, 90, 200)
ORANGE = (230, 130, 30)
GREEN = (50, 160, 80)
RED = (200, 60, 50)


def line_chart(path, w, h, series, colors):
    im = Image.new("RGB", (w, h), "white")
    d = ImageDraw.Draw(im)
    for y in range(15, h, 20):
        d.line([(5, y), (w - 5, y)], fill=GRAY)
    for pts, color in zip(series, colors):
        d.line(pts, fill=color, width=2)
        for x, y in pts:
            d.ellipse([x - 2, y - 2, x + 2, y + 2], fill=color)
    im.save(path)


def bar_chart(path, w, h, bars, colors):
    im = Image.new("RGB", (w, h), "white")
    d = ImageDraw.Draw(im)
    d.line([(8, h - 10), (w - 8, h - 10)], fill=(60, 60, 60), width=2)
    for (x0, top, x1), color in zip(bars, colors):
        d.rectangle([x0, top, x1, h - 11], fill=color)
    im.save(path)


def pie_chart(path, w, h, slices, colors):
    im = Image.new("RGB", (w, h), "white")
    d = ImageDraw.Draw(im)
    box = [10, 10, w - 10, h - 10]
    start = 0
    for extent, color in zip(slices, colors):
        d.pieslice(box, start, start + extent, fill=color, outline="white")
        start += extent
    im.save(path)


def main():
    images = ROOT / "images"
    images.mkdir(parents=True, exist_ok=True)

    line_chart(images / "c-line-1.png", 140, 100,
               [[(10, 70), (40, 80), (70, 60), (100, 75), (130, 65)],
                [(10, 40), (40, 30), (70, 20), (100, 35), (130, 45)]],
               [ORANGE, BLUE])
    line_chart(images / "c-line-2.png", 140, 100,
               [[(10, 30), (45, 45), (80, 35), (115, 55), (135, 50)]],
               [GREEN])
    bar_chart(images / "c-bar-1.png", 160, 120,
              [(12, 30, 40), (60, 20, 88), (108, 44, 136)],
              [BLUE, ORANGE, GREEN])
    pie_chart(images / "c-pie-1.png", 120, 120, [140, 130, 90],
              [BLUE, ORANGE, GREEN])

    manifest = {
        "version": "1",
        "box_convention": "half-open",
        "charts": [
            {"id": "c-line-1", "file": "images/c-line-1.png", "type": "line",
             "width": 140, "height": 100},
            {"id": "c-line-2", "file": "images/c-line-2.png", "type": "line",
             "width": 140, "height": 100},
            {"id": "c-bar-1", "file": "images/c-bar-1.png", "type": "bar",
             "width": 160, "height": 120},
            {"id": "c-pie-1", "file": "images/c-pie-1.png", "type": "pie",
             "width": 120, "height": 120},
        ],
        "qa": [
            {"id": "qa-l1-a", "chart_id": "c-line-1",
             "question": "How many markers on the orange line fall below the middle gridline?",
             "answer": "3",
             "answer_regions": [[10, 60, 50, 90], [70, 55, 100, 85]]},
            {"id": "qa-l1-b", "chart_id": "c-line-1",
             "question": "Where does the blue line peak?",
             "answer": "third point",
             "answer_regions": [[55, 10, 75, 35]]},
            {"id": "qa-l2-a", "chart_id": "c-line-2",
             "question": "What is the trend of the green line?",
             "answer": "downward with a bump",
             "answer_regions": [[20, 20, 60, 50]]},
            {"id": "qa-l2-b", "chart_id": "c-line-2",
             "question": "How many series does the chart show?",
             "answer": "1",
             "answer_regions": []},
            {"id": "qa-b1-a", "chart_id": "c-bar-1",
             "question": "Which two bars are tallest?",
             "answer": "first and second",
             "answer_regions": [[12, 30, 40, 110], [60, 20, 88, 110]]},
            {"id": "qa-b1-b", "chart_id": "c-bar-1",
             "question": "What is the shortest bar?",
             "answer": "the third", "answer_regions": [[108, 44, 136, 110]]},
            {"id": "qa-p1-a", "chart_id": "c-pie-1",
             "question": "Which slice is largest?",
             "answer": "the blue slice", "answer_regions": [[10, 10, 60, 60]]},
            {"id": "qa-p1-b", "chart_id": "c-pie-1",
             "question": "Which slice is smallest?",
             "answer": "the green slice", "answer_regions": [[60, 60, 110, 110]]},
        ],
        "reasoning": [
            {"qa_id": "qa-l1-a", "step": 1,
             "text": "The orange line is the lower series.",
             "valid": True, "regions": [[10, 55, 100, 95]]},
            {"qa_id": "qa-l1-a", "step": 2,
             "text": "Three of its markers sit below the middle gridline.",
             "valid": True, "regions": [[10, 60, 50, 90], [70, 55, 100, 85]]},
            {"qa_id": "qa-l1-b", "step": 1,
             "text": "The blue line reaches its highest point at the third marker.",
             "valid": True, "regions": [[55, 10, 75, 35]]},
            {"qa_id": "qa-l2-a", "step": 1,
             "text": "The blue line trends downward overall.",
             "valid": False, "error_category": "color mismatch",
             "regions": [[20, 20, 60, 50]]},
            {"qa_id": "qa-l2-a", "step": 2,
             "text": "There is a bump at the third point.",
             "valid": True, "regions": []},
            {"qa_id": "qa-b1-a", "step": 1,
             "text": "The first bar tops out near the 30px line.",
             "valid": True, "regions": [[12, 30, 40, 110]]},
            {"qa_id": "qa-b1-a", "step": 2,
             "text": "The second bar is the tallest of all three.",
             "valid": True, "regions": [[60, 20, 88, 110]]},
            {"qa_id": "qa-p1-a", "step": 1,
             "text": "The blue slice spans the widest angle.",
             "valid": True, "regions": [[10, 10, 60, 60]]},
        ],
    }
    (ROOT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    # Perturbed predictions over the same charts/ids: shifted, merged,
    # missing, and spurious regions, plus one flipped validity flag.
    pred = json.loads(json.dumps(manifest))
    regions = {q["id"]: q for q in pred["qa"]}
    regions["qa-l1-a"]["answer_regions"] = [[15, 65, 55, 95], [75, 60, 105, 90]]
    regions["qa-l2-a"]["answer_regions"] = [[25, 25, 65, 55]]
    regions["qa-l2-b"]["answer_regions"] = [[5, 5, 25, 25]]
    regions["qa-b1-a"]["answer_regions"] = [[12, 20, 88, 110]]
    regions["qa-p1-a"]["answer_regions"] = [[70, 10, 110, 50]]
    for step in pred["reasoning"]:
        if step["qa_id"] == "qa-l2-a" and step["step"] == 1:
            step["valid"] = True
            step.pop("error_category")
    (ROOT / "pred.json").write_text(json.dumps(pred, indent=2) + "\n")
    print(f"wrote fixture under {ROOT}")


if __name__ == "__main__":
    main()
