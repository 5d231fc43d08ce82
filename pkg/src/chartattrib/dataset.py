"""Schema, validation, and statistics for attribution dataset manifests.

A dataset is one JSON manifest plus a sibling directory of PNG charts.
The manifest mirrors the three annotation stages: validated reasoning
steps, answer-level attributed regions, and step-level attributed
regions. Boxes are stored as [x1, y1, x2, y2] integers, half-open; the
convention is declared in the header so foreign data with inclusive
corners gets flagged instead of silently mis-scored.

Schema (informal):

    {
      "version": "1",
      "box_convention": "half-open",
      "charts": [{"id", "file", "type", "width", "height"}],
      "qa": [{"id", "chart_id", "question", "answer",
              "answer_regions": [[x1, y1, x2, y2], ...]}],
      "reasoning": [{"qa_id", "step", "text", "valid",
                     "error_category"?, "regions": [[...], ...]}]
    }
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from PIL import Image

from .attribution import PixelBox
from .errors import FormatError, ValidationError

CHART_TYPES = ("line", "bar", "pie")
BOX_CONVENTION = "half-open"


@dataclass(frozen=True)
class ChartRecord:
    chart_id: str
    file: str
    chart_type: str
    width: int
    height: int


@dataclass(frozen=True)
class QAPair:
    qa_id: str
    chart_id: str
    question: str
    answer: str
    answer_regions: tuple[PixelBox, ...]


@dataclass(frozen=True)
class ReasoningStep:
    qa_id: str
    step: int  # 1-based, contiguous per QA pair
    text: str
    valid: bool
    regions: tuple[PixelBox, ...]
    error_category: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    version: str
    charts: tuple[ChartRecord, ...]
    qa_pairs: tuple[QAPair, ...]
    reasoning_steps: tuple[ReasoningStep, ...]

    def chart(self, chart_id: str) -> ChartRecord:
        for c in self.charts:
            if c.chart_id == chart_id:
                return c
        raise KeyError(chart_id)

    def qa(self, qa_id: str) -> QAPair:
        for q in self.qa_pairs:
            if q.qa_id == qa_id:
                return q
        raise KeyError(qa_id)

    def steps_for(self, qa_id: str) -> list[ReasoningStep]:
        return sorted((s for s in self.reasoning_steps if s.qa_id == qa_id),
                      key=lambda s: s.step)


@dataclass
class TypeCounts:
    charts: int = 0
    qa_pairs: int = 0
    reasoning_steps: int = 0
    qa_regions: int = 0
    reasoning_regions: int = 0

    @property
    def total(self) -> int:
        return (self.charts + self.qa_pairs + self.reasoning_steps
                + self.qa_regions + self.reasoning_regions)


@dataclass
class DatasetStats:
    per_type: dict = field(default_factory=dict)  # chart_type -> TypeCounts
    totals: TypeCounts = field(default_factory=TypeCounts)

    @property
    def grand_total(self) -> int:
        return self.totals.total


def _boxes(raw, frame, where: str) -> tuple[PixelBox, ...]:
    out = []
    for b in raw:
        if len(b) != 4:
            raise FormatError(f"{where}: box must be [x1, y1, x2, y2], got {b}")
        x1, y1, x2, y2 = (int(v) for v in b)
        if not (0 <= x1 < x2 <= frame[0] and 0 <= y1 < y2 <= frame[1]):
            raise ValidationError(
                f"{where}: box {b} outside {frame[0]}x{frame[1]} chart frame"
            )
        out.append(PixelBox(x1, y1, x2, y2))
    return tuple(out)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise FormatError(f"{where}: missing field '{key}'")
    return obj[key]


def load_manifest(path, *, verify_images: bool = True) -> DatasetManifest:
    """Parse and validate a manifest file.

    verify_images additionally checks that every chart file exists next
    to the manifest and that its pixel dims match the declared ones;
    turn it off for region-only workflows (IOU scoring, agreement).
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc

    convention = doc.get("box_convention", BOX_CONVENTION)
    if convention != BOX_CONVENTION:
        raise FormatError(
            f"{path}: box_convention '{convention}' not supported (need '{BOX_CONVENTION}')"
        )
    version = str(doc.get("version", "1"))

    charts = []
    frames = {}
    for raw in doc.get("charts", []):
        cid = str(_require(raw, "id", "chart"))
        where = f"chart '{cid}'"
        ctype = _require(raw, "type", where)
        if ctype not in CHART_TYPES:
            raise ValidationError(f"{where}: type '{ctype}' not in {CHART_TYPES}")
        w, h = int(_require(raw, "width", where)), int(_require(raw, "height", where))
        if w < 1 or h < 1:
            raise ValidationError(f"{where}: bad dims {w}x{h}")
        if cid in frames:
            raise ValidationError(f"{where}: duplicate chart id")
        charts.append(ChartRecord(cid, str(_require(raw, "file", where)), ctype, w, h))
        frames[cid] = (w, h)

    qa_pairs = []
    qa_chart = {}
    for raw in doc.get("qa", []):
        qid = str(_require(raw, "id", "qa"))
        where = f"qa '{qid}'"
        cid = str(_require(raw, "chart_id", where))
        if cid not in frames:
            raise ValidationError(f"{where}: references missing chart_id '{cid}'")
        if qid in qa_chart:
            raise ValidationError(f"{where}: duplicate qa id")
        question = str(_require(raw, "question", where))
        answer = str(_require(raw, "answer", where))
        if not question or not answer:
            raise ValidationError(f"{where}: question/answer must be nonempty")
        regions = _boxes(raw.get("answer_regions", []), frames[cid], where)
        qa_pairs.append(QAPair(qid, cid, question, answer, regions))
        qa_chart[qid] = cid

    steps = []
    per_qa = defaultdict(list)
    for raw in doc.get("reasoning", []):
        qid = str(_require(raw, "qa_id", "reasoning"))
        idx = int(_require(raw, "step", f"reasoning for qa '{qid}'"))
        where = f"reasoning qa '{qid}' step {idx}"
        if qid not in qa_chart:
            raise ValidationError(f"{where}: references missing qa_id '{qid}'")
        text = str(_require(raw, "text", where))
        valid = bool(_require(raw, "valid", where))
        regions = _boxes(raw.get("regions", []), frames[qa_chart[qid]], where)
        cat = raw.get("error_category")
        steps.append(ReasoningStep(qid, idx, text, valid, regions,
                                   None if cat is None else str(cat)))
        per_qa[qid].append(idx)

    for qid, indices in per_qa.items():
        if sorted(indices) != list(range(1, len(indices) + 1)):
            raise ValidationError(
                f"reasoning steps for qa '{qid}' not contiguous from 1: {sorted(indices)}"
            )

    covered = {q.chart_id for q in qa_pairs}
    for c in charts:
        if c.chart_id not in covered:
            raise ValidationError(f"chart '{c.chart_id}' has no QA pair")

    if verify_images:
        for c in charts:
            img = path.parent / c.file
            if not img.is_file():
                raise ValidationError(f"chart '{c.chart_id}': image {img} not found")
            with Image.open(img) as im:
                if im.size != (c.width, c.height):
                    raise ValidationError(
                        f"chart '{c.chart_id}': file is {im.size[0]}x{im.size[1]}, "
                        f"manifest says {c.width}x{c.height}"
                    )

    return DatasetManifest(version, tuple(charts), tuple(qa_pairs), tuple(steps))


def save_manifest(m: DatasetManifest, path) -> None:
    """Write the canonical JSON form (stable key order, one round trip
    of load -> save -> load is a fixpoint)."""
    doc = {
        "version": m.version,
        "box_convention": BOX_CONVENTION,
        "charts": [
            {"id": c.chart_id, "file": c.file, "type": c.chart_type,
             "width": c.width, "height": c.height}
            for c in m.charts
        ],
        "qa": [
            {"id": q.qa_id, "chart_id": q.chart_id, "question": q.question,
             "answer": q.answer,
             "answer_regions": [list(b.as_tuple()) for b in q.answer_regions]}
            for q in m.qa_pairs
        ],
        "reasoning": [
            {"qa_id": s.qa_id, "step": s.step, "text": s.text, "valid": s.valid,
             **({"error_category": s.error_category} if s.error_category else {}),
             "regions": [list(b.as_tuple()) for b in s.regions]}
            for s in m.reasoning_steps
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def compute_stats(m: DatasetManifest) -> DatasetStats:
    """Exact per-chart-type counts plus the five-component grand total."""
    stats = DatasetStats()
    chart_type = {c.chart_id: c.chart_type for c in m.charts}
    qa_type = {q.qa_id: chart_type[q.chart_id] for q in m.qa_pairs}

    for t in CHART_TYPES:
        stats.per_type[t] = TypeCounts()
    for c in m.charts:
        stats.per_type[c.chart_type].charts += 1
    for q in m.qa_pairs:
        tc = stats.per_type[qa_type[q.qa_id]]
        tc.qa_pairs += 1
        tc.qa_regions += len(q.answer_regions)
    for s in m.reasoning_steps:
        tc = stats.per_type[qa_type[s.qa_id]]
        tc.reasoning_steps += 1
        tc.reasoning_regions += len(s.regions)

    for tc in stats.per_type.values():
        stats.totals.charts += tc.charts
        stats.totals.qa_pairs += tc.qa_pairs
        stats.totals.reasoning_steps += tc.reasoning_steps
        stats.totals.qa_regions += tc.qa_regions
        stats.totals.reasoning_regions += tc.reasoning_regions
    return stats
