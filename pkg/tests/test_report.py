import json

from chartattrib.report import build_report, recompute_aggregates, write_report


def test_aggregates_equal_recomputation():
    items = [
        {"id": "a", "chart_type": "line", "iou": 0.5},
        {"id": "b", "chart_type": "line", "iou": 1.0},
        {"id": "c", "chart_type": "bar", "iou": 0.0},
    ]
    rep = build_report("iou", "0.0-test", {"jobs": 1}, items)
    assert rep.aggregates == recompute_aggregates(rep.items)
    assert rep.aggregates["mean_iou"] == 0.5
    assert rep.aggregates["mean_iou_by_type"] == {"bar": 0.0, "line": 0.75}
    assert rep.aggregates["count"] == 3


def test_write_report_and_figure(tmp_path):
    items = [{"id": str(i), "score": i / 10} for i in range(10)]
    rep = build_report("attribute", "0.0-test", {"k": 5}, items)
    written = write_report(rep, tmp_path / "r.json")
    assert written[0].name == "r.json"
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["config"] == {"k": 5}
    assert doc["version"] == "0.0-test"
    assert (tmp_path / "r_summary.png").exists()


def test_write_report_without_figures(tmp_path):
    rep = build_report("iou", "0.0-test", {}, [{"id": "x", "iou": 1.0}])
    written = write_report(rep, tmp_path / "r.json", figures=False)
    assert len(written) == 1
    assert not (tmp_path / "r_summary.png").exists()


def test_report_bytes_deterministic(tmp_path):
    items = [{"id": "a", "iou": 0.25}, {"id": "b", "iou": 0.75}]
    rep = build_report("iou", "0.0-test", {"jobs": 1}, items)
    write_report(rep, tmp_path / "r1.json", figures=False)
    write_report(rep, tmp_path / "r2.json", figures=False)
    assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()
