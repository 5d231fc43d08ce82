import json
import shutil

import numpy as np
import pytest

from chartattrib import cli
from chartattrib.attribution import GridRegion
from chartattrib.metrics import BoxSet
from chartattrib.raster import load_png, save_png
from chartattrib.tensorio import save_tensor
from chartattrib.verification import SyntheticSpec, exact_multibox_iou, gen_synthetic


def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def jsonl(stdout):
    return [json.loads(line) for line in stdout.strip().splitlines()]


@pytest.fixture
def fixture_dir(tmp_path):
    region = GridRegion(2, 3, 3, 3)
    signal = np.zeros(16)
    signal[0] = 1.0
    spec = SyntheticSpec(seed=7, height=10, width=10, dim=16,
                         planted=((region, signal),))
    grid, query, _ = gen_synthetic(spec)
    save_tensor(grid, tmp_path / "grid.rtn")
    save_tensor(query.astype(np.float32), tmp_path / "query.rtn")
    return tmp_path


def test_attribute_finds_planted_region(capsys, fixture_dir):
    code, out, _ = run_cli(capsys, "attribute",
                           "--grid", fixture_dir / "grid.rtn",
                           "--query", fixture_dir / "query.rtn",
                           "--min-size", 3, "--max-size", 5, "--k", 1)
    assert code == 0
    rec = jsonl(out)[0]
    assert (rec["i"], rec["j"], rec["h"], rec["w"]) == (2, 3, 3, 3)
    assert abs(rec["score"] - 1.0) < 1e-9


def test_attribute_k1_is_prefix_of_k5(capsys, fixture_dir):
    args = ["attribute", "--grid", fixture_dir / "grid.rtn",
            "--query", fixture_dir / "query.rtn",
            "--min-size", 3, "--max-size", 5]
    code1, out1, _ = run_cli(capsys, *args, "--k", 1)
    code5, out5, _ = run_cli(capsys, *args, "--k", 5)
    assert code1 == code5 == 0
    assert jsonl(out1)[0] == jsonl(out5)[0]


def test_attribute_verify_passes_and_detects_mismatch(capsys, fixture_dir, monkeypatch):
    args = ["attribute", "--grid", fixture_dir / "grid.rtn",
            "--query", fixture_dir / "query.rtn",
            "--min-size", 3, "--max-size", 4, "--verify"]
    code, _, _ = run_cli(capsys, *args)
    assert code == 0

    from chartattrib.verification import ScoredRegion
    monkeypatch.setattr(
        cli, "brute_force_attribute",
        lambda *a, **k: ScoredRegion(GridRegion(0, 0, 3, 3), -1.0),
    )
    code, _, err = run_cli(capsys, *args)
    assert code == 3
    assert "mismatch" in err


def test_attribute_pixel_boxes_and_overlay(capsys, fixture_dir, tmp_path):
    img = np.full((100, 100, 3), 255, dtype=np.uint8)
    save_png(img, tmp_path / "chart.png")
    overlay = tmp_path / "overlay.png"
    code, out, _ = run_cli(capsys, "attribute",
                           "--grid", fixture_dir / "grid.rtn",
                           "--query", fixture_dir / "query.rtn",
                           "--min-size", 3, "--max-size", 3, "--k", 1,
                           "--image", tmp_path / "chart.png",
                           "--overlay", overlay)
    assert code == 0
    rec = jsonl(out)[0]
    assert rec["box"] == [30, 20, 60, 50]  # 10-cell grid on 100 px, cell = 10 px
    assert overlay.exists()
    painted = load_png(overlay)
    assert (painted != img).any()


def test_attribute_dim_mismatch_exit_2(capsys, fixture_dir, tmp_path):
    save_tensor(np.ones(3, dtype=np.float32), tmp_path / "bad.rtn")
    code, _, err = run_cli(capsys, "attribute",
                           "--grid", fixture_dir / "grid.rtn",
                           "--query", tmp_path / "bad.rtn")
    assert code == 2
    assert "dim" in err


def test_attribute_missing_file_exit_1(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "attribute",
                         "--grid", tmp_path / "nope.rtn",
                         "--query", tmp_path / "nope2.rtn")
    assert code == 1


def test_iou_identical_manifests(capsys, sample_manifest_path):
    code, out, _ = run_cli(capsys, "iou", "--pred", sample_manifest_path,
                           "--gt", sample_manifest_path)
    assert code == 0
    lines = jsonl(out)
    items = [l for l in lines if "iou" in l]
    assert len(items) == 8
    assert all(l["iou"] == 1.0 for l in items)
    agg = lines[-1]["aggregate"]
    assert agg["mean_iou"] == 1.0


def test_iou_fixture_pair_matches_exact_oracle(capsys, sample_manifest_path,
                                               sample_pred_path):
    code, out, _ = run_cli(capsys, "iou", "--pred", sample_pred_path,
                           "--gt", sample_manifest_path, "--level", "both")
    assert code == 0
    lines = jsonl(out)
    items = {l["id"]: l["iou"] for l in lines if "iou" in l}

    pred = json.loads(sample_pred_path.read_text())
    gt = json.loads(sample_manifest_path.read_text())
    frames = {c["id"]: (c["width"], c["height"]) for c in gt["charts"]}
    chart_of = {q["id"]: q["chart_id"] for q in gt["qa"]}
    for pq, gq in zip(pred["qa"], gt["qa"]):
        frame = frames[chart_of[gq["id"]]]
        expected = exact_multibox_iou(BoxSet(pq["answer_regions"], frame),
                                      BoxSet(gq["answer_regions"], frame))
        assert items[gq["id"]] == expected

    # empty gt vs nonempty pred contributes 0.0
    assert items["qa-l2-b"] == 0.0
    assert items["qa-l1-b"] == 1.0


def test_iou_jobs_do_not_change_output(capsys, sample_manifest_path, sample_pred_path):
    args = ["iou", "--pred", sample_pred_path, "--gt", sample_manifest_path,
            "--level", "both"]
    _, out1, _ = run_cli(capsys, *args, "--jobs", 1)
    _, out4, _ = run_cli(capsys, *args, "--jobs", 4)
    assert out1 == out4


def test_iou_unmatched_ids_exit_2(capsys, sample_manifest_path, tmp_path):
    doc = json.loads(sample_manifest_path.read_text())
    removed = doc["qa"].pop()  # qa-p1-b
    doc["reasoning"] = [s for s in doc["reasoning"] if s["qa_id"] != removed["id"]]
    shutil.copytree(sample_manifest_path.parent / "images", tmp_path / "images")
    p = tmp_path / "pred.json"
    p.write_text(json.dumps(doc))
    code, _, err = run_cli(capsys, "iou", "--pred", p, "--gt", sample_manifest_path)
    assert code == 2
    assert "qa-p1-b" in err


def test_iou_verify_flag(capsys, sample_manifest_path, sample_pred_path):
    code, _, _ = run_cli(capsys, "iou", "--pred", sample_pred_path,
                         "--gt", sample_manifest_path, "--verify")
    assert code == 0


def test_mask_full_frame_is_byte_identical(capsys, tmp_path):
    rng = np.random.default_rng(1)
    img = rng.integers(0, 256, (40, 60, 3), dtype=np.uint8)
    src = tmp_path / "c.png"
    save_png(img, src)
    out = tmp_path / "m.png"
    code, stdout, _ = run_cli(capsys, "mask", "--image", src, "--out", out,
                              "--box", "0,0,60,40")
    assert code == 0
    assert np.array_equal(load_png(out), img)
    assert jsonl(stdout)[0]["kept_pixels"] == 40 * 60


def test_mask_from_manifest_regions(capsys, sample_manifest_path, tmp_path):
    chart = sample_manifest_path.parent / "images" / "c-line-1.png"
    out = tmp_path / "masked.png"
    code, stdout, _ = run_cli(capsys, "mask", "--image", chart, "--out", out,
                              "--manifest", sample_manifest_path, "--qa", "qa-l1-a")
    assert code == 0
    masked = load_png(out)
    kept = jsonl(stdout)[0]["kept_pixels"]
    assert (masked != 0).any(axis=2).sum() <= kept  # some kept pixels may be black


def test_overlay_command(capsys, sample_manifest_path, tmp_path):
    chart = sample_manifest_path.parent / "images" / "c-bar-1.png"
    out = tmp_path / "ov.png"
    code, _, _ = run_cli(capsys, "overlay", "--image", chart, "--out", out,
                         "--manifest", sample_manifest_path, "--qa", "qa-b1-a",
                         "--stroke", "255,0,255", "--stroke-width", 2)
    assert code == 0
    assert (load_png(out) != load_png(chart)).any()


def test_agreement_duplicate_manifests(capsys, sample_manifest_path):
    code, out, _ = run_cli(capsys, "agreement", "--first", sample_manifest_path,
                           "--second", sample_manifest_path)
    assert code == 0
    lines = jsonl(out)
    kappa_line = next(l for l in lines if "kappa" in l)
    assert kappa_line["kappa"] == 1.0
    agg = lines[-1]["aggregate"]
    assert agg["mean_iou"] == 1.0
    assert agg["mean_kappa"] == 1.0


def test_agreement_table(capsys):
    code, out, _ = run_cli(capsys, "agreement", "--table", 40, 5, 10, 45)
    assert code == 0
    assert abs(jsonl(out)[0]["kappa"] - 0.7) < 1e-12


def test_stats_matches_fixture(capsys, sample_manifest_path):
    code, out, _ = run_cli(capsys, "stats", "--manifest", sample_manifest_path)
    assert code == 0
    doc = json.loads(out)
    assert doc["per_type"]["line"]["charts"] == 2
    assert doc["per_type"]["bar"]["qa_pairs"] == 2
    assert doc["grand_total"] == sum(
        doc["totals"][k] for k in ("charts", "qa_pairs", "reasoning_steps",
                                   "qa_regions", "reasoning_regions"))


def test_gen_synthetic_round_trips_through_attribute(capsys, tmp_path):
    out_dir = tmp_path / "fix"
    code, out, _ = run_cli(capsys, "gen-synthetic", "--out", out_dir,
                           "--seed", 3, "--height", 12, "--width", 12,
                           "--dim", 8, "--plant", "4,5,3,3")
    assert code == 0
    assert json.loads((out_dir / "expected.json").read_text())["expected"] == [[4, 5, 3, 3]]
    code, out, _ = run_cli(capsys, "attribute", "--grid", out_dir / "grid.rtn",
                           "--query", out_dir / "query.rtn",
                           "--min-size", 3, "--max-size", 3, "--k", 1)
    assert code == 0
    rec = jsonl(out)[0]
    assert [rec["i"], rec["j"], rec["h"], rec["w"]] == [4, 5, 3, 3]


def test_report_written_with_figures(capsys, sample_manifest_path, tmp_path):
    report = tmp_path / "run.json"
    code, _, _ = run_cli(capsys, "iou", "--pred", sample_manifest_path,
                         "--gt", sample_manifest_path, "--report", report)
    assert code == 0
    doc = json.loads(report.read_text())
    assert doc["command"] == "iou"
    assert doc["aggregates"]["mean_iou"] == 1.0
    assert (tmp_path / "run_summary.png").exists()


def test_env_config_precedence(capsys, fixture_dir, monkeypatch):
    monkeypatch.setenv("CHARTATTRIB_MIN_SIZE", "3")
    monkeypatch.setenv("CHARTATTRIB_MAX_SIZE", "3")
    code, out, _ = run_cli(capsys, "attribute", "--grid", fixture_dir / "grid.rtn",
                           "--query", fixture_dir / "query.rtn", "--k", 1)
    assert code == 0
    assert jsonl(out)[0]["h"] == 3
    # explicit flag wins over the environment
    code, out, _ = run_cli(capsys, "attribute", "--grid", fixture_dir / "grid.rtn",
                           "--query", fixture_dir / "query.rtn", "--k", 1,
                           "--min-size", 4, "--max-size", 4)
    assert jsonl(out)[0]["h"] == 4
