import numpy as np
import pytest

from chartattrib import errors
from chartattrib.attribution import PixelBox
from chartattrib.metrics import (
    AgreementTable,
    BoxSet,
    kappa,
    multibox_iou,
    rasterize,
    single_iou,
    sts_cosine,
)


def enumerate_pixels(boxes, frame):
    """Pixel-enumeration oracle: set of covered (x, y)."""
    covered = set()
    for x1, y1, x2, y2 in boxes:
        for y in range(max(y1, 0), min(y2, frame[1])):
            for x in range(max(x1, 0), min(x2, frame[0])):
                covered.add((x, y))
    return covered


# ----------------------------------------------------------------- rasterize


def test_rasterize_overlapping_pair():
    s = BoxSet([(0, 0, 2, 2), (1, 1, 3, 3)], (4, 4))
    mask = rasterize(s)
    assert mask.count() == 7  # 4 + 4 - 1 shared pixel
    oracle = enumerate_pixels([(0, 0, 2, 2), (1, 1, 3, 3)], (4, 4))
    got = {(x, y) for y, x in np.argwhere(mask.to_array())[:, :2].tolist()}
    assert got == oracle


def test_rasterize_empty_set():
    assert rasterize(BoxSet([], (5, 3))).count() == 0


def test_rasterize_full_frame():
    mask = rasterize(BoxSet([(0, 0, 6, 4)], (6, 4)))
    assert mask.count() == 24


def test_boxset_clamps_out_of_frame():
    s = BoxSet([(-5, -5, 3, 3), (100, 100, 200, 200)], (10, 10))
    assert len(s) == 1
    assert s.boxes[0].as_tuple() == (0, 0, 3, 3)


# -------------------------------------------------------------- multibox_iou


def test_multibox_iou_quarter_overlap():
    pred = BoxSet([(0, 0, 10, 10)], (20, 20))
    gt = BoxSet([(5, 5, 15, 15)], (20, 20))
    assert multibox_iou(pred, gt) == 25 / 175


def test_multibox_iou_internal_overlap_collapses():
    pred = BoxSet([(0, 0, 10, 10), (5, 0, 15, 10)], (20, 20))
    gt = BoxSet([(0, 0, 15, 10)], (20, 20))
    assert multibox_iou(pred, gt) == 1.0


def test_multibox_iou_identity_and_disjoint():
    a = BoxSet([(0, 0, 3, 3), (5, 5, 8, 8)], (10, 10))
    b = BoxSet([(0, 5, 3, 8)], (10, 10))
    assert multibox_iou(a, a) == 1.0
    assert multibox_iou(a, b) == 0.0


def test_multibox_iou_empty_conventions():
    empty = BoxSet([], (10, 10))
    full = BoxSet([(0, 0, 5, 5)], (10, 10))
    assert multibox_iou(empty, empty) == 1.0
    assert multibox_iou(empty, full) == 0.0
    assert multibox_iou(full, empty) == 0.0


def test_multibox_iou_frame_mismatch():
    with pytest.raises(errors.ContractError):
        multibox_iou(BoxSet([], (10, 10)), BoxSet([], (11, 10)))


def test_multibox_iou_symmetry_random():
    rng = np.random.default_rng(5)
    for _ in range(25):
        frame = (int(rng.integers(5, 40)), int(rng.integers(5, 40)))
        def rand_set():
            boxes = []
            for _ in range(int(rng.integers(0, 4))):
                x1 = int(rng.integers(0, frame[0] - 1))
                y1 = int(rng.integers(0, frame[1] - 1))
                boxes.append((x1, y1, int(rng.integers(x1 + 1, frame[0] + 1)),
                              int(rng.integers(y1 + 1, frame[1] + 1))))
            return BoxSet(boxes, frame)
        a, b = rand_set(), rand_set()
        assert multibox_iou(a, b) == multibox_iou(b, a)
        assert 0.0 <= multibox_iou(a, b) <= 1.0


def test_multibox_reduces_to_single_iou():
    p = PixelBox(2, 3, 9, 11)
    g = PixelBox(4, 5, 12, 14)
    frame = (20, 20)
    assert multibox_iou(BoxSet([p], frame), BoxSet([g], frame)) == single_iou(p, g)


# ---------------------------------------------------------------- single_iou


def test_single_iou_identity():
    b = PixelBox(1, 1, 5, 5)
    assert single_iou(b, b) == 1.0


def test_single_iou_quarter():
    assert single_iou(PixelBox(0, 0, 10, 10), PixelBox(5, 5, 15, 15)) == 25 / 175


def test_single_iou_touching_is_zero():
    assert single_iou(PixelBox(0, 0, 5, 5), PixelBox(5, 0, 10, 5)) == 0.0


def test_single_iou_symmetry():
    a = PixelBox(0, 0, 7, 4)
    b = PixelBox(3, 1, 9, 8)
    assert single_iou(a, b) == single_iou(b, a)


# --------------------------------------------------------------------- kappa


def test_kappa_perfect_agreement():
    assert kappa(AgreementTable(50, 0, 0, 50)) == 1.0


def test_kappa_worked_example():
    assert abs(kappa(AgreementTable(40, 5, 10, 45)) - 0.7) <= 1e-12


def test_kappa_chance_level():
    assert kappa(AgreementTable(25, 25, 25, 25)) == 0.0


def test_kappa_degenerate_marginals():
    assert kappa(AgreementTable(10, 0, 0, 0)) == 1.0
    assert kappa(AgreementTable(0, 0, 0, 10)) == 1.0


def test_kappa_annotator_swap_symmetry():
    rng = np.random.default_rng(9)
    for _ in range(20):
        a, b, c, d = (int(v) for v in rng.integers(0, 30, 4))
        if a + b + c + d == 0:
            continue
        t1 = AgreementTable(a, b, c, d)
        t2 = AgreementTable(a, c, b, d)
        try:
            k1 = kappa(t1)
        except errors.ContractError:
            continue
        assert k1 == kappa(t2)
        assert k1 <= 1.0


def test_agreement_table_validation():
    with pytest.raises(errors.ValidationError):
        AgreementTable(-1, 0, 0, 5)
    with pytest.raises(errors.ValidationError):
        AgreementTable(0, 0, 0, 0)


# ---------------------------------------------------------------- sts_cosine


def test_sts_cosine_identity_orthogonal_closed_form():
    v = [0.5, 1.5, -2.0]
    assert abs(sts_cosine(v, v) - 1.0) <= 1e-12
    assert sts_cosine([1, 0], [0, 1]) == 0.0
    assert abs(sts_cosine([1, 0], [1, 1]) - 1 / np.sqrt(2)) <= 1e-12
