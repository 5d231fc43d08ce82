from pathlib import Path

import pytest

SAMPLE_DIR = Path(__file__).resolve().parents[1] / "src" / "chartattrib" / "data" / "sample"


@pytest.fixture
def sample_manifest_path():
    return SAMPLE_DIR / "manifest.json"


@pytest.fixture
def sample_pred_path():
    return SAMPLE_DIR / "pred.json"
