import json
import shutil
from pathlib import Path

import pytest

GOLDEN_PATH = Path(__file__).resolve().parents[2] / "testdata" / "sample_crop_vectors.json"


@pytest.fixture(scope="session")
def golden_vectors() -> dict:
    # Shared with the consuming experiment runner; parity with these vectors
    # is what makes exported crop boxes reproducible across the two programs.
    with open(GOLDEN_PATH, "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def crossalign_cli() -> str:
    exe = shutil.which("crossalign")
    if exe is None:
        pytest.skip("consumer CLI not installed; interop checks need crossalign on PATH")
    return exe
