"""Shared paths and helpers for the test suite."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

TESTDATA = Path(__file__).resolve().parent.parent / "testdata"


@pytest.fixture(scope="session")
def crop_vectors() -> dict:
    with open(TESTDATA / "sample_crop_vectors.json") as fh:
        return json.load(fh)
