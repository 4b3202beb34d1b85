from __future__ import annotations

from pathlib import Path

import pytest

from trackday import tracks
from trackday.track import load_track

DATA = Path(__file__).resolve().parent.parent / "src" / "trackday" / "data"


@pytest.fixture(scope="session")
def hairpin():
    return load_track(DATA / "hairpin.json")


@pytest.fixture(scope="session")
def oval():
    return load_track(DATA / "oval.json")


@pytest.fixture(scope="session")
def straight():
    return tracks.long_straight_track()


@pytest.fixture(scope="session")
def data_dir():
    return DATA
