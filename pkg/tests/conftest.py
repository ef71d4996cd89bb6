import sys
from pathlib import Path

import pytest

from houghvote import VoteFieldSpec, build_temporal_field, build_vote_field

sys.path.insert(0, str(Path(__file__).parent))

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def field_9():
    """3 rings, 90 degrees: R=9, 17x17."""
    return build_vote_field(VoteFieldSpec(90, (2, 8, 16)))


@pytest.fixture(scope="session")
def field_13():
    """3 rings, 60 degrees: R=13, 17x17."""
    return build_vote_field(VoteFieldSpec(60, (2, 8, 16)))


@pytest.fixture(scope="session")
def field_17():
    """5 rings, 90 degrees: R=17, 65x65."""
    return build_vote_field(VoteFieldSpec(90, (2, 8, 16, 32, 64)))


@pytest.fixture(scope="session")
def field_5():
    """2 rings, 90 degrees: R=5, 9x9; cheap enough for pure-Python oracles."""
    return build_vote_field(VoteFieldSpec(90, (2, 8)))


@pytest.fixture(scope="session")
def temporal_field():
    return build_temporal_field()
