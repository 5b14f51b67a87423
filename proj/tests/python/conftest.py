import os
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def fixtures():
    return Path(os.environ.get("SCIAGENT_FIXTURES", ROOT / "fixtures"))
