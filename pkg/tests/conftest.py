from datetime import datetime, timezone

import pytest

from micg.hierarchy import default_config

TS = datetime(2026, 1, 1, tzinfo=timezone.utc)


@pytest.fixture(scope="session")
def config():
    return default_config()
