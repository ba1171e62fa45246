import pytest

from kennel.cache import FileCache
from kennel.chatter import Chatter
from kennel.providers import MockProvider


@pytest.fixture
def cache(tmp_path):
    return FileCache(tmp_path / "cache")


@pytest.fixture
def mock_provider():
    return MockProvider()


@pytest.fixture
def chatter(cache, mock_provider):
    with Chatter(mock_provider, cache) as c:
        yield c
