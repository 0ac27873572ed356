import pytest


@pytest.fixture
def broken():
    raise RuntimeError('fixture down')


def test_ok():
    pass


@pytest.mark.skip(reason='not today')
def test_skipped():
    pass


def test_errors(broken):
    pass


class TestGroup:
    def test_inner(self):
        assert [1] == [2]
