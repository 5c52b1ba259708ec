import pytest

from derived import DERIVED


@pytest.mark.parametrize("check", [c for _, c in DERIVED], ids=[name for name, _ in DERIVED])
def test_derived_example(check):
    check()
