import pytest

from geofinlab import acceptance

RESULTS = {}


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda c: c.__name__.removeprefix("criterion_"))
def test_criterion(criterion):
    result = criterion()
    RESULTS[result.number] = result
    print(result.line())
    for name, ok in result.checks.items():
        print(f"    {'ok  ' if ok else 'FAIL'} {name}")
    assert result.passed, result.line()
