"""One test per acceptance criterion; each prints a pass/fail line."""
import pytest

from lienard import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("name", list(acceptance.CRITERIA))
def test_criterion(name):
    result = acceptance.CRITERIA[name]()
    print(result.line())
    ACCEPTANCE_LINES.append(result.line())
    assert result.passed, result.detail
    assert result.within_budget, f"{result.seconds:.1f}s over the {result.budget}s budget"
