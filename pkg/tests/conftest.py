import pytest

from ljscatt.validation import AcceptanceSuite


@pytest.fixture(scope="session")
def suite():
    """Shared full-scale validation suite; root tables are computed once."""
    return AcceptanceSuite("full")
