import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def model_rel():
    from tdm.wsmodel import model_relation

    return model_relation()


def pytest_terminal_summary(terminalreporter):
    from acceptance_registry import lines

    rows = lines()
    if rows:
        terminalreporter.section("acceptance criteria")
        for row in rows:
            terminalreporter.write_line(row)
