import pytest

from mcdmg import fixture_text, parse_graph


@pytest.fixture(scope="session")
def fig1a():
    return parse_graph(fixture_text("fig1a"))


@pytest.fixture(scope="session")
def fig1b():
    return parse_graph(fixture_text("fig1b"))


@pytest.fixture(scope="session")
def fig1c():
    return parse_graph(fixture_text("fig1c"))


@pytest.fixture(scope="session")
def fig2a():
    return parse_graph(fixture_text("fig2a"))


@pytest.fixture(scope="session")
def fig2b():
    return parse_graph(fixture_text("fig2b"))


@pytest.fixture(scope="session")
def fig3():
    return parse_graph(fixture_text("fig3"))
