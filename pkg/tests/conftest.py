import pytest

from polyinf import field_from_dicts, rotate_chart, to_infinity_chart


def quad_diag():
    """x^2 dx + y^2 dy + z^2 dz."""
    return field_from_dicts(3, [{(2, 0, 0): 1}, {(0, 2, 0): 1}, {(0, 0, 2): 1}])


def quad_shared():
    """x^2 dx + y^2 dy + (x z + y z) dz."""
    return field_from_dicts(3, [{(2, 0, 0): 1}, {(0, 2, 0): 1}, {(1, 0, 1): 1, (0, 1, 1): 1}])


def planar_complete():
    """y dy + x y (x dx - y dy), a complete planar field."""
    return field_from_dicts(2, [{(2, 1): 1}, {(0, 1): 1, (1, 2): -1}])


@pytest.fixture
def e1():
    return quad_diag()


@pytest.fixture
def e1_chart():
    return to_infinity_chart(quad_diag())


@pytest.fixture
def e3_chart():
    return to_infinity_chart(quad_shared())


@pytest.fixture
def planar():
    return planar_complete()


@pytest.fixture
def e1_rotated():
    return rotate_chart(quad_diag(), seed=3)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
