import pytest

from newton_weight_system import builtin_ode, builtin_weights

TAGS = ("P1", "P2", "P4")


@pytest.fixture(params=TAGS)
def tag(request):
    return request.param


@pytest.fixture
def p1():
    return builtin_ode("P1"), builtin_weights("P1")


@pytest.fixture
def p2():
    return builtin_ode("P2"), builtin_weights("P2")


@pytest.fixture
def p4():
    return builtin_ode("P4"), builtin_weights("P4")
