import pytest

from conga_hodge.assembly import ComplexOperators
from conga_hodge.grid import GridSpec


def annulus_spec(K, p):
    """One-cell-wide ring of cells around the boundary of the K x K square."""
    mask = frozenset(
        (k1, k2) for k1 in range(1, K + 1) for k2 in range(1, K + 1)
        if k1 in (1, K) or k2 in (1, K))
    return GridSpec(K=K, p=p, mask=mask)


@pytest.fixture(scope='session')
def ops_k3p2():
    return ComplexOperators.build(GridSpec(K=3, p=2))


@pytest.fixture(scope='session')
def ops_k4p2():
    return ComplexOperators.build(GridSpec(K=4, p=2))


@pytest.fixture(scope='session')
def ops_k4p3():
    return ComplexOperators.build(GridSpec(K=4, p=3))


@pytest.fixture(scope='session')
def ops_annulus_k3p2():
    return ComplexOperators.build(annulus_spec(3, 2))
