import pytest
from hypothesis import settings

settings.register_profile("suite", max_examples=25, deadline=None)
settings.load_profile("suite")

# the greedy construction grid shared by the size and contraction checks
GRID = [(n, d) for d in (1, 2, 3) for n in (8, 16, 32, 64)]


@pytest.fixture(scope="session")
def bcf_grid():
    """greedy_bcf output + potential trace per grid point; points over the
    feasibility guard store the raised exception instead."""
    from junta_lab.bcf import greedy_bcf
    from junta_lab.core import ConstructionInfeasible

    out = {}
    for n, d in GRID:
        trace = []
        try:
            out[(n, d)] = (greedy_bcf(n, d, trace=trace), trace)
        except ConstructionInfeasible as e:
            out[(n, d)] = (None, e)
    return out
