from functools import lru_cache
from pathlib import Path

import pytest

from breather import EnergyFunctional, FundamentalSolutionTable, load_spec

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
EXAMPLES = ("fig1_cylindrical", "fig1_slab", "fig2_cylindrical", "fig2_slab")


def spec(name, **disc):
    s = load_spec(CONFIGS / f"{name}.json")
    return s.with_(**disc) if disc else s


@lru_cache(maxsize=None)
def table(name, K, N=32, k_max=None):
    s = spec(name, K=K, N=N)
    return FundamentalSolutionTable.from_spec(s, k_max=k_max)


def functional(name, K=8, N=32, **kw):
    return EnergyFunctional(spec(name, K=K, N=N), table(name, K, N), **kw)


@pytest.fixture
def fig1_cyl():
    return spec("fig1_cylindrical", K=8, N=32)
