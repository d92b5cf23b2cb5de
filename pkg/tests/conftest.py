import numpy as np
import pytest

from stergm.network import Network, all_dyads


def random_network(n, directed, rng, density=0.3):
    ties = [d for d in all_dyads(n, directed) if rng.random() < density]
    return Network.from_edges(n, directed, ties)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
