import numpy as np
import pytest

from graphband.graph import normalized_operator
from graphband.sbm import SbmSpec, make_sbm_bundle, planted_two_block, sample_sbm
from graphband.spectral import eig_full


def random_graph(n: int, p: float, seed: int):
    """Erdos-Renyi style sample via a one-block SBM."""
    g, _ = sample_sbm(SbmSpec((n,), np.array([[p]]), seed=seed))
    return g


# Canonical 4-community task: community structure solid but not trivial
# (the training loss must stay bounded away from zero so the trained
# operator sensitivity is informative), features at ~93% pairwise Bayes.
TASK_BLOCKS = (100, 100, 100, 100)
TASK_P, TASK_Q = 0.3, 0.12
TASK_SEPARATION = 3.0
TASK_SEED = 11


@pytest.fixture(scope="session")
def sbm_task():
    """Canonical 4-community synthetic task shared by the slow suites."""
    prob = np.full((4, 4), TASK_Q)
    np.fill_diagonal(prob, TASK_P)
    spec = SbmSpec(TASK_BLOCKS, prob, seed=TASK_SEED)
    return make_sbm_bundle(spec, separation=TASK_SEPARATION, name="sbm4x100")


@pytest.fixture(scope="session")
def sbm_task_eig(sbm_task):
    return eig_full(normalized_operator(sbm_task.graph))


@pytest.fixture(scope="session")
def small_sbm_bundle():
    """30-node two-community bundle for gradient checking."""
    return make_sbm_bundle(planted_two_block(15, 0.5, 0.1, seed=2), name="sbm2x15")
