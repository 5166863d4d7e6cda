from pathlib import Path

import numpy as np
import pytest

from nqe_dqc1 import data
from nqe_dqc1.nqe import NqeTrainConfig, train_nqe

ROOT = Path(__file__).resolve().parents[1]
IMAGES = ROOT / "data" / "mnist01-images-idx3-ubyte.gz"
LABELS = ROOT / "data" / "mnist01-labels-idx1-ubyte.gz"


def random_unitary(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim, rng):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def random_state(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def mnist_raw():
    return data.read_idx_files(IMAGES, LABELS)


@pytest.fixture(scope="session")
def mnist500(mnist_raw):
    chosen = data.select_binary_subset(mnist_raw, (0, 1), 500, seed=0)
    return data.build_dataset(chosen, data.fit_pca(chosen, 5))


@pytest.fixture(scope="session")
def mnist_splits(mnist500):
    return data.split(mnist500, 0.8, seed=0)


@pytest.fixture(scope="session")
def trained_nqe(mnist_splits):
    """(params, trace) of the default NQE run on the training split."""
    return train_nqe(mnist_splits[0], NqeTrainConfig(seed=0))


# one "criterion N: PASS|FAIL ..." line per acceptance test, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
