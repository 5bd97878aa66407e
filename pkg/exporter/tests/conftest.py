import numpy as np
import pytest


@pytest.fixture(scope="session")
def three_class_xy():
    """Small deterministic 3-class set with enough spread to need all classes."""
    rng = np.random.default_rng(7)
    X = rng.normal(size=(90, 4))
    score = X[:, 0] + 0.5 * X[:, 1] - 0.25 * X[:, 2]
    y = np.array(["lo", "mid", "hi"])[np.digitize(score, [-0.6, 0.6])]
    return X, y


@pytest.fixture(scope="session")
def binary_xy():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(80, 3))
    y = np.where(X[:, 0] - 0.4 * X[:, 2] > 0.1, "pos", "neg")
    return X, y
