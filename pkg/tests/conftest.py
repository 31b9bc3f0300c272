import numpy as np
import pytest

from markerkit.dictionary import load_dictionary


@pytest.fixture(scope="session")
def dictionary():
    return load_dictionary()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def backgrounds():
    from markerkit.synthgen import synthetic_background

    rng = np.random.default_rng(99)
    return [synthetic_background(rng) for _ in range(10)]


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory, backgrounds, dictionary):
    """A (2, 1) train/val split; treat as read-only."""
    from markerkit.synthgen import SceneConfig, generate_dataset

    out = tmp_path_factory.mktemp("tiny")
    cfg = SceneConfig(markers=(3, 6), fakes=(1, 2))
    return generate_dataset(backgrounds, dictionary, out, seed=5, split_sizes=(2, 1), config=cfg)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(LINES):
            terminalreporter.write_line(line)
