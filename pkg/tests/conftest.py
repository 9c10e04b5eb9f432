"""Shared fixtures: deterministic synthetic images and bundled test data."""

import numpy as np
import pytest

import synthimages


@pytest.fixture(scope="session")
def photo():
    return synthimages.natural_photo()


@pytest.fixture(scope="session")
def scene():
    return synthimages.uneven_scene()


@pytest.fixture(scope="session")
def corpus():
    """20 named 48x48 RGB images spanning degenerate and textured cases."""
    return synthimages.metric_corpus()


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """Bundled images written once per session for CLI tests."""
    d = tmp_path_factory.mktemp("data")
    synthimages.write_bundled(d)
    return d


@pytest.fixture(scope="session")
def bundled_dir():
    """The images shipped with the repository under tests/data."""
    from pathlib import Path

    d = Path(__file__).resolve().parent / "data"
    assert (d / "photo.png").exists() and (d / "uneven_scene.png").exists()
    return d
