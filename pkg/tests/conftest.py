import numpy as np
import pytest

from railover.dataset import load_segments
from railover.pipeline import run_pipeline
from railover.synth import generate_dataset

MASTER_SEED = 7
EPOCHS = 60


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    """One full end-to-end run on the default synthetic dataset."""
    out = tmp_path_factory.mktemp("pipeline")
    return run_pipeline(out, master_seed=MASTER_SEED, epochs=EPOCHS), out


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """A reduced dataset for CLI and classical tests (24 recordings)."""
    out = tmp_path_factory.mktemp("smallset")
    manifest = generate_dataset(out, seed=123, n_events=12, n_regular=12)
    return out, manifest


@pytest.fixture(scope="session")
def small_segments(small_dataset):
    out, _ = small_dataset
    return load_segments(out / "manifest.json", "wheelset_bearing")
