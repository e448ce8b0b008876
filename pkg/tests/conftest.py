import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture(scope="session")
def acceptance_bundle():
    """The synthetic stand-in dataset: 10 subjects x 4 sessions x 15 trials."""
    from biokey import dataio, pipeline

    manifest = dataio.DatasetManifest(
        subjects=10, sessions=4, trials_per_session=15, seed=42
    )
    return pipeline.bundle_from_manifest(manifest)
