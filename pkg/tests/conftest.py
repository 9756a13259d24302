import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

# Make the sibling oracle helpers importable as `oracles`.
sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def tiny_videos():
    """Four short videos from one canonical process, cheap to train on."""
    from warpalign import synthdata

    rng = np.random.default_rng(42)
    return synthdata.generate_dataset(
        4, P=3, d_in=6, rng=rng, noise=0.05, f_range=(20, 30), style_amp=1.0
    )
