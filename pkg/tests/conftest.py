import numpy as np
import pytest

from gamc.frames import (
    CLASS_NAMES,
    IqFrame,
    ModulationScheme,
    SynthConfig,
    normalize_frame,
    synthesize_dataset,
    synthesize_frame,
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def noise_frame(rng):
    """A unit-RMS circular-Gaussian frame of 128 samples."""
    x = (rng.normal(size=128) + 1j * rng.normal(size=128)) / np.sqrt(2.0)
    return normalize_frame(IqFrame(x))


def make_frames(schemes, snrs, per_cell, length=128, seed=0):
    cfg = SynthConfig(rng_seed=seed)
    mods = [ModulationScheme.from_name(s) if isinstance(s, str) else s
            for s in schemes]
    return synthesize_dataset(mods, snrs, per_cell, length, cfg)


@pytest.fixture(scope="session")
def tiny_dataset():
    """Small 4-scheme dataset reused by the slower unit tests."""
    return make_frames(("BPSK", "QPSK", "QAM16", "GFSK"), (-6, 6), 20)
