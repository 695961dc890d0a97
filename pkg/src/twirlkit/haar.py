"""Seeded sampling of Haar-distributed unitaries with independent substreams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Used when no --seed is given; protocol runs are reproducible by default.
DEFAULT_SEED = 20240917


@dataclass(frozen=True)
class RngStream:
    """One reproducible random substream, keyed by (master_seed, stream_index).

    Distinct keys give statistically independent streams (SeedSequence spawn
    keys), so parallel outer-loop workers never share generator state.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.master_seed, spawn_key=(self.stream_index,))
        return np.random.default_rng(ss)


def _haar_from_ginibre(z: np.ndarray) -> np.ndarray:
    # QR alone is not Haar: the R-diagonal phases must be divided out.
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diag / np.abs(diag)
    return q * phases[..., None, :]


def sample_haar(d: int, stream: RngStream | np.random.Generator) -> np.ndarray:
    """One Haar-random d x d unitary (complex Ginibre -> phase-fixed QR)."""
    return sample_haar_batch(d, 1, stream)[0]


def sample_haar_batch(
    d: int, count: int, stream: RngStream | np.random.Generator
) -> np.ndarray:
    """``count`` independent Haar unitaries as a stacked (count, d, d) array."""
    if d < 2:
        raise ValueError("d must be >= 2")
    rng = stream.generator() if isinstance(stream, RngStream) else stream
    z = rng.normal(size=(count, d, d)) + 1j * rng.normal(size=(count, d, d))
    return _haar_from_ginibre(z / np.sqrt(2.0))
