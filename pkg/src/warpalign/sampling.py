"""Temporal random cropping and feature-space augmentation.

Each video contributes two independently cropped clips per batch; the
crop keeps the original frame indices so the index-based priors know
where every sampled frame came from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass
class SampledClip:
    """A temporal crop: frame features plus their source positions.

    ``source_indices`` are strictly increasing integers in [0, F).
    """

    features: np.ndarray  # (T, d_in)
    source_indices: np.ndarray  # (T,) int64

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.source_indices = np.asarray(self.source_indices, dtype=np.int64)
        if self.features.ndim != 2:
            raise InvalidInputError("clip features must be a (T, d_in) matrix")
        if self.source_indices.shape != (self.features.shape[0],):
            raise InvalidInputError("one source index per sampled frame required")
        if self.features.shape[0] > 1 and np.any(np.diff(self.source_indices) <= 0):
            raise InvalidInputError("source indices must be strictly increasing")
        if self.features.shape[0] and self.source_indices[0] < 0:
            raise InvalidInputError("source indices must be nonnegative")

    def __len__(self) -> int:
        return self.features.shape[0]


def sample_clip(video_features: np.ndarray, T: int, rng: np.random.Generator) -> SampledClip:
    """Random window of length L ~ U[T, F], then T sorted indices within it."""
    video_features = np.asarray(video_features, dtype=np.float64)
    if video_features.ndim != 2:
        raise InvalidInputError("video features must be a (F, d_in) matrix")
    F = video_features.shape[0]
    if T < 1:
        raise InvalidInputError(f"clip length must be >= 1, got {T}")
    if F < T:
        raise InvalidInputError(f"video has {F} frames, cannot sample a clip of {T}")
    L = int(rng.integers(T, F + 1))
    start = int(rng.integers(0, F - L + 1))
    offsets = np.sort(rng.choice(L, size=T, replace=False))
    indices = start + offsets.astype(np.int64)
    return SampledClip(features=video_features[indices], source_indices=indices)


def augment(clip: SampledClip, strength: float, rng: np.random.Generator) -> SampledClip:
    """Temporally consistent feature-space jitter.

    One per-dimension scale and offset are drawn per clip and applied to
    every frame alike; on top of that, i.i.d. Gaussian noise with
    standard deviation ``strength``. Indices are untouched, and strength
    zero is an exact identity.
    """
    if strength < 0:
        raise InvalidInputError(f"augmentation strength must be >= 0, got {strength}")
    T, d_in = clip.features.shape
    scale = 1.0 + strength * rng.standard_normal(d_in)
    offset = strength * rng.standard_normal(d_in)
    noise = strength * rng.standard_normal((T, d_in))
    features = clip.features * scale[None, :] + offset[None, :] + noise
    return SampledClip(features=features, source_indices=clip.source_indices.copy())


def build_batch(
    videoA: np.ndarray,
    videoB: np.ndarray,
    T: int,
    rng: np.random.Generator,
    aug_strength: float = 0.0,
) -> list[tuple[SampledClip, SampledClip, bool]]:
    """Two crops per video, expanded into 2 same-video + 4 cross-video pairs."""
    a1 = sample_clip(videoA, T, rng)
    a2 = sample_clip(videoA, T, rng)
    b1 = sample_clip(videoB, T, rng)
    b2 = sample_clip(videoB, T, rng)
    if aug_strength > 0:
        a1 = augment(a1, aug_strength, rng)
        a2 = augment(a2, aug_strength, rng)
        b1 = augment(b1, aug_strength, rng)
        b2 = augment(b2, aug_strength, rng)
    return [
        (a1, a2, True),
        (b1, b2, True),
        (a1, b1, False),
        (a1, b2, False),
        (a2, b1, False),
        (a2, b2, False),
    ]
