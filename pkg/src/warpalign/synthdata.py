"""Synthetic benchmark: one latent process watched at random speeds.

Every video in a dataset replays the same smooth canonical trajectory
but advances through it under its own random monotone time warp, so
ground-truth correspondence between any two videos is known exactly.
Observed features are a fixed random linear readout of the latent state
plus a per-video "style" offset drawn from a fixed low-dimensional
subspace (shared readout, video-specific coefficients) plus Gaussian
noise. The style term models appearance variation: it carries no
temporal information, wrecks naive cross-video feature distances, and
is linearly removable, so it separates trained from untrained encoders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import alignment
from .errors import InvalidInputError

LATENT_DIM = 3
STYLE_DIM = 3
DATASET_KIND = "warpalign-dataset"
DATASET_VERSION = 1


@dataclass
class SyntheticVideo:
    """One synthetic video with its ground-truth annotations."""

    features: np.ndarray  # (F, d_in)
    phase_labels: np.ndarray  # (F,) ints in [0, P)
    progress: np.ndarray  # (F,) monotone nondecreasing in [0, 1]
    canonical_time: np.ndarray  # (F,) in [0, 1]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.phase_labels = np.asarray(self.phase_labels, dtype=np.int64)
        self.progress = np.asarray(self.progress, dtype=np.float64)
        self.canonical_time = np.asarray(self.canonical_time, dtype=np.float64)
        F = self.features.shape[0]
        if self.features.ndim != 2 or F < 1:
            raise InvalidInputError("features must be a nonempty (F, d_in) matrix")
        for name in ("phase_labels", "progress", "canonical_time"):
            if getattr(self, name).shape != (F,):
                raise InvalidInputError(f"{name} must have one entry per frame")
        if np.any(self.progress < 0) or np.any(self.progress > 1):
            raise InvalidInputError("progress values must lie in [0, 1]")
        if F > 1 and np.any(np.diff(self.progress) < 0):
            raise InvalidInputError("progress must be monotone nondecreasing")

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]

    @property
    def d_in(self) -> int:
        return self.features.shape[1]


def canonical_curve(anchors: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Evaluate the Catmull-Rom spline through the anchors at times t.

    Centripetal-free uniform Catmull-Rom with one-sided end tangents:
    C1 smooth, and the velocity stays bounded away from zero between
    distinct anchors so the curve never stalls (stalls would create
    indistinguishable frames and cap the reachable rank correlation).
    """
    anchors = np.asarray(anchors, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    P = anchors.shape[0]
    if P < 2:
        raise InvalidInputError("the canonical curve needs at least 2 anchors")
    tangents = np.empty_like(anchors)
    tangents[0] = anchors[1] - anchors[0]
    tangents[-1] = anchors[-1] - anchors[-2]
    if P > 2:
        tangents[1:-1] = (anchors[2:] - anchors[:-2]) / 2.0
    s = np.clip(t, 0.0, 1.0) * (P - 1)
    seg = np.minimum(s.astype(np.int64), P - 2)
    u = (s - seg)[:, None]
    h00 = 2 * u**3 - 3 * u**2 + 1
    h10 = u**3 - 2 * u**2 + u
    h01 = -2 * u**3 + 3 * u**2
    h11 = u**3 - u**2
    return (h00 * anchors[seg] + h10 * tangents[seg]
            + h01 * anchors[seg + 1] + h11 * tangents[seg + 1])


def random_warp(F: int, rng: np.random.Generator) -> np.ndarray:
    """Strictly increasing times over [0, 1] with regime-varying speed.

    Per-frame jitter rides on a few piecewise-constant speed regimes, so
    two videos disagree about how long each part of the action takes;
    index-proportional alignment is systematically wrong between them.
    """
    if F < 2:
        raise InvalidInputError(f"a warp needs at least 2 frames, got {F}")
    # Floor keeps increments bounded away from zero: no duplicate frames.
    increments = 0.3 + rng.exponential(1.0, F - 1)
    # Short clips cannot host all the cut points; clamp, keep the draw.
    n_regimes = min(int(rng.integers(3, 5)), F - 1)
    regime = np.zeros(F - 1, dtype=np.int64)
    if n_regimes > 1:
        edges = np.sort(rng.choice(F - 2, size=n_regimes - 1, replace=False) + 1)
        for e in edges:
            regime[e:] += 1
    speeds = rng.lognormal(0.0, 0.7, n_regimes)
    warp = np.concatenate([[0.0], np.cumsum(increments * speeds[regime])])
    return warp / warp[-1]


def make_video(
    anchors: np.ndarray,
    lin_map: np.ndarray,
    warp: np.ndarray,
    P: int,
    noise: float,
    rng: np.random.Generator,
) -> SyntheticVideo:
    """Observe the canonical curve along one warp through one readout map."""
    latent = canonical_curve(anchors, warp)
    features = latent @ lin_map.T
    if noise > 0:
        features = features + noise * rng.standard_normal(features.shape)
    labels = np.minimum((warp * P).astype(np.int64), P - 1)
    return SyntheticVideo(
        features=features,
        phase_labels=labels,
        progress=warp.copy(),
        canonical_time=warp.copy(),
    )


def generate_dataset(
    n_videos: int,
    P: int,
    d_in: int,
    rng: np.random.Generator,
    noise: float = 0.1,
    f_range: tuple[int, int] = (40, 120),
    style_amp: float = 1.5,
) -> list[SyntheticVideo]:
    """Draw one canonical process, then n_videos independent warps of it.

    The first latent coordinate drifts monotonically across anchors, so
    the canonical curve never revisits an earlier state. Each video adds
    a constant style offset (style_amp scales it) living in a fixed
    STYLE_DIM-dimensional subspace shared across the dataset.
    """
    if P < 2:
        raise InvalidInputError(f"need at least 2 phases, got {P}")
    if n_videos < 2:
        raise InvalidInputError(f"need at least 2 videos, got {n_videos}")
    if d_in < 1 or noise < 0 or style_amp < 0:
        raise InvalidInputError("d_in must be >= 1, noise >= 0, style_amp >= 0")
    f_lo, f_hi = f_range
    if f_lo < 2 or f_hi < f_lo:
        raise InvalidInputError(f"invalid frame-count range {f_range}")
    anchors = rng.normal(0.0, 1.0, size=(P, LATENT_DIM))
    anchors[:, 0] = np.linspace(-1.2, 1.2, P)
    lin_map = rng.normal(0.0, 1.0 / np.sqrt(LATENT_DIM), size=(d_in, LATENT_DIM))
    style_map = rng.normal(0.0, 1.0 / np.sqrt(STYLE_DIM), size=(d_in, STYLE_DIM))
    videos = []
    for _ in range(n_videos):
        F = int(rng.integers(f_lo, f_hi + 1))
        warp = random_warp(F, rng)
        video = make_video(anchors, lin_map, warp, P, noise, rng)
        if style_amp > 0:
            style = style_amp * rng.standard_normal(STYLE_DIM)
            video.features += style_map @ style
        videos.append(video)
    return videos


def ground_truth_alignment(v1: SyntheticVideo, v2: SyntheticVideo) -> list[tuple[int, int]]:
    """Monotone path pairing frames with the nearest canonical times."""
    D = np.abs(v1.canonical_time[:, None] - v2.canonical_time[None, :])
    return alignment.dtw_path(D)


def save_dataset(path, videos: list[SyntheticVideo], seed: int,
                 config: dict, train_count: int) -> None:
    """Line-delimited JSON: one header line, then one video per line."""
    if not 0 <= train_count <= len(videos):
        raise InvalidInputError(f"train_count {train_count} out of range")
    header = {
        "kind": DATASET_KIND,
        "version": DATASET_VERSION,
        "seed": int(seed),
        "config": config,
        "n_videos": len(videos),
        "train_count": int(train_count),
    }
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for v in videos:
            record = {
                "F": v.n_frames,
                "d_in": v.d_in,
                "features": v.features.ravel().tolist(),
                "phase_labels": v.phase_labels.tolist(),
                "progress": v.progress.tolist(),
                "canonical_time": v.canonical_time.tolist(),
            }
            fh.write(json.dumps(record) + "\n")


def load_dataset(path) -> tuple[list[SyntheticVideo], dict]:
    """Inverse of save_dataset; returns (videos, header)."""
    with open(path) as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise InvalidInputError(f"dataset file {path} is empty")
    header = json.loads(lines[0])
    if header.get("kind") != DATASET_KIND:
        raise InvalidInputError(f"{path} is not a dataset file")
    if header.get("version") != DATASET_VERSION:
        raise InvalidInputError(f"unsupported dataset version {header.get('version')}")
    videos = []
    for line in lines[1:]:
        rec = json.loads(line)
        F, d_in = rec["F"], rec["d_in"]
        videos.append(
            SyntheticVideo(
                features=np.asarray(rec["features"], dtype=np.float64).reshape(F, d_in),
                phase_labels=rec["phase_labels"],
                progress=rec["progress"],
                canonical_time=rec["canonical_time"],
            )
        )
    if len(videos) != header.get("n_videos"):
        raise InvalidInputError("dataset header video count does not match records")
    return videos, header


def split_dataset(
    videos: list[SyntheticVideo], header: dict
) -> tuple[list[SyntheticVideo], list[SyntheticVideo]]:
    """Train/test split as recorded at generation time (disjoint by layout)."""
    k = int(header["train_count"])
    return videos[:k], videos[k:]
