"""Per-frame embedding network with handwritten reverse-mode gradients.

The network is deliberately small: affine, tanh, an additive sinusoidal
position signal, a fixed local temporal mixing matrix, a second affine
layer, and row-wise l2 normalization. Everything differentiable is
expressed with plain numpy so the backward pass can be checked against
finite differences to tight tolerances.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    CheckpointFormatError,
    CheckpointVersionError,
    InvalidInputError,
)

CHECKPOINT_MAGIC = b"WALN"
CHECKPOINT_VERSION = 1
KIND_PARAMS = 1
KIND_TRAINING = 2


@dataclass
class EncoderParams:
    """Trainable weights plus two structural constants.

    ``mix_weight`` and ``pos_scale`` shape the architecture and are not
    updated by the optimizer.
    """

    w1: np.ndarray  # (d_in, d_h)
    b1: np.ndarray  # (d_h,)
    w2: np.ndarray  # (d_h, d_z)
    b2: np.ndarray  # (d_z,)
    mix_weight: float = 0.5
    pos_scale: float = 0.05

    @property
    def d_in(self) -> int:
        return self.w1.shape[0]

    @property
    def d_h(self) -> int:
        return self.w1.shape[1]

    @property
    def d_z(self) -> int:
        return self.w2.shape[1]

    def validate(self) -> None:
        if self.w1.ndim != 2 or self.w2.ndim != 2:
            raise InvalidInputError("weight matrices must be 2-D")
        if self.b1.shape != (self.d_h,) or self.w2.shape[0] != self.d_h:
            raise InvalidInputError("hidden dimensions disagree between layers")
        if self.b2.shape != (self.d_z,):
            raise InvalidInputError("output bias does not match output dimension")
        if not (0.0 <= self.mix_weight < 1.0):
            raise InvalidInputError(f"mix_weight must lie in [0, 1), got {self.mix_weight}")

    def copy(self) -> "EncoderParams":
        return EncoderParams(
            self.w1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy(),
            self.mix_weight, self.pos_scale,
        )


@dataclass
class ParamGrads:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray


def params_to_vector(params: EncoderParams) -> np.ndarray:
    return np.concatenate(
        [params.w1.ravel(), params.b1.ravel(), params.w2.ravel(), params.b2.ravel()]
    )


def grads_to_vector(grads: ParamGrads) -> np.ndarray:
    return np.concatenate(
        [grads.w1.ravel(), grads.b1.ravel(), grads.w2.ravel(), grads.b2.ravel()]
    )


def vector_to_params(vec: np.ndarray, template: EncoderParams) -> EncoderParams:
    d_in, d_h, d_z = template.d_in, template.d_h, template.d_z
    sizes = [d_in * d_h, d_h, d_h * d_z, d_z]
    if vec.shape != (sum(sizes),):
        raise InvalidInputError(f"parameter vector has wrong length {vec.shape}")
    parts = np.split(vec, np.cumsum(sizes)[:-1])
    return EncoderParams(
        parts[0].reshape(d_in, d_h).copy(),
        parts[1].copy(),
        parts[2].reshape(d_h, d_z).copy(),
        parts[3].copy(),
        template.mix_weight,
        template.pos_scale,
    )


def init_params(
    d_in: int,
    d_h: int,
    d_z: int,
    seed: int = 0,
    mix_weight: float = 0.5,
    pos_scale: float = 0.05,
) -> EncoderParams:
    """Scaled-normal weights, zero first bias, tiny second bias."""
    if min(d_in, d_h, d_z) < 1:
        raise InvalidInputError("all encoder dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, 1.0 / np.sqrt(d_in), size=(d_in, d_h))
    b1 = np.zeros(d_h)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(d_h), size=(d_h, d_z))
    # Small bias keeps output rows away from the origin even for
    # degenerate all-zero inputs, so normalization stays defined.
    b2 = 0.01 * rng.standard_normal(d_z)
    params = EncoderParams(w1, b1, w2, b2, float(mix_weight), float(pos_scale))
    params.validate()
    return params


def positional_encoding(T: int, d_h: int) -> np.ndarray:
    """Sin/cos features of the normalized frame position.

    Position is t / (T - 1), so a clip of any length spans [0, 1] and
    the encoder never sees positions outside its training range.
    Frequencies run geometrically from pi/2 to 4*pi.
    """
    if T < 1 or d_h < 1:
        raise InvalidInputError("positional encoding needs T >= 1 and d_h >= 1")
    u = np.zeros(T) if T == 1 else np.arange(T) / (T - 1)
    n_pairs = (d_h + 1) // 2
    freqs = np.geomspace(np.pi / 2.0, 4.0 * np.pi, n_pairs)
    phase = u[:, None] * freqs[None, :]
    pe = np.empty((T, 2 * n_pairs))
    pe[:, 0::2] = np.sin(phase)
    pe[:, 1::2] = np.cos(phase)
    return pe[:, :d_h]


def mixing_matrix(T: int, mix_weight: float) -> np.ndarray:
    """Local temporal averaging as an explicit row-stochastic matrix.

    Each frame keeps weight (1 - w) and takes w/2 from each neighbor;
    edge frames fold the missing neighbor back onto themselves.
    """
    M = (1.0 - mix_weight) * np.eye(T)
    for t in range(T):
        M[t, min(t + 1, T - 1)] += mix_weight / 2.0
        M[t, max(t - 1, 0)] += mix_weight / 2.0
    return M


@dataclass
class EncodeCache:
    x: np.ndarray
    a1: np.ndarray
    mixed: np.ndarray
    norms: np.ndarray
    z: np.ndarray
    mix: np.ndarray


def encode_with_cache(x: np.ndarray, params: EncoderParams) -> tuple[np.ndarray, EncodeCache]:
    """Forward pass; returns unit-norm embeddings and the backward cache."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise InvalidInputError("encoder input must be a nonempty (T, d_in) array")
    if x.shape[1] != params.d_in:
        raise InvalidInputError(
            f"input dimension {x.shape[1]} does not match encoder d_in {params.d_in}"
        )
    T = x.shape[0]
    a1 = np.tanh(x @ params.w1 + params.b1)
    pe_sum = a1 + params.pos_scale * positional_encoding(T, params.d_h)
    M = mixing_matrix(T, params.mix_weight)
    mixed = M @ pe_sum
    h2 = mixed @ params.w2 + params.b2
    norms = np.linalg.norm(h2, axis=1)
    if np.any(norms == 0.0):
        raise InvalidInputError("encoder produced a zero-norm row before normalization")
    z = h2 / norms[:, None]
    return z, EncodeCache(x=x, a1=a1, mixed=mixed, norms=norms, z=z, mix=M)


def encode(x: np.ndarray, params: EncoderParams) -> np.ndarray:
    return encode_with_cache(x, params)[0]


def encode_backward(
    params: EncoderParams, cache: EncodeCache, grad_z: np.ndarray
) -> ParamGrads:
    """Exact gradients of the trainable parameters given dLoss/dZ."""
    grad_z = np.asarray(grad_z, dtype=np.float64)
    if grad_z.shape != cache.z.shape:
        raise InvalidInputError("grad_z shape does not match the cached embeddings")
    # z = h2 / ||h2||: project out the radial component, scale by 1/norm.
    radial = np.sum(grad_z * cache.z, axis=1, keepdims=True)
    g_h2 = (grad_z - radial * cache.z) / cache.norms[:, None]
    g_w2 = cache.mixed.T @ g_h2
    g_b2 = g_h2.sum(axis=0)
    g_mixed = g_h2 @ params.w2.T
    g_pe_sum = cache.mix.T @ g_mixed
    g_h1 = g_pe_sum * (1.0 - cache.a1 * cache.a1)
    g_w1 = cache.x.T @ g_h1
    g_b1 = g_h1.sum(axis=0)
    return ParamGrads(w1=g_w1, b1=g_b1, w2=g_w2, b2=g_b2)


def _write_array(fh, arr: np.ndarray) -> None:
    fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointFormatError(f"checkpoint truncated while reading {what}")
    return data


def _read_array(fh, shape: tuple[int, ...], what: str) -> np.ndarray:
    count = int(np.prod(shape))
    data = _read_exact(fh, 8 * count, what)
    return np.frombuffer(data, dtype="<f8").reshape(shape).copy()


def write_checkpoint(path, params: EncoderParams, optimizer: dict | None = None) -> None:
    """Binary checkpoint: params only, or params plus optimizer state.

    ``optimizer`` is a dict with keys ``step`` (int), ``m`` and ``v``
    (flat float64 vectors over the packed parameters).
    """
    params.validate()
    kind = KIND_PARAMS if optimizer is None else KIND_TRAINING
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IIIII", CHECKPOINT_VERSION, kind,
                             params.d_in, params.d_h, params.d_z))
        fh.write(struct.pack("<dd", params.mix_weight, params.pos_scale))
        for arr in (params.w1, params.b1, params.w2, params.b2):
            _write_array(fh, arr)
        if optimizer is not None:
            n = params_to_vector(params).shape[0]
            m = np.asarray(optimizer["m"], dtype=np.float64)
            v = np.asarray(optimizer["v"], dtype=np.float64)
            if m.shape != (n,) or v.shape != (n,):
                raise InvalidInputError("optimizer vectors do not match parameter count")
            fh.write(struct.pack("<Q", int(optimizer["step"])))
            _write_array(fh, m)
            _write_array(fh, v)


def read_checkpoint(path) -> tuple[EncoderParams, dict | None]:
    """Inverse of write_checkpoint. Returns (params, optimizer-or-None)."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointFormatError(f"bad checkpoint magic {magic!r}")
        version, kind, d_in, d_h, d_z = struct.unpack(
            "<IIIII", _read_exact(fh, 20, "header")
        )
        if version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(
                f"unsupported checkpoint version {version} (expected {CHECKPOINT_VERSION})"
            )
        if kind not in (KIND_PARAMS, KIND_TRAINING):
            raise CheckpointFormatError(f"unknown checkpoint kind {kind}")
        if min(d_in, d_h, d_z) < 1:
            raise CheckpointFormatError("checkpoint header has a zero dimension")
        mix_weight, pos_scale = struct.unpack("<dd", _read_exact(fh, 16, "constants"))
        params = EncoderParams(
            w1=_read_array(fh, (d_in, d_h), "w1"),
            b1=_read_array(fh, (d_h,), "b1"),
            w2=_read_array(fh, (d_h, d_z), "w2"),
            b2=_read_array(fh, (d_z,), "b2"),
            mix_weight=mix_weight,
            pos_scale=pos_scale,
        )
        params.validate()
        optimizer = None
        if kind == KIND_TRAINING:
            (step,) = struct.unpack("<Q", _read_exact(fh, 8, "step"))
            n = params_to_vector(params).shape[0]
            optimizer = {
                "step": step,
                "m": _read_array(fh, (n,), "m"),
                "v": _read_array(fh, (n,), "v"),
            }
        trailing = fh.read(1)
        if trailing:
            raise CheckpointFormatError("checkpoint has trailing bytes")
    return params, optimizer
