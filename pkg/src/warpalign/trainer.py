"""Training loop: clip-pair batches, Adam with decoupled weight decay,
cosine learning-rate decay, and bit-reproducible checkpoints.

Determinism contract: every random draw comes from a seed sequence
derived from (config seed, purpose tag, epoch or global step), so a run
resumed from a checkpoint consumes exactly the same random stream as an
uninterrupted run, and the result is independent of worker-thread
count because per-pair results are reduced in a fixed order.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations

import numpy as np

from . import encoder, sampling
from .encoder import EncoderParams, read_checkpoint, write_checkpoint
from .errors import InvalidInputError, NonFiniteLossError
from .objectives import HyperParams, LossReport, pair_loss
from .synthdata import SyntheticVideo

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

# Seed-sequence tags keeping the independent random streams apart.
_SHUFFLE_TAG = 101
_STEP_TAG = 202
_INIT_TAG = 303


@dataclass
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 1e-5
    epochs: int = 30
    seed: int = 0
    hp: HyperParams = field(default_factory=HyperParams)
    d_h: int = 48
    d_z: int = 16
    mix_weight: float = 0.5
    pos_scale: float = 0.05
    cosine_decay: bool = True
    aug_strength: float = 0.2
    threads: int = 1
    # Horizon of the cosine schedule; train() fills it in from the
    # dataset size so standalone train_step calls see the same decay.
    total_steps: int | None = None

    def __post_init__(self):
        if self.learning_rate < 0 or self.weight_decay < 0:
            raise InvalidInputError("learning_rate and weight_decay must be >= 0")
        if self.epochs < 1 or self.d_h < 1 or self.d_z < 1 or self.threads < 1:
            raise InvalidInputError("epochs, encoder dims, and threads must be >= 1")
        if self.aug_strength < 0:
            raise InvalidInputError("aug_strength must be >= 0")


@dataclass
class OptimizerState:
    """Adam accumulators over the packed parameter vector."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def fresh(cls, params: EncoderParams) -> "OptimizerState":
        n = encoder.params_to_vector(params).shape[0]
        return cls(m=np.zeros(n), v=np.zeros(n), step=0)


@dataclass
class StepRecord:
    """Aggregate of the six per-pair losses plus optimizer telemetry."""

    step: int
    lr: float
    loss_same: float
    loss_prop: float
    loss_sdtw: float
    combined: float
    grad_norm: float
    zero_distance_steps: int
    pair_reports: list[LossReport] = field(default_factory=list)


def scheduled_lr(config: TrainConfig, step: int) -> float:
    """Cosine decay from the base rate to 0 over total_steps, no restarts."""
    if not config.cosine_decay:
        return config.learning_rate
    total = config.total_steps if config.total_steps else 1
    frac = min(max(step / total, 0.0), 1.0)
    return config.learning_rate * 0.5 * (1.0 + math.cos(math.pi * frac))


def train_step(
    params: EncoderParams,
    opt_state: OptimizerState,
    videoA: SyntheticVideo,
    videoB: SyntheticVideo,
    config: TrainConfig,
    rng: np.random.Generator,
) -> tuple[EncoderParams, OptimizerState, StepRecord]:
    """One optimizer update from one video pair (the 6-clip-pair batch)."""
    batch = sampling.build_batch(
        videoA.features, videoB.features, config.hp.T, rng, config.aug_strength
    )
    # Encode each distinct clip once; pairs reference clips by identity.
    clip_list: list[sampling.SampledClip] = []
    clip_pos: dict[int, int] = {}
    for cx, cy, _ in batch:
        for c in (cx, cy):
            if id(c) not in clip_pos:
                clip_pos[id(c)] = len(clip_list)
                clip_list.append(c)
    encoded = [encoder.encode_with_cache(c.features, params) for c in clip_list]

    def one_pair(pair):
        cx, cy, same = pair
        zx = encoded[clip_pos[id(cx)]][0]
        zy = encoded[clip_pos[id(cy)]][0]
        return pair_loss(cx, cy, zx, zy, config.hp, same)

    if config.threads > 1:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            results = list(pool.map(one_pair, batch))
    else:
        results = [one_pair(p) for p in batch]

    # Fixed-order reduction: batch order, then clip order. This keeps the
    # update bit-identical for any thread count.
    n_pairs = len(batch)
    grad_z = [np.zeros_like(encoded[k][0]) for k in range(len(clip_list))]
    reports = []
    for (cx, cy, _), (report, gx, gy) in zip(batch, results):
        reports.append(report)
        grad_z[clip_pos[id(cx)]] += gx / n_pairs
        grad_z[clip_pos[id(cy)]] += gy / n_pairs

    grad_vec = np.zeros_like(encoder.params_to_vector(params))
    for k, (_, cache) in enumerate(encoded):
        grads = encoder.encode_backward(params, cache, grad_z[k])
        grad_vec += encoder.grads_to_vector(grads)

    combined = float(np.mean([r.combined for r in reports]))
    if not (np.isfinite(combined) and np.all(np.isfinite(grad_vec))):
        raise NonFiniteLossError(
            f"non-finite loss or gradient at step {opt_state.step}", reports=reports
        )

    lr = scheduled_lr(config, opt_state.step)
    step = opt_state.step + 1
    m = ADAM_BETA1 * opt_state.m + (1.0 - ADAM_BETA1) * grad_vec
    v = ADAM_BETA2 * opt_state.v + (1.0 - ADAM_BETA2) * grad_vec * grad_vec
    m_hat = m / (1.0 - ADAM_BETA1**step)
    v_hat = v / (1.0 - ADAM_BETA2**step)
    vec = encoder.params_to_vector(params)
    vec = vec - lr * (m_hat / (np.sqrt(v_hat) + ADAM_EPS)) - lr * config.weight_decay * vec
    new_params = encoder.vector_to_params(vec, params)

    record = StepRecord(
        step=step,
        lr=lr,
        loss_same=float(np.mean([r.loss_same for r in reports])),
        loss_prop=float(np.mean([r.loss_prop for r in reports])),
        loss_sdtw=float(np.mean([r.loss_sdtw for r in reports])),
        combined=combined,
        grad_norm=float(np.linalg.norm(grad_vec)),
        zero_distance_steps=sum(r.zero_distance_steps for r in reports),
        pair_reports=reports,
    )
    return new_params, OptimizerState(m=m, v=v, step=step), record


def _epoch_pair_order(n_videos: int, seed: int, epoch: int) -> list[tuple[int, int]]:
    pairs = list(combinations(range(n_videos), 2))
    rng = np.random.default_rng([seed, _SHUFFLE_TAG, epoch])
    order = rng.permutation(len(pairs))
    return [pairs[k] for k in order]


def train(
    dataset: list[SyntheticVideo],
    config: TrainConfig,
    params: EncoderParams | None = None,
    opt_state: OptimizerState | None = None,
    checkpoint_path=None,
) -> tuple[EncoderParams, list[StepRecord]]:
    """Epochs over all unordered same-class video pairs, shuffled per epoch.

    Pass ``params`` and ``opt_state`` from a loaded checkpoint to resume;
    the loop then skips the steps already taken and reproduces the
    uninterrupted trajectory bit-for-bit.
    """
    if len(dataset) < 2:
        raise InvalidInputError("training needs at least 2 videos")
    d_in = dataset[0].d_in
    if any(v.d_in != d_in for v in dataset):
        raise InvalidInputError("all videos must share one feature dimension")
    min_frames = min(v.n_frames for v in dataset)
    if min_frames < config.hp.T:
        raise InvalidInputError(
            f"clip length T={config.hp.T} exceeds shortest video ({min_frames} frames)"
        )

    pairs_per_epoch = len(dataset) * (len(dataset) - 1) // 2
    config = replace(config, total_steps=config.epochs * pairs_per_epoch)
    if params is None:
        init_rng_seed = np.random.SeedSequence([config.seed, _INIT_TAG]).generate_state(1)[0]
        params = encoder.init_params(
            d_in, config.d_h, config.d_z, seed=int(init_rng_seed),
            mix_weight=config.mix_weight, pos_scale=config.pos_scale,
        )
    if opt_state is None:
        opt_state = OptimizerState.fresh(params)

    curve: list[StepRecord] = []
    global_step = opt_state.step
    start_epoch = global_step // pairs_per_epoch
    for epoch in range(start_epoch, config.epochs):
        order = _epoch_pair_order(len(dataset), config.seed, epoch)
        start_within = global_step - epoch * pairs_per_epoch
        for i, j in order[start_within:]:
            step_rng = np.random.default_rng([config.seed, _STEP_TAG, global_step])
            params, opt_state, record = train_step(
                params, opt_state, dataset[i], dataset[j], config, step_rng
            )
            curve.append(record)
            global_step = opt_state.step
    if checkpoint_path is not None:
        save_checkpoint(params, opt_state, checkpoint_path)
    return params, curve


def save_checkpoint(params: EncoderParams, opt_state: OptimizerState | None, path) -> None:
    optimizer = None
    if opt_state is not None:
        optimizer = {"step": opt_state.step, "m": opt_state.m, "v": opt_state.v}
    write_checkpoint(path, params, optimizer)


def load_checkpoint(path) -> tuple[EncoderParams, OptimizerState | None]:
    params, optimizer = read_checkpoint(path)
    if optimizer is None:
        return params, None
    return params, OptimizerState(
        m=optimizer["m"], v=optimizer["v"], step=int(optimizer["step"])
    )


def write_curve(path, curve: list[StepRecord]) -> None:
    """Training curve as CSV: step, losses, learning rate."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "loss_same", "loss_prop", "loss_sdtw", "combined", "lr"])
        for r in curve:
            writer.writerow(
                [r.step, f"{r.loss_same:.10g}", f"{r.loss_prop:.10g}",
                 f"{r.loss_sdtw:.10g}", f"{r.combined:.10g}", f"{r.lr:.10g}"]
            )
