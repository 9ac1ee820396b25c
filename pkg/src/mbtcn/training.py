"""Mixture synthesis and network training.

Each training example is a clean utterance plus a random section of a random
noise recording, scaled to a random integer SNR.  The input is the noisy
magnitude spectrogram, the target the CDF-mapped instantaneous a priori SNR.
Batches are zero-padded to the longest utterance; padded frames are masked
out of the loss.  Optimization is Adam on elementwise-clipped gradients.

Given the same corpus, config and seed, training is fully deterministic:
the loss trace and the final parameters come out bit-identical.
"""

from dataclasses import dataclass

import numpy as np

from . import engine
from .dsp import AudioSignal, FrameConfig, frame_count, stft
from .engine import Tensor
from .models import ModelParams, ModelSpec, build, forward
from .snrmap import XiMapStats, instantaneous_xi_db, map_xi


@dataclass(frozen=True)
class MixResult:
    noisy: AudioSignal
    clean: AudioSignal
    scaled_noise: AudioSignal
    snr_db: float


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 10
    learn_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float = 1.0
    snr_range_db: tuple[int, int] = (-20, 30)
    snr_step_db: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.snr_range_db[0] > self.snr_range_db[1] or self.snr_step_db < 1:
            raise ValueError("bad SNR range")


def snr_levels(cfg: TrainConfig) -> np.ndarray:
    lo, hi = cfg.snr_range_db
    return np.arange(lo, hi + 1, cfg.snr_step_db)


def draw_snr(rng: np.random.Generator, levels: np.ndarray) -> float:
    return float(levels[rng.integers(len(levels))])


def mix_at_snr(clean: AudioSignal, noise: AudioSignal, snr_db: float,
               offset: int = 0) -> MixResult:
    """Scale a noise section so the mixture hits snr_db over the full utterance.

    alpha = sqrt(P_s / (P_d * 10^(snr/10))); noisy = clean + alpha * section.
    """
    if clean.sample_rate != noise.sample_rate:
        raise ValueError("clean and noise sample rates differ")
    n = len(clean)
    if n == 0:
        raise ValueError("clean signal is empty")
    if offset < 0 or offset + n > len(noise):
        raise ValueError(
            f"noise too short: need {n} samples at offset {offset}, have {len(noise)}")
    section = noise.samples[offset: offset + n]
    p_s = np.mean(clean.samples ** 2)
    p_d = np.mean(section ** 2)
    if p_s == 0.0:
        raise ValueError("clean signal has no power")
    if p_d == 0.0:
        raise ValueError("noise section has no power")
    alpha = np.sqrt(p_s / (p_d * 10.0 ** (snr_db / 10.0)))
    scaled = AudioSignal(alpha * section, clean.sample_rate)
    noisy = AudioSignal(clean.samples + scaled.samples, clean.sample_rate)
    return MixResult(noisy, clean, scaled, float(snr_db))


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0


def adam_init(params: list[Tensor]) -> AdamState:
    return AdamState(m=[np.zeros_like(p.data) for p in params],
                     v=[np.zeros_like(p.data) for p in params])


def adam_step(params: list[Tensor], grads: list[np.ndarray],
              state: AdamState, cfg: TrainConfig) -> AdamState:
    """One bias-corrected Adam update, in place on the parameter tensors."""
    state.t += 1
    bc1 = 1.0 - cfg.beta1 ** state.t
    bc2 = 1.0 - cfg.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        p.data = p.data - cfg.learn_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.adam_eps)
    return state


def _pad_to(signal: AudioSignal, n: int) -> AudioSignal:
    if len(signal) == n:
        return signal
    return AudioSignal(np.pad(signal.samples, (0, n - len(signal))), signal.sample_rate)


def batch_loss(params: ModelParams, mixes: list[MixResult], stats: XiMapStats,
               frame_cfg: FrameConfig = FrameConfig()) -> Tensor:
    """Mean over the batch of each utterance's masked BCE."""
    if not mixes:
        raise ValueError("empty batch")
    longest = max(len(m.clean) for m in mixes)
    total = None
    for m in mixes:
        valid = frame_count(len(m.clean), frame_cfg.frame_shift)
        noisy_spec = stft(_pad_to(m.noisy, longest), frame_cfg)
        clean_spec = stft(_pad_to(m.clean, longest), frame_cfg)
        noise_spec = stft(_pad_to(m.scaled_noise, longest), frame_cfg)
        target = map_xi(instantaneous_xi_db(clean_spec, noise_spec), stats).values
        mask = np.zeros(noisy_spec.n_frames, dtype=bool)
        mask[:valid] = True
        pred = forward(params, noisy_spec.magnitude)
        term = engine.bce_masked(pred, target, mask)
        total = term if total is None else engine.add(total, term)
    return engine.scale(total, 1.0 / len(mixes))


def train(spec: ModelSpec, clean: list[AudioSignal], noise: list[AudioSignal],
          stats: XiMapStats, cfg: TrainConfig = TrainConfig(),
          frame_cfg: FrameConfig = FrameConfig()):
    """Train a network on in-memory corpora.

    Returns (params, trace); trace rows are (epoch, batch, loss).  One epoch
    is one shuffled pass over the clean list.
    """
    if not clean or not noise:
        raise ValueError("corpus must contain clean and noise signals")
    levels = snr_levels(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    params = build(spec, cfg.seed)
    params.stats = stats
    opt = adam_init(params.parameters())
    trace: list[tuple[int, int, float]] = []

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(clean))
        for b, start in enumerate(range(0, len(order), cfg.batch_size)):
            mixes = []
            for idx in order[start: start + cfg.batch_size]:
                c = clean[idx]
                d = noise[rng.integers(len(noise))]
                if len(d) < len(c):
                    raise ValueError("every noise recording must cover the longest utterance")
                offset = int(rng.integers(len(d) - len(c) + 1))
                mixes.append(mix_at_snr(c, d, draw_snr(rng, levels), offset))
            params.zero_grad()
            loss = batch_loss(params, mixes, stats, frame_cfg)
            engine.backward(loss)
            tensors = params.parameters()
            grads = [np.clip(p.grad, -cfg.grad_clip, cfg.grad_clip) for p in tensors]
            adam_step(tensors, grads, opt, cfg)
            trace.append((epoch, b, float(loss.data)))
    return params, trace
