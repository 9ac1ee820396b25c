"""Segmental SNR and the SSNR improvement measure.

Frame-level SNR between a clean reference and a test signal, clamped per
frame to [-10, +35] dB, averaged over frames whose clean energy sits within
40 dB of the loudest frame.  Improvement is the difference between the
enhanced and noisy scores against the same reference.
"""

from dataclasses import dataclass

import numpy as np

from .dsp import AudioSignal

MIN_FRAME_SNR_DB = -10.0
MAX_FRAME_SNR_DB = 35.0


@dataclass(frozen=True)
class SegSnrConfig:
    frame_len: int = 512
    frame_shift: int = 256
    silence_threshold_db: float = -40.0   # clean-frame energy floor, relative to peak

    def __post_init__(self):
        if not (0 < self.frame_shift <= self.frame_len):
            raise ValueError("need 0 < frame_shift <= frame_len")


def _frame_starts(n: int, cfg: SegSnrConfig):
    return range(0, n - cfg.frame_len + 1, cfg.frame_shift)


def seg_snr(clean: AudioSignal, test: AudioSignal,
            cfg: SegSnrConfig = SegSnrConfig()) -> float:
    """Mean clamped per-frame SNR of test against clean, in dB."""
    s = clean.samples
    t = test.samples
    if s.size != t.size:
        raise ValueError("signals must have equal length")
    if s.size < cfg.frame_len:
        raise ValueError("signal shorter than one frame")
    if not np.any(s != 0.0):
        raise ValueError("clean reference is all zero")

    starts = list(_frame_starts(s.size, cfg))
    sig = np.array([np.sum(s[i: i + cfg.frame_len] ** 2) for i in starts])
    err = np.array([np.sum((s[i: i + cfg.frame_len] - t[i: i + cfg.frame_len]) ** 2)
                    for i in starts])

    active = sig > sig.max() * 10.0 ** (cfg.silence_threshold_db / 10.0)
    sig, err = sig[active], err[active]
    with np.errstate(divide="ignore"):
        snr = 10.0 * np.log10(sig / err)   # err = 0 gives +inf, clamped below
    return float(np.mean(np.clip(snr, MIN_FRAME_SNR_DB, MAX_FRAME_SNR_DB)))


def ssnr_improvement(clean: AudioSignal, noisy: AudioSignal, enhanced: AudioSignal,
                     cfg: SegSnrConfig = SegSnrConfig()) -> float:
    """seg_snr(clean, enhanced) - seg_snr(clean, noisy), in dB."""
    if not (len(clean) == len(noisy) == len(enhanced)):
        raise ValueError("signals must have equal length")
    return seg_snr(clean, enhanced, cfg) - seg_snr(clean, noisy, cfg)
