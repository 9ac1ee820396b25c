"""STFT analysis/synthesis front end.

32 ms periodic Hamming frames with a 16 ms shift at 16 kHz, 257-bin
single-sided spectra, and weighted overlap-add (WOLA) resynthesis with the
same window on both sides.  All functions are pure; float64 throughout.
"""

from dataclasses import dataclass, field

import numpy as np
from numpy.fft import irfft, rfft

PIPELINE_RATE = 16000


@dataclass(frozen=True)
class FrameConfig:
    frame_len: int = 512
    frame_shift: int = 256
    fft_len: int = 512

    def __post_init__(self):
        if not (0 < self.frame_shift <= self.frame_len):
            raise ValueError("need 0 < frame_shift <= frame_len")
        if self.fft_len != self.frame_len:
            raise ValueError("fft_len must equal frame_len")

    @property
    def n_bins(self) -> int:
        return self.fft_len // 2 + 1


@dataclass(frozen=True)
class AudioSignal:
    samples: np.ndarray
    sample_rate: int = PIPELINE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioSignal holds a single channel")
        if samples.size and not np.all(np.isfinite(samples)):
            raise ValueError("AudioSignal samples must be finite")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class Spectrogram:
    coeffs: np.ndarray                      # (L, K) complex
    config: FrameConfig = field(default_factory=FrameConfig)
    n_samples: int | None = None            # original length, when known

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.ndim != 2 or coeffs.shape[1] != self.config.n_bins:
            raise ValueError(
                f"expected (L, {self.config.n_bins}) coefficients, got {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_frames(self) -> int:
        return self.coeffs.shape[0]

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.coeffs)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.coeffs)


def hamming_window(n: int) -> np.ndarray:
    """Periodic (DFT-even) Hamming window: 0.54 - 0.46*cos(2*pi*i/n)."""
    if n < 2:
        raise ValueError("window length must be at least 2")
    i = np.arange(n, dtype=np.float64)
    return 0.54 - 0.46 * np.cos(2.0 * np.pi * i / n)


def frame_count(n_samples: int, frame_shift: int) -> int:
    """Frames covering n_samples at the given shift, tail zero-padded."""
    return -(-n_samples // frame_shift)


def _frames(x: np.ndarray, cfg: FrameConfig) -> np.ndarray:
    n_frames = frame_count(x.size, cfg.frame_shift)
    padded_len = (n_frames - 1) * cfg.frame_shift + cfg.frame_len
    padded = np.zeros(padded_len, dtype=np.float64)
    padded[: x.size] = x
    idx = (np.arange(n_frames)[:, None] * cfg.frame_shift
           + np.arange(cfg.frame_len)[None, :])
    return padded[idx]


def stft(signal: AudioSignal, cfg: FrameConfig = FrameConfig()) -> Spectrogram:
    """Windowed single-sided STFT, DC and Nyquist bins retained."""
    if len(signal) == 0:
        raise ValueError("cannot transform an empty signal")
    if signal.sample_rate != PIPELINE_RATE:
        raise ValueError(
            f"pipeline runs at {PIPELINE_RATE} Hz, got {signal.sample_rate} Hz")
    window = hamming_window(cfg.frame_len)
    frames = _frames(signal.samples, cfg) * window
    return Spectrogram(rfft(frames, n=cfg.fft_len, axis=1), cfg, len(signal))


def istft(spec: Spectrogram) -> AudioSignal:
    """WOLA synthesis: re-window, overlap-add, normalize by the window-square sum.

    Returns the recorded original length when the spectrogram carries one,
    otherwise the full L*shift + (frame_len - shift) span.
    """
    cfg = spec.config
    if not np.all(np.isfinite(spec.coeffs)):
        raise ValueError("spectrogram contains non-finite coefficients")
    window = hamming_window(cfg.frame_len)
    frames = irfft(spec.coeffs, n=cfg.fft_len, axis=1) * window

    total = (spec.n_frames - 1) * cfg.frame_shift + cfg.frame_len
    acc = np.zeros(total, dtype=np.float64)
    wsq = np.zeros(total, dtype=np.float64)
    wsq_frame = window * window
    for l in range(spec.n_frames):
        start = l * cfg.frame_shift
        acc[start: start + cfg.frame_len] += frames[l]
        wsq[start: start + cfg.frame_len] += wsq_frame
    out = acc / np.maximum(wsq, 1e-12)

    keep = spec.n_samples if spec.n_samples is not None else total
    return AudioSignal(out[:keep], PIPELINE_RATE)


def reconstruct(noisy: Spectrogram, gains: np.ndarray) -> AudioSignal:
    """Scale the noisy coefficients by real gains (keeps the noisy phase), resynthesize."""
    gains = np.asarray(gains, dtype=np.float64)
    if gains.shape != noisy.coeffs.shape:
        raise ValueError(
            f"gain shape {gains.shape} does not match spectrogram {noisy.coeffs.shape}")
    if not np.all(np.isfinite(gains)) or np.any(gains < 0.0):
        raise ValueError("gains must be finite and non-negative")
    return istft(Spectrogram(noisy.coeffs * gains, noisy.config, noisy.n_samples))
