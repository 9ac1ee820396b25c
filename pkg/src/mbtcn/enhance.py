"""End-to-end enhancement: noisy waveform in, enhanced waveform out.

Pipeline order is fixed: STFT, magnitude, network forward, inverse SNR map,
a posteriori SNR (xi + 1), gain evaluation, and resynthesis of the scaled
coefficients with the noisy phase.  The oracle variant skips the network
and takes the instantaneous SNR straight from known clean/noise signals,
which bounds what any estimator of it could achieve.
"""

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .dsp import AudioSignal, FrameConfig, reconstruct, stft
from .gains import GAIN_KINDS, gain
from .models import ModelParams, forward
from .snrmap import SnrGrid, a_posteriori_from_xi, instantaneous_xi_db, unmap_xi


@dataclass(frozen=True)
class EnhanceRequest:
    noisy: AudioSignal
    params: ModelParams
    gain_kind: str = "mmse-lsa"
    frame_cfg: FrameConfig = field(default_factory=FrameConfig)

    def __post_init__(self):
        if self.gain_kind not in GAIN_KINDS:
            raise ValueError(f"unknown gain kind {self.gain_kind!r}")
        if self.params.stats is None:
            raise ValueError("model carries no map statistics")


def enhance(req: EnhanceRequest) -> AudioSignal:
    noisy_spec = stft(req.noisy, req.frame_cfg)
    with engine.no_grad():
        mapped = forward(req.params, noisy_spec.magnitude).data.astype(np.float64)
    xi = unmap_xi(SnrGrid(np.clip(mapped, 0.0, 1.0), "xi_mapped"), req.params.stats)
    g = gain(req.gain_kind, xi, a_posteriori_from_xi(xi))
    out = reconstruct(noisy_spec, g)
    assert len(out) == len(req.noisy)
    return out


def enhance_oracle(noisy: AudioSignal, clean: AudioSignal, noise: AudioSignal,
                   gain_kind: str = "mmse-lsa",
                   frame_cfg: FrameConfig = FrameConfig()) -> AudioSignal:
    """Enhance with the true instantaneous SNR instead of a network estimate."""
    if gain_kind not in GAIN_KINDS:
        raise ValueError(f"unknown gain kind {gain_kind!r}")
    if not (len(noisy) == len(clean) == len(noise)):
        raise ValueError("noisy, clean and noise must be aligned")
    noisy_spec = stft(noisy, frame_cfg)
    xi_db = instantaneous_xi_db(stft(clean, frame_cfg), stft(noise, frame_cfg))
    xi = SnrGrid(np.power(10.0, xi_db.values / 10.0), "xi_linear")
    g = gain(gain_kind, xi, a_posteriori_from_xi(xi))
    return reconstruct(noisy_spec, g)
