"""Speech enhancement with multi-branch temporal convolutional SNR estimators.

A causal network predicts, per time-frequency bin, the a priori SNR of a
noisy spectrogram mapped through a trained Gaussian CDF. Inverting the map
yields SNR estimates that drive closed-form spectral gain rules (square-root
Wiener, MMSE short-time spectral amplitude, MMSE log-spectral amplitude),
and the gained spectrum is resynthesised with the noisy phase.
"""

from .audioio import UnsupportedFormatError, read_manifest, read_wav, write_wav
from .checkpoint import (CorruptCheckpointError, load_checkpoint, load_stats,
                         save_checkpoint, save_stats)
from .dsp import (AudioSignal, FrameConfig, Spectrogram, frame_count,
                  hamming_window, istft, reconstruct, stft)
from .enhance import EnhanceRequest, enhance, enhance_oracle
from .engine import Tensor, backward, bce_masked, no_grad
from .gains import GAIN_KINDS, gain, mmse_lsa, mmse_stsa, nu, srwf
from .metrics import SegSnrConfig, seg_snr, ssnr_improvement
from .models import (FAMILIES, ModelParams, ModelSpec, build, count_params,
                     forward, receptive_field_frames, receptive_field_seconds)
from .snrmap import (SnrGrid, XiMapStats, a_posteriori_from_xi, estimate_stats,
                     instantaneous_xi_db, map_xi, unmap_xi, unmap_xi_db)
from .training import TrainConfig, mix_at_snr, snr_levels, train

__version__ = "0.1.0"

__all__ = [
    "AudioSignal", "CorruptCheckpointError", "EnhanceRequest", "FAMILIES",
    "FrameConfig", "GAIN_KINDS", "ModelParams", "ModelSpec", "SegSnrConfig",
    "SnrGrid", "Spectrogram", "Tensor", "TrainConfig", "UnsupportedFormatError",
    "XiMapStats", "a_posteriori_from_xi", "backward", "bce_masked", "build",
    "count_params", "enhance", "enhance_oracle", "estimate_stats", "forward",
    "frame_count", "gain", "hamming_window", "instantaneous_xi_db", "istft",
    "load_checkpoint", "load_stats", "map_xi", "mix_at_snr", "mmse_lsa",
    "mmse_stsa", "no_grad", "nu", "read_manifest", "read_wav", "reconstruct",
    "receptive_field_frames", "receptive_field_seconds", "save_checkpoint",
    "save_stats", "seg_snr", "snr_levels", "srwf", "ssnr_improvement", "stft",
    "train", "unmap_xi", "unmap_xi_db", "write_wav",
]
