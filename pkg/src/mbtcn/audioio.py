"""WAV file I/O and manifest parsing.

Only one format is accepted: RIFF PCM, 16-bit, mono, 16 kHz.  Anything else
raises UnsupportedFormatError naming the offending property.  Samples are
normalized by 1/32768 on read; writes round half away from zero and clip to
the int16 range, so a write/read round trip is exact to within one LSB.
"""

import os
import wave
from pathlib import Path

import numpy as np

from .dsp import PIPELINE_RATE, AudioSignal

INT16_SCALE = 32768.0


class UnsupportedFormatError(ValueError):
    """Audio file exists but is not 16-bit PCM mono 16 kHz RIFF."""


def read_wav(path) -> AudioSignal:
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as f:
            channels = f.getnchannels()
            width = f.getsampwidth()
            rate = f.getframerate()
            comp = f.getcomptype()
            if comp != "NONE":
                raise UnsupportedFormatError(f"{path}: compressed WAV ({comp}) not supported")
            if width != 2:
                raise UnsupportedFormatError(f"{path}: {8 * width}-bit samples, need 16-bit")
            if channels != 1:
                raise UnsupportedFormatError(f"{path}: {channels} channels, need mono")
            if rate != PIPELINE_RATE:
                raise UnsupportedFormatError(f"{path}: {rate} Hz, pipeline runs at {PIPELINE_RATE} Hz")
            raw = f.readframes(f.getnframes())
    except wave.Error as exc:
        raise UnsupportedFormatError(f"{path}: not a PCM RIFF file ({exc})") from exc
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / INT16_SCALE
    return AudioSignal(samples, PIPELINE_RATE)


def write_wav(path, signal: AudioSignal):
    if signal.sample_rate != PIPELINE_RATE:
        raise UnsupportedFormatError(
            f"{path}: refusing to write {signal.sample_rate} Hz, pipeline rate is {PIPELINE_RATE} Hz")
    x = signal.samples * INT16_SCALE
    rounded = np.where(x >= 0.0, np.floor(x + 0.5), np.ceil(x - 0.5))
    ints = np.clip(rounded, -32768, 32767).astype("<i2")

    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        with wave.open(str(tmp), "wb") as f:
            f.setnchannels(1)
            f.setsampwidth(2)
            f.setframerate(PIPELINE_RATE)
            f.writeframes(ints.tobytes())
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def read_manifest(path) -> list[Path]:
    """One file path per line; blanks and #-comments skipped.

    Relative entries resolve against the manifest's own directory.
    """
    path = Path(path)
    base = path.parent
    entries = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        p = Path(line)
        entries.append(p if p.is_absolute() else base / p)
    if not entries:
        raise ValueError(f"{path}: manifest lists no files")
    return entries
