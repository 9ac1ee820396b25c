"""Deterministic synthetic signals for tests and demos.

Real recordings are out of scope here; these generators produce harmonic
"voices" (pitch drift, a couple of formant-like spectral bumps, slow
amplitude modulation, a whisper of breath noise) plus white and
band-limited noise, all seeded.  Run as a module to write a small corpus with manifests:

    python -m mbtcn.synth OUTDIR --clean 5 --noise 3 --seconds 2
"""

import argparse
from pathlib import Path

import numpy as np

from .audioio import write_wav
from .dsp import PIPELINE_RATE, AudioSignal


def harmonic_voice(seconds: float, f0: float = 150.0,
                   sample_rate: int = PIPELINE_RATE, seed: int = 0) -> AudioSignal:
    """A voiced, vowel-ish tone: harmonics of a slowly wandering pitch."""
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(round(seconds * sample_rate))
    t = np.arange(n) / sample_rate

    vibrato = 1.0 + 0.02 * np.sin(2.0 * np.pi * (4.0 + rng.uniform(0, 2)) * t
                                  + rng.uniform(0, 2 * np.pi))
    inst_f0 = f0 * vibrato
    base_phase = 2.0 * np.pi * np.cumsum(inst_f0) / sample_rate

    centers = rng.uniform(300.0, 3000.0, size=2)          # formant-like bumps
    widths = rng.uniform(150.0, 500.0, size=2)
    n_harm = int(4000.0 // f0)
    x = np.zeros(n)
    for h in range(1, n_harm + 1):
        freq = h * f0
        shape = sum(np.exp(-0.5 * ((freq - c) / w) ** 2)
                    for c, w in zip(centers, widths))
        amp = (0.2 + shape) / h
        x += amp * np.sin(h * base_phase + rng.uniform(0, 2 * np.pi))

    envelope = 0.6 + 0.4 * np.sin(2.0 * np.pi * rng.uniform(1.5, 3.5) * t
                                  + rng.uniform(0, 2 * np.pi))
    x *= envelope
    x += 10.0 ** (-30.0 / 20.0) * rng.standard_normal(n)   # breath noise
    x *= 0.25 / np.sqrt(np.mean(x ** 2))
    return AudioSignal(np.clip(x, -0.99, 0.99), sample_rate)


def white_noise(seconds: float, sample_rate: int = PIPELINE_RATE,
                seed: int = 0) -> AudioSignal:
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(round(seconds * sample_rate))
    x = rng.standard_normal(n)
    x *= 0.15 / np.sqrt(np.mean(x ** 2))
    return AudioSignal(np.clip(x, -0.99, 0.99), sample_rate)


def bandlimited_noise(seconds: float, lo_hz: float = 5000.0,
                      hi_hz: float = 7500.0, sample_rate: int = PIPELINE_RATE,
                      seed: int = 0) -> AudioSignal:
    """White noise brick-walled to [lo_hz, hi_hz); think hiss or whine."""
    if not 0.0 <= lo_hz < hi_hz <= sample_rate / 2:
        raise ValueError(f"bad band [{lo_hz}, {hi_hz}) at rate {sample_rate}")
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(round(seconds * sample_rate))
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spectrum[(freqs < lo_hz) | (freqs >= hi_hz)] = 0.0
    x = np.fft.irfft(spectrum, n)
    x *= 0.15 / np.sqrt(np.mean(x ** 2))
    return AudioSignal(np.clip(x, -0.99, 0.99), sample_rate)


def demo_corpus(outdir, n_clean: int = 5, n_noise: int = 3,
                seconds: float = 2.0, seed: int = 0):
    """Write clean/ and noise/ wavs plus clean.txt and noise.txt manifests.

    Noise recordings are made 1.5x longer than the utterances so random
    offsets have room.  Returns (clean_manifest, noise_manifest) paths.
    """
    outdir = Path(outdir)
    (outdir / "clean").mkdir(parents=True, exist_ok=True)
    (outdir / "noise").mkdir(parents=True, exist_ok=True)
    clean_paths, noise_paths = [], []
    for i in range(n_clean):
        f0 = 110.0 * 2.0 ** (i / max(n_clean - 1, 1))     # spread pitches over an octave
        sig = harmonic_voice(seconds, f0=f0, seed=seed * 1000 + i)
        p = outdir / "clean" / f"voice{i:02d}.wav"
        write_wav(p, sig)
        clean_paths.append(p)
    for i in range(n_noise):
        if i == n_noise - 1 and n_noise >= 2:
            sig = bandlimited_noise(seconds * 1.5, seed=seed * 1000 + 500 + i)
            p = outdir / "noise" / "hiss00.wav"
        else:
            sig = white_noise(seconds * 1.5, seed=seed * 1000 + 500 + i)
            p = outdir / "noise" / f"white{i:02d}.wav"
        write_wav(p, sig)
        noise_paths.append(p)

    clean_manifest = outdir / "clean.txt"
    noise_manifest = outdir / "noise.txt"
    clean_manifest.write_text("".join(f"clean/{p.name}\n" for p in clean_paths))
    noise_manifest.write_text("".join(f"noise/{p.name}\n" for p in noise_paths))
    return clean_manifest, noise_manifest


def main(argv=None):
    ap = argparse.ArgumentParser(description="write a tiny synthetic demo corpus")
    ap.add_argument("outdir")
    ap.add_argument("--clean", type=int, default=5)
    ap.add_argument("--noise", type=int, default=3)
    ap.add_argument("--seconds", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    cm, nm = demo_corpus(args.outdir, args.clean, args.noise, args.seconds, args.seed)
    print(f"wrote {cm} and {nm}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
