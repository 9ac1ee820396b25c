"""Command line interface.

Subcommands cover the whole workflow on small corpora:

    mix      build noisy/clean/noise wav triples at a fixed SNR
    stats    estimate the per-bin SNR map statistics from a corpus
    train    train a network and write a checkpoint plus a loss CSV
    enhance  run a checkpoint over wav files
    eval     score enhanced files against clean references
    info     describe a checkpoint

Exit codes: 0 success, 1 domain or I/O failure (message on stderr),
2 usage errors (argparse).
"""

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .audioio import read_manifest, read_wav, write_wav
from .checkpoint import load_checkpoint, load_stats, save_checkpoint, save_stats
from .dsp import stft
from .enhance import EnhanceRequest, enhance
from .gains import GAIN_KINDS
from .metrics import seg_snr, ssnr_improvement
from .models import (FAMILIES, ModelSpec, count_params, receptive_field_frames,
                     receptive_field_seconds)
from .snrmap import estimate_stats
from .training import TrainConfig, mix_at_snr, train

SPECTROGRAM_FLOOR_DB = -60.0


def _parse_spec(text: str, args) -> ModelSpec:
    try:
        family, _, blocks = text.partition(":")
        n_blocks = int(blocks)
    except ValueError:
        raise ValueError(f"bad --spec {text!r}, expected FAMILY:N_BLOCKS")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    d_f = args.d_f if args.d_f is not None else (24 if family == "densenet" else 64)
    return ModelSpec(family, n_blocks, d_model=args.d_model, d_f=d_f,
                     kernel=args.kernel, max_dilation=args.max_dilation,
                     n_branches=args.branches)


def _mix_name(clean_path: Path, noise_path: Path, snr_db: float) -> str:
    return f"{clean_path.stem}__{noise_path.stem}__snr{snr_db:g}dB.wav"


def _draw_pair(rng, clean_sig, noise_paths, noise_cache):
    idx = int(rng.integers(len(noise_paths)))
    noise = noise_cache.setdefault(idx, read_wav(noise_paths[idx]))
    if len(noise) < len(clean_sig):
        raise ValueError(f"{noise_paths[idx]}: shorter than a clean utterance")
    offset = int(rng.integers(len(noise) - len(clean_sig) + 1))
    return noise_paths[idx], noise, offset


def _cmd_mix(args) -> int:
    clean_paths = read_manifest(args.clean)
    noise_paths = read_manifest(args.noise)
    out = Path(args.out)
    for sub in ("clean", "noisy", "noise"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    noise_cache: dict = {}
    for cp in clean_paths:
        clean = read_wav(cp)
        np_path, noise, offset = _draw_pair(rng, clean, noise_paths, noise_cache)
        mix = mix_at_snr(clean, noise, args.snr_db, offset)
        name = _mix_name(cp, np_path, args.snr_db)
        write_wav(out / "clean" / name, mix.clean)
        write_wav(out / "noisy" / name, mix.noisy)
        write_wav(out / "noise" / name, mix.scaled_noise)
        print(f"mixed {name}")
    return 0


def _cmd_stats(args) -> int:
    clean_paths = read_manifest(args.clean)
    noise_paths = read_manifest(args.noise)
    levels = [float(s) for s in args.snrs.split(",")]
    rng = np.random.Generator(np.random.PCG64(args.seed))
    noise_cache: dict = {}

    def pairs():
        for cp in clean_paths:
            clean = read_wav(cp)
            for snr in levels:
                _, noise, offset = _draw_pair(rng, clean, noise_paths, noise_cache)
                mix = mix_at_snr(clean, noise, snr, offset)
                yield mix.clean, mix.scaled_noise

    stats = estimate_stats(pairs())
    save_stats(args.out, stats)
    print(f"wrote stats for {stats.n_bins} bins to {args.out} "
          f"({len(clean_paths)} clean files x {len(levels)} SNR levels)")
    return 0


def _cmd_train(args) -> int:
    spec = _parse_spec(args.spec, args)
    stats = load_stats(args.stats)
    clean = [read_wav(p) for p in read_manifest(args.clean)]
    noise = [read_wav(p) for p in read_manifest(args.noise)]
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                      learn_rate=args.lr, seed=args.seed,
                      snr_range_db=(args.snr_min, args.snr_max))
    params, trace = train(spec, clean, noise, stats, cfg)
    save_checkpoint(args.out, params, train_info={
        "epochs": cfg.epochs, "batch_size": cfg.batch_size,
        "learn_rate": cfg.learn_rate, "seed": cfg.seed,
        "final_loss": trace[-1][2] if trace else None,
    })
    loss_csv = Path(args.loss_csv) if args.loss_csv else Path(str(args.out) + ".loss.csv")
    with loss_csv.open("w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "batch", "loss"])
        w.writerows(trace)
    print(f"trained {spec.family}:{spec.n_blocks} for {cfg.epochs} epochs, "
          f"final loss {trace[-1][2]:.6f}; wrote {args.out} and {loss_csv}")
    return 0


def _spectrogram_png(path, signal):
    try:
        from PIL import Image
    except ImportError:
        raise ValueError("PNG output needs pillow (pip install mbtcn[png])")
    mag = stft(signal).magnitude
    ref = mag.max()
    if ref <= 0:
        db = np.full_like(mag, SPECTROGRAM_FLOOR_DB)
    else:
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mag / ref)
    db = np.clip(db, SPECTROGRAM_FLOOR_DB, 0.0)
    img = ((db - SPECTROGRAM_FLOOR_DB) / -SPECTROGRAM_FLOOR_DB * 255.0).astype(np.uint8)
    Image.fromarray(img.T[::-1]).save(path)   # frequency up, time right


def _cmd_enhance(args) -> int:
    params = load_checkpoint(args.ckpt)
    src = Path(args.infile)
    files = sorted(src.glob("*.wav")) if src.is_dir() else [src]
    if not files:
        raise ValueError(f"{src}: no wav files to enhance")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    png_dir = Path(args.spectrogram) if args.spectrogram else None
    if png_dir:
        png_dir.mkdir(parents=True, exist_ok=True)
    for f in files:
        enhanced = enhance(EnhanceRequest(read_wav(f), params, args.gain))
        write_wav(out / f.name, enhanced)
        if png_dir:
            _spectrogram_png(png_dir / (f.stem + ".png"), enhanced)
        print(f"enhanced {f.name}")
    return 0


def _parse_mix_name(name: str):
    stem = Path(name).stem
    parts = stem.split("__")
    if len(parts) == 3 and parts[2].startswith("snr") and parts[2].endswith("dB"):
        try:
            return parts[1], float(parts[2][3:-2])
        except ValueError:
            pass
    return "", ""


def _cmd_eval(args) -> int:
    clean_dir, noisy_dir, enh_dir = Path(args.clean), Path(args.noisy), Path(args.enhanced)
    names = sorted(p.name for p in enh_dir.glob("*.wav"))
    if not names:
        raise ValueError(f"{enh_dir}: no wav files to score")
    rows = []
    for name in names:
        for d in (clean_dir, noisy_dir):
            if not (d / name).exists():
                raise ValueError(f"{d / name}: missing counterpart for {name}")
        clean = read_wav(clean_dir / name)
        noisy = read_wav(noisy_dir / name)
        enhanced = read_wav(enh_dir / name)
        noise_tag, snr_db = _parse_mix_name(name)
        snr_noisy = seg_snr(clean, noisy)
        snr_enh = seg_snr(clean, enhanced)
        rows.append([name, snr_db, noise_tag, round(snr_noisy, 4), round(snr_enh, 4),
                     round(ssnr_improvement(clean, noisy, enhanced), 4)])
    avg = [float(np.mean([r[i] for r in rows])) for i in (3, 4, 5)]
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["file", "snr_db", "noise", "seg_snr_noisy", "seg_snr_enhanced",
                    "ssnr_improvement"])
        w.writerows(rows)
        w.writerow(["AVERAGE", "", "", round(avg[0], 4), round(avg[1], 4),
                    round(avg[2], 4)])
    print(f"scored {len(rows)} files; mean improvement {avg[2]:.2f} dB -> {args.out}")
    return 0


def _cmd_info(args) -> int:
    params = load_checkpoint(args.ckpt)
    spec = params.spec
    frames = receptive_field_frames(spec)
    print(f"family        {spec.family}")
    print(f"blocks        {spec.n_blocks}")
    print(f"d_model/d_f   {spec.d_model}/{spec.d_f}")
    print(f"kernel        {spec.kernel}, max dilation {spec.max_dilation}"
          + (f", branches {spec.n_branches}" if spec.family == "mb-tcn" else ""))
    print(f"parameters    {count_params(spec):,}")
    print(f"receptive     {frames} frames ({receptive_field_seconds(spec):.3f} s)")
    print(f"map stats     {params.stats.n_bins} bins, "
          f"mu in [{params.stats.mu.min():.2f}, {params.stats.mu.max():.2f}] dB")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mbtcn", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", help="mix clean and noise manifests at one SNR")
    p.add_argument("--clean", required=True, help="manifest of clean wavs")
    p.add_argument("--noise", required=True, help="manifest of noise wavs")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_mix)

    p = sub.add_parser("stats", help="estimate SNR map statistics")
    p.add_argument("--clean", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--out", required=True, help="stats file to write")
    p.add_argument("--snrs", default="-5,0,5,10,15", help="comma-separated dB levels")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("train", help="train a network")
    p.add_argument("--spec", required=True, help="FAMILY:N_BLOCKS, e.g. mb-tcn:12")
    p.add_argument("--clean", required=True)
    p.add_argument("--noise", required=True)
    p.add_argument("--stats", required=True, help="stats file from the stats command")
    p.add_argument("--out", required=True, help="checkpoint to write")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--snr-min", type=int, default=-20)
    p.add_argument("--snr-max", type=int, default=30)
    p.add_argument("--d-model", type=int, default=256)
    p.add_argument("--d-f", type=int, default=None,
                   help="branch/growth width (default 64, densenet 24)")
    p.add_argument("--kernel", type=int, default=3)
    p.add_argument("--max-dilation", type=int, default=16)
    p.add_argument("--branches", type=int, default=8)
    p.add_argument("--loss-csv", default=None, help="loss trace path (default OUT.loss.csv)")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("enhance", help="enhance wav files with a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="infile", required=True, help="wav file or directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--gain", choices=GAIN_KINDS, default="mmse-lsa")
    p.add_argument("--spectrogram", default=None,
                   help="also write log-magnitude PNGs to this directory")
    p.set_defaults(func=_cmd_enhance)

    p = sub.add_parser("eval", help="score enhanced files against references")
    p.add_argument("--clean", required=True, help="directory of clean wavs")
    p.add_argument("--noisy", required=True, help="directory of noisy wavs")
    p.add_argument("--enhanced", required=True, help="directory of enhanced wavs")
    p.add_argument("--out", required=True, help="report CSV")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("info", help="describe a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.set_defaults(func=_cmd_info)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
