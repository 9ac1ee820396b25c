"""Binary model checkpoints and standalone SNR-map statistics files.

Checkpoint layout, all integers little-endian:

    magic   4 bytes  b"XIMB"
    version u32      (currently 1)
    hlen    u32      header byte length
    header  hlen bytes, UTF-8 JSON: model spec + map dimensions + train info
    payload float32[]: mu, sigma (n_bins each), then the flat parameters
    check   u64      CRC-32 of the payload in the high word, Adler-32 low

Loads verify magic, version and checksum, then audit the payload length
against the parameter count implied by the spec in the header, so a
truncated or mislabeled file fails loudly instead of loading garbage.
Stored parameters are float32; a save/load round trip is bit-exact.

Statistics files use the same envelope with magic b"XIST" and a payload of
just mu and sigma.
"""

import json
import os
import zlib
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .models import ModelParams, ModelSpec, build, count_params, flatten_params, load_flat
from .snrmap import XiMapStats

MAGIC_MODEL = b"XIMB"
MAGIC_STATS = b"XIST"
VERSION = 1


class CorruptCheckpointError(ValueError):
    """Checkpoint failed magic/version/checksum/shape verification."""


def _checksum64(data: bytes) -> int:
    return (zlib.crc32(data) << 32) | zlib.adler32(data)


def _pack(magic: bytes, header: dict, payload: np.ndarray) -> bytes:
    head = json.dumps(header, sort_keys=True).encode("utf-8")
    body = payload.astype("<f4", copy=False).tobytes()
    return b"".join([
        magic,
        VERSION.to_bytes(4, "little"),
        len(head).to_bytes(4, "little"),
        head,
        body,
        _checksum64(body).to_bytes(8, "little"),
    ])


def _unpack(blob: bytes, magic: bytes, path) -> tuple[dict, np.ndarray]:
    if len(blob) < 16 or blob[:4] != magic:
        raise CorruptCheckpointError(f"{path}: bad magic, not a {magic.decode()} file")
    version = int.from_bytes(blob[4:8], "little")
    if version != VERSION:
        raise CorruptCheckpointError(f"{path}: unsupported version {version}")
    hlen = int.from_bytes(blob[8:12], "little")
    if len(blob) < 12 + hlen + 8:
        raise CorruptCheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(blob[12: 12 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpointError(f"{path}: unreadable header ({exc})") from exc
    if not isinstance(header, dict):
        raise CorruptCheckpointError(f"{path}: header is not an object")
    body = blob[12 + hlen: -8]
    stored = int.from_bytes(blob[-8:], "little")
    if _checksum64(body) != stored:
        raise CorruptCheckpointError(f"{path}: checksum mismatch")
    if len(body) % 4:
        raise CorruptCheckpointError(f"{path}: payload is not a float32 array")
    return header, np.frombuffer(body, dtype="<f4")


def _write_atomic(path, blob: bytes):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(blob)
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def save_checkpoint(path, params: ModelParams, train_info: dict | None = None):
    if params.stats is None:
        raise ValueError("model has no map statistics attached; refuse to save")
    header = {
        "spec": asdict(params.spec),
        "n_stats_bins": params.stats.n_bins,
        "train": train_info,
    }
    payload = np.concatenate([
        params.stats.mu.astype(np.float32),
        params.stats.sigma.astype(np.float32),
        flatten_params(params),
    ])
    _write_atomic(path, _pack(MAGIC_MODEL, header, payload))


def load_checkpoint(path) -> ModelParams:
    blob = Path(path).read_bytes()
    header, payload = _unpack(blob, MAGIC_MODEL, path)
    try:
        spec = ModelSpec(**header["spec"])
        k = int(header["n_stats_bins"])
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpointError(f"{path}: malformed header ({exc})") from exc
    n_params = count_params(spec)
    if payload.size != 2 * k + n_params:
        raise CorruptCheckpointError(
            f"{path}: payload holds {payload.size} floats, "
            f"spec implies {2 * k + n_params}")
    mu = payload[:k].astype(np.float64)
    sigma = payload[k: 2 * k].astype(np.float64)
    params = build(spec, seed=0)
    load_flat(params, payload[2 * k:])
    params.stats = XiMapStats(mu, sigma)
    return params


def save_stats(path, stats: XiMapStats):
    header = {"n_bins": stats.n_bins}
    payload = np.concatenate([stats.mu.astype(np.float32),
                              stats.sigma.astype(np.float32)])
    _write_atomic(path, _pack(MAGIC_STATS, header, payload))


def load_stats(path) -> XiMapStats:
    blob = Path(path).read_bytes()
    header, payload = _unpack(blob, MAGIC_STATS, path)
    k = int(header.get("n_bins", -1))
    if k < 1 or payload.size != 2 * k:
        raise CorruptCheckpointError(f"{path}: stats payload size mismatch")
    return XiMapStats(payload[:k].astype(np.float64),
                      payload[k:].astype(np.float64))
