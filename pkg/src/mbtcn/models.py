"""Network families for per-bin SNR estimation on magnitude spectrograms.

All four are causal residual stacks over (frames, channels) activations,
built from the same three primitives: fully connected input/output layers,
pre-activated (layer norm, ReLU) dilated causal convolutions, and identity
skips.  Dilation cycles through powers of two up to max_dilation.

  mb-tcn    residual blocks of parallel branches; each branch compresses
            with a 1-tap conv to d_f channels, then applies one dilated
            k-tap conv; branch outputs are concatenated and fused back to
            d_model by a 1-tap conv.  Trunk width d_model.
  tcn-bc    basic residual block: two dilated k-tap convs at width d_f.
            Trunk width d_f.
  tcn-bk    bottleneck residual block: 1-tap down to d_f, dilated k-tap at
            d_f, 1-tap back up.  Trunk width d_model.
  densenet  blocks of four k-tap convs with growth d_f; inside a block each
            conv sees the concatenation of the block input and all earlier
            conv outputs, and the full concatenation is passed on.  The
            first conv of the next block resets the width back to d_f.
            Growth is conventionally 24 for this family.

The input layer is a fully connected map from the 257 magnitude bins to the
trunk width with layer norm and ReLU after it; the output layer maps the
trunk back to 257 with a sigmoid, one mapped-SNR estimate per bin.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import engine
from .engine import Tensor
from .snrmap import XiMapStats

FAMILIES = ("mb-tcn", "tcn-bc", "tcn-bk", "densenet")

N_BINS = 257


@dataclass(frozen=True)
class ModelSpec:
    family: str
    n_blocks: int
    d_model: int = 256
    d_f: int = 64
    kernel: int = 3
    max_dilation: int = 16
    n_branches: int = 8
    n_bins: int = N_BINS

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n_blocks < 1:
            raise ValueError("n_blocks must be at least 1")
        if min(self.d_model, self.d_f, self.kernel, self.n_branches, self.n_bins) < 1:
            raise ValueError("spec dimensions must be positive")
        d = self.max_dilation
        if d < 1 or (d & (d - 1)) != 0:
            raise ValueError("max_dilation must be a power of two")


def dilation_for_block(n: int, max_dilation: int) -> int:
    """Cycle 1, 2, 4, ..., max_dilation, starting over; n is 1-based."""
    if n < 1:
        raise ValueError("block index is 1-based")
    if max_dilation < 1 or (max_dilation & (max_dilation - 1)) != 0:
        raise ValueError("max_dilation must be a power of two")
    cycle = int(math.log2(max_dilation)) + 1
    return 2 ** ((n - 1) % cycle)


# Dilated k-tap convs on a block's serial path, per family.  Parallel
# branches do not stack, so mb-tcn counts one.
_DILATED_PER_BLOCK = {"mb-tcn": 1, "tcn-bc": 2, "tcn-bk": 1, "densenet": 4}


def receptive_field_frames(spec: ModelSpec) -> int:
    """1 + sum over blocks of (kernel-1)*dilation per dilated conv in the path."""
    per_block = _DILATED_PER_BLOCK[spec.family]
    total = 1
    for n in range(1, spec.n_blocks + 1):
        total += per_block * (spec.kernel - 1) * dilation_for_block(n, spec.max_dilation)
    return total


def receptive_field_seconds(spec: ModelSpec, frame_shift: int = 256,
                            sample_rate: int = 16000) -> float:
    return receptive_field_frames(spec) * frame_shift / sample_rate


@dataclass(frozen=True)
class UnitPlan:
    """One linear unit: an fc or conv with its attached layer norm.

    ln placement: "pre" normalizes (and ReLUs) the unit input before the
    linear op, "post" normalizes after it, None means bare.  activation
    applies only to bare units ("sigmoid" on the output layer).
    """
    kind: str                  # "fc" | "conv"
    name: str
    c_in: int
    c_out: int
    taps: int = 1
    dilation: int = 1
    ln: str | None = None      # "pre" | "post" | None
    activation: str | None = None

    @property
    def ln_width(self) -> int:
        return self.c_in if self.ln == "pre" else self.c_out

    def param_count(self) -> int:
        n = self.taps * self.c_in * self.c_out + self.c_out
        if self.ln is not None:
            n += 2 * self.ln_width
        return n


def _trunk_width(spec: ModelSpec) -> int:
    return spec.d_f if spec.family == "tcn-bc" else spec.d_model


def plan_units(spec: ModelSpec) -> list[UnitPlan]:
    """Units in forward order; this order is also the serialization order."""
    conv = lambda name, ci, co, taps, d: UnitPlan(
        "conv", name, ci, co, taps=taps, dilation=d, ln="pre")
    units = []
    width = spec.d_f if spec.family == "densenet" else _trunk_width(spec)
    units.append(UnitPlan("fc", "input", spec.n_bins, width, ln="post"))
    for n in range(1, spec.n_blocks + 1):
        d = dilation_for_block(n, spec.max_dilation)
        tag = f"block{n}"
        if spec.family == "mb-tcn":
            for b in range(1, spec.n_branches + 1):
                units.append(conv(f"{tag}.branch{b}.compress", spec.d_model, spec.d_f, 1, 1))
                units.append(conv(f"{tag}.branch{b}.dilated", spec.d_f, spec.d_f, spec.kernel, d))
            units.append(conv(f"{tag}.fuse", spec.n_branches * spec.d_f, spec.d_model, 1, 1))
        elif spec.family == "tcn-bc":
            units.append(conv(f"{tag}.conv1", spec.d_f, spec.d_f, spec.kernel, d))
            units.append(conv(f"{tag}.conv2", spec.d_f, spec.d_f, spec.kernel, d))
        elif spec.family == "tcn-bk":
            units.append(conv(f"{tag}.down", spec.d_model, spec.d_f, 1, 1))
            units.append(conv(f"{tag}.dilated", spec.d_f, spec.d_f, spec.kernel, d))
            units.append(conv(f"{tag}.up", spec.d_f, spec.d_model, 1, 1))
        else:  # densenet
            for i in range(4):
                units.append(conv(f"{tag}.conv{i + 1}", width + i * spec.d_f,
                                  spec.d_f, spec.kernel, d))
            width += 4 * spec.d_f
    units.append(UnitPlan("fc", "output", width, spec.n_bins, activation="sigmoid"))
    return units


def count_params(spec: ModelSpec) -> int:
    """Scalar parameter count, biases and layer-norm affine terms included."""
    return sum(u.param_count() for u in plan_units(spec))


@dataclass
class UnitParams:
    plan: UnitPlan
    w: Tensor
    b: Tensor
    ln_gain: Tensor | None = None
    ln_bias: Tensor | None = None

    def arrays(self):
        """Parameter arrays in serialization order: w, b, ln gain, ln bias."""
        out = [self.w, self.b]
        if self.plan.ln is not None:
            out += [self.ln_gain, self.ln_bias]
        return out


@dataclass
class ModelParams:
    spec: ModelSpec
    units: list[UnitParams]
    stats: XiMapStats | None = None

    def parameters(self) -> list[Tensor]:
        return [t for u in self.units for t in u.arrays()]

    def zero_grad(self):
        for t in self.parameters():
            t.zero_grad()


def build(spec: ModelSpec, seed: int, dtype=np.float32) -> ModelParams:
    """Materialize a network: Glorot-uniform weights, zero biases, unit LN gains.

    The RNG is consumed in plan order, so a given (spec, seed, dtype) always
    produces bit-identical parameters.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    units = []
    for plan in plan_units(spec):
        fan_in = plan.taps * plan.c_in
        fan_out = plan.taps * plan.c_out
        limit = math.sqrt(6.0 / (fan_in + fan_out))
        shape = (plan.c_in, plan.c_out) if plan.kind == "fc" else \
            (plan.taps, plan.c_in, plan.c_out)
        w = Tensor(rng.uniform(-limit, limit, shape).astype(dtype), requires_grad=True)
        b = Tensor(np.zeros(plan.c_out, dtype=dtype), requires_grad=True)
        unit = UnitParams(plan, w, b)
        if plan.ln is not None:
            unit.ln_gain = Tensor(np.ones(plan.ln_width, dtype=dtype), requires_grad=True)
            unit.ln_bias = Tensor(np.zeros(plan.ln_width, dtype=dtype), requires_grad=True)
        units.append(unit)
    return ModelParams(spec, units)


def _apply(unit: UnitParams, x: Tensor) -> Tensor:
    plan = unit.plan
    if plan.ln == "pre":
        x = engine.relu(engine.layer_norm(x, unit.ln_gain, unit.ln_bias))
    if plan.kind == "fc":
        x = engine.fully_connected(x, unit.w, unit.b)
    else:
        x = engine.conv1d_causal(x, unit.w, unit.b, plan.dilation)
    if plan.ln == "post":
        x = engine.relu(engine.layer_norm(x, unit.ln_gain, unit.ln_bias))
    if plan.activation == "sigmoid":
        x = engine.sigmoid(x)
    return x


def forward(params: ModelParams, noisy_mag) -> Tensor:
    """Map (frames, 257) noisy magnitudes to (frames, 257) mapped-SNR estimates."""
    spec = params.spec
    if isinstance(noisy_mag, Tensor):
        x = noisy_mag
    else:
        x = Tensor(np.asarray(noisy_mag))
    if x.data.ndim != 2 or x.data.shape[1] != spec.n_bins:
        raise ValueError(f"expected (frames, {spec.n_bins}) magnitudes")
    if np.any(x.data < 0):
        raise ValueError("magnitudes must be non-negative")
    dtype = params.units[0].w.data.dtype
    if x.data.dtype != dtype:
        x = Tensor(x.data.astype(dtype), x.requires_grad)

    units = iter(params.units)
    x = _apply(next(units), x)
    for n in range(spec.n_blocks):
        if spec.family == "mb-tcn":
            branches = []
            for _ in range(spec.n_branches):
                h = _apply(next(units), x)
                branches.append(_apply(next(units), h))
            fused = _apply(next(units), engine.concat(branches))
            x = engine.add(x, fused)
        elif spec.family == "tcn-bc":
            h = _apply(next(units), x)
            h = _apply(next(units), h)
            x = engine.add(x, h)
        elif spec.family == "tcn-bk":
            h = _apply(next(units), x)
            h = _apply(next(units), h)
            h = _apply(next(units), h)
            x = engine.add(x, h)
        else:  # densenet
            for _ in range(4):
                x = engine.concat([x, _apply(next(units), x)])
    return _apply(next(units), x)


def flatten_params(params: ModelParams) -> np.ndarray:
    """All parameters as one float32 vector in serialization order."""
    return np.concatenate(
        [t.data.astype(np.float32, copy=False).ravel() for t in params.parameters()])


def load_flat(params: ModelParams, flat: np.ndarray) -> ModelParams:
    """Write a flat vector back into the parameter tensors (inverse of flatten)."""
    flat = np.asarray(flat)
    expected = count_params(params.spec)
    if flat.ndim != 1 or flat.size != expected:
        raise ValueError(f"expected {expected} parameters, got {flat.size}")
    pos = 0
    for t in params.parameters():
        n = t.data.size
        t.data = flat[pos: pos + n].reshape(t.data.shape).astype(t.data.dtype)
        pos += n
    return params


def with_stats(params: ModelParams, stats: XiMapStats) -> ModelParams:
    if stats.n_bins != params.spec.n_bins:
        raise ValueError("stats bin count does not match the model")
    params.stats = stats
    return params
