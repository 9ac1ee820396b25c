"""Minimal reverse-mode autodiff over numpy arrays.

Activations are (frames, channels) arrays.  Ops record their parents and a
backward closure on the output tensor; backward() walks the graph once in
reverse topological order and accumulates gradients into .grad of every
tensor that requires them.  Gradients are exact (no approximations), dtype
follows the inputs: float32 for training and inference, float64 for
gradient checking.

Everything is sequential and deterministic: identical inputs give
bit-identical outputs.  Causality is structural; frame l of a causal op
never reads frames beyond l.
"""

import numpy as np

LN_EPS = 1e-5
BCE_CLAMP = 1e-7

_grad_enabled = True
_nan_checks = False


class no_grad:
    """Context manager: skip graph recording inside the block."""

    def __enter__(self):
        global _grad_enabled
        self._saved = _grad_enabled
        _grad_enabled = False

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._saved
        return False


def nan_checks(enabled: bool):
    """Toggle finiteness assertions after every op (off by default)."""
    global _nan_checks
    _nan_checks = bool(enabled)


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward_fn")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data)
        self.requires_grad = requires_grad
        self.grad = None
        self._parents = ()
        self._backward_fn = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _node(data, parents, backward_fn):
    if _nan_checks and not np.all(np.isfinite(data)):
        raise FloatingPointError("non-finite value produced by an op")
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError("add requires equal shapes")
    return _node(a.data + b.data, (a, b), lambda g: (g, g))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _node(a.data * c, (a,), lambda g: (g * c,))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError("mul requires equal shapes")
    return _node(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def reduce_sum(x: Tensor) -> Tensor:
    """Sum every element down to a scalar."""
    def bw(g):
        return (np.full_like(x.data, float(g)),)
    return _node(np.asarray(x.data.sum(), dtype=x.data.dtype), (x,), bw)


def concat(parts: list[Tensor]) -> Tensor:
    """Concatenate along the channel axis."""
    if not parts:
        raise ValueError("concat needs at least one tensor")
    widths = [p.data.shape[1] for p in parts]
    data = np.concatenate([p.data for p in parts], axis=1)
    splits = np.cumsum(widths)[:-1]

    def bw(g):
        return tuple(np.split(g, splits, axis=1))

    return _node(data, tuple(parts), bw)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return _node(np.where(mask, x.data, 0), (x,), lambda g: (g * mask,))


def sigmoid(x: Tensor) -> Tensor:
    d = x.data
    with np.errstate(over="ignore", under="ignore"):
        s = np.where(d >= 0, 1.0 / (1.0 + np.exp(-np.abs(d))),
                     np.exp(-np.abs(d)) / (1.0 + np.exp(-np.abs(d))))
    s = s.astype(d.dtype, copy=False)
    return _node(s, (x,), lambda g: (g * s * (1.0 - s),))


def fully_connected(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """Per-frame affine map: (L, Cin) @ (Cin, Cout) + bias."""
    if x.data.ndim != 2 or w.data.ndim != 2 or x.data.shape[1] != w.data.shape[0]:
        raise ValueError("fully_connected shape mismatch")
    y = x.data @ w.data
    if b is not None:
        y = y + b.data

    def bw(g):
        gb = g.sum(axis=0) if b is not None else None
        return (g @ w.data.T, x.data.T @ g) + ((gb,) if b is not None else ())

    parents = (x, w) if b is None else (x, w, b)
    return _node(y, parents, bw)


def conv1d_causal(x: Tensor, w: Tensor, b: Tensor | None, dilation: int) -> Tensor:
    """Dilated causal convolution along frames.

    Weights are (W, Cin, Cout); tap t reads frame l - dilation*t, so tap 0 is
    the current frame and the highest tap the oldest.  Left zero-padding of
    (W-1)*dilation frames keeps the output aligned and strictly causal.
    """
    if not isinstance(dilation, int) or dilation < 1:
        raise ValueError("dilation must be a positive integer")
    if w.data.ndim != 3:
        raise ValueError("conv weights are (taps, Cin, Cout)")
    taps, c_in, c_out = w.data.shape
    if taps < 1 or x.data.ndim != 2 or x.data.shape[1] != c_in:
        raise ValueError("conv1d_causal shape mismatch")
    frames = x.data.shape[0]
    pad = (taps - 1) * dilation
    xp = np.zeros((frames + pad, c_in), dtype=x.data.dtype)
    xp[pad:] = x.data

    y = np.zeros((frames, c_out), dtype=x.data.dtype)
    for t in range(taps):
        start = pad - dilation * t
        y += xp[start: start + frames] @ w.data[t]
    if b is not None:
        y = y + b.data

    def bw(g):
        gw = np.empty_like(w.data)
        gxp = np.zeros_like(xp)
        for t in range(taps):
            start = pad - dilation * t
            gw[t] = xp[start: start + frames].T @ g
            gxp[start: start + frames] += g @ w.data[t].T
        out = (gxp[pad:], gw)
        if b is not None:
            out += (g.sum(axis=0),)
        return out

    parents = (x, w) if b is None else (x, w, b)
    return _node(y, parents, bw)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = LN_EPS) -> Tensor:
    """Normalize each frame across channels, then apply the affine terms."""
    if x.data.ndim != 2:
        raise ValueError("layer_norm input is (frames, channels)")
    c = x.data.shape[1]
    if gain.data.shape != (c,) or bias.data.shape != (c,):
        raise ValueError("layer_norm affine shape mismatch")
    mu = x.data.mean(axis=1, keepdims=True)
    var = x.data.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    y = xhat * gain.data + bias.data

    def bw(g):
        gg = (g * xhat).sum(axis=0)
        gb = g.sum(axis=0)
        gh = g * gain.data
        gx = inv * (gh - gh.mean(axis=1, keepdims=True)
                    - xhat * (gh * xhat).mean(axis=1, keepdims=True))
        return gx.astype(x.data.dtype, copy=False), gg, gb

    return _node(y.astype(x.data.dtype, copy=False), (x, gain, bias), bw)


def bce_masked(pred: Tensor, target: np.ndarray,
               frame_mask: np.ndarray | None = None) -> Tensor:
    """Mean binary cross-entropy over valid frames and all bins.

    Predictions are clamped to [BCE_CLAMP, 1-BCE_CLAMP] before the logs;
    the clamp passes no gradient outside its range.  frame_mask marks the
    frames that count (None means all of them).
    """
    target = np.asarray(target, dtype=pred.data.dtype)
    if target.shape != pred.data.shape:
        raise ValueError("prediction/target shape mismatch")
    if np.any(target < 0) or np.any(target > 1):
        raise ValueError("targets must lie in [0, 1]")
    frames, bins = pred.data.shape
    if frame_mask is None:
        frame_mask = np.ones(frames, dtype=bool)
    frame_mask = np.asarray(frame_mask, dtype=bool)
    if frame_mask.shape != (frames,):
        raise ValueError("frame_mask must be one flag per frame")
    n_valid = int(frame_mask.sum()) * bins
    if n_valid == 0:
        raise ValueError("no valid frames in the mask")

    p = np.clip(pred.data, BCE_CLAMP, 1.0 - BCE_CLAMP)
    inside = (pred.data > BCE_CLAMP) & (pred.data < 1.0 - BCE_CLAMP)
    elem = -(target * np.log(p) + (1.0 - target) * np.log1p(-p))
    loss = (elem * frame_mask[:, None]).sum() / n_valid

    def bw(g):
        gp = g * frame_mask[:, None] * inside * (p - target) / (p * (1.0 - p)) / n_valid
        return (gp.astype(pred.data.dtype, copy=False),)

    return _node(np.asarray(loss, dtype=pred.data.dtype), (pred,), bw)


def backward(loss: Tensor):
    """Populate .grad for every requires_grad tensor reachable from loss."""
    if loss.data.size != 1:
        raise ValueError("backward starts from a scalar loss")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))

    flowing = {id(loss): np.ones_like(loss.data)}
    for node in reversed(topo):
        g = flowing.pop(id(node), None)
        if g is None:
            continue
        if _nan_checks and not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
        if node.requires_grad:
            node.grad = g if node.grad is None else node.grad + g
        if node._backward_fn is None:
            continue
        for parent, pg in zip(node._parents, node._backward_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            if id(parent) in flowing:
                flowing[id(parent)] = flowing[id(parent)] + pg
            else:
                flowing[id(parent)] = pg
