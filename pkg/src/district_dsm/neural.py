"""Dense network kernel: forward/backward passes, Adam, and the tanh-squashed
Gaussian head used by the SAC actor.

Parameters are plain lists of numpy arrays ``[W1, b1, W2, b2, ...]`` with
``W`` shaped ``(fan_in, fan_out)`` so a batch ``x`` of shape ``(n, fan_in)``
maps through ``x @ W + b``. Hidden layers use ReLU, the output layer is
linear.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
SQUASH_EPS = 1e-6
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)

CHECKPOINT_MAGIC = b"DSMNN"
CHECKPOINT_VERSION = 1


class ShapeMismatch(ValueError):
    pass


def init_mlp(sizes, rng, dtype=np.float64):
    """Create layer weights for ``sizes = [in, h1, ..., out]``.

    Weights and biases are uniform in ``±1/sqrt(fan_in)``.
    """
    if len(sizes) < 2:
        raise ShapeMismatch("an MLP needs at least an input and an output size")
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        params.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)).astype(dtype))
        params.append(rng.uniform(-bound, bound, size=fan_out).astype(dtype))
    return params


def layer_sizes(params):
    sizes = [params[0].shape[0]]
    for w in params[0::2]:
        sizes.append(w.shape[1])
    return sizes


def check_params(params):
    if len(params) % 2:
        raise ShapeMismatch("parameter list must alternate weights and biases")
    prev = None
    for w, b in zip(params[0::2], params[1::2]):
        if w.ndim != 2 or b.shape != (w.shape[1],):
            raise ShapeMismatch(f"bad layer shapes {w.shape} / {b.shape}")
        if prev is not None and w.shape[0] != prev:
            raise ShapeMismatch(f"layer input {w.shape[0]} does not chain with previous output {prev}")
        prev = w.shape[1]


def forward(params, x):
    """Evaluate the network on ``x`` (a vector or a batch of row vectors).

    Returns ``(output, cache)``; ``cache`` holds the layer inputs and the
    hidden pre-activations needed by :func:`backward`.
    """
    x = np.asarray(x, dtype=params[0].dtype)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[1] != params[0].shape[0]:
        raise ShapeMismatch(f"input has {h.shape[1]} features, network expects {params[0].shape[0]}")
    inputs = []
    pre = []
    n_layers = len(params) // 2
    for i in range(n_layers):
        w, b = params[2 * i], params[2 * i + 1]
        inputs.append(h)
        z = h @ w
        z += b
        if i < n_layers - 1:
            pre.append(z)
            h = np.maximum(z, 0.0)
        else:
            h = z
    out = h[0] if single else h
    return out, (inputs, pre, single)


def backward(params, cache, grad_output, need_input_grad=False, need_param_grads=True):
    """Reverse-mode gradients of a forward pass.

    ``grad_output`` is dL/d(output) with the output's shape. Batch gradients
    are summed over rows. Returns the parameter gradient list, or
    ``(grads, grad_input)`` when ``need_input_grad`` is set. With
    ``need_param_grads=False`` only the input gradient is computed.
    """
    inputs, pre, single = cache
    g = np.asarray(grad_output, dtype=params[0].dtype)
    if single:
        g = g[None, :]
    n_layers = len(params) // 2
    if g.shape != (inputs[0].shape[0], params[-1].shape[0]):
        raise ShapeMismatch(f"output gradient shape {g.shape} does not match the forward pass")
    grads = [None] * len(params)
    for i in range(n_layers - 1, -1, -1):
        if need_param_grads:
            grads[2 * i] = inputs[i].T @ g
            grads[2 * i + 1] = g.sum(axis=0)
        if i > 0 or need_input_grad:
            g = g @ params[2 * i].T
            if i > 0:
                g *= pre[i - 1] > 0
    if need_input_grad:
        return grads, (g[0] if single else g)
    return grads


@dataclass
class AdamState:
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, learning_rate, **kwargs):
        return cls(
            learning_rate=learning_rate,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            **kwargs,
        )


def adam_step(params, grads, state):
    """Apply one bias-corrected Adam update to ``params`` in place."""
    if len(grads) != len(params) or len(state.m) != len(params):
        raise ShapeMismatch("gradient/optimizer state does not match parameters")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    step_size = state.learning_rate * np.sqrt(c2) / c1
    # eps is applied to the bias-corrected second moment
    eps = state.epsilon * np.sqrt(c2)
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= step_size * m / (np.sqrt(v) + eps)
    return params, state


def soft_update(target, source, tau):
    """Polyak averaging ``target <- tau*source + (1-tau)*target`` in place."""
    for t, s in zip(target, source):
        t *= 1.0 - tau
        t += tau * s


def squashed_gaussian_sample(mean, log_std, noise):
    """Reparameterized tanh-Gaussian sample.

    Returns ``(action, log_prob)`` where ``log_prob`` sums over the last
    axis and includes the tanh change-of-variables correction.
    """
    log_std = np.clip(log_std, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    u = mean + std * noise
    action = np.tanh(u)
    log_normal = -0.5 * noise**2 - log_std - _LOG_SQRT_2PI
    log_prob = np.sum(log_normal - np.log(1.0 - action**2 + SQUASH_EPS), axis=-1)
    return action, log_prob


def squashed_gaussian_backward(raw_log_std, log_std_clipped, noise, action, grad_action, grad_log_prob):
    """Push gradients w.r.t. ``action`` and ``log_prob`` back onto the head.

    ``grad_log_prob`` is dL/dlog_prob, one value per row. Returns
    ``(d_mean, d_raw_log_std)``; the log-std gradient is zero where the
    clamp is active.
    """
    std = np.exp(log_std_clipped)
    one_minus_a2 = 1.0 - action**2
    glp = np.asarray(grad_log_prob)[..., None]
    # d log_prob / du from the -log(1 - tanh^2 + eps) term
    dlp_du = 2.0 * action * one_minus_a2 / (one_minus_a2 + SQUASH_EPS)
    d_u = grad_action * one_minus_a2 + glp * dlp_du
    d_mean = d_u
    d_log_std = d_u * std * noise - glp
    inside = (raw_log_std >= LOG_STD_MIN) & (raw_log_std <= LOG_STD_MAX)
    return d_mean, d_log_std * inside


def save_arrays(path, arrays):
    """Write arrays in the versioned weights format.

    Layout: magic, uint32 version, uint32 count, then per array a dtype
    code (``f4``/``f8``), uint32 ndim and uint32 dims; then the row-major
    little-endian payloads in the same order.
    """
    path = Path(path)
    header = [CHECKPOINT_MAGIC, struct.pack("<II", CHECKPOINT_VERSION, len(arrays))]
    payload = []
    for a in arrays:
        a = np.asarray(a)
        if a.dtype not in (np.float32, np.float64):
            a = a.astype(np.float64)
        code = b"f4" if a.dtype == np.float32 else b"f8"
        header.append(code + struct.pack("<I", a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape))
        payload.append(np.ascontiguousarray(a, dtype=a.dtype.newbyteorder("<")).tobytes())
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(b"".join(header + payload))
    tmp.replace(path)


def load_arrays(path):
    data = Path(path).read_bytes()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path}: not a weights file")
    pos = len(CHECKPOINT_MAGIC)
    version, count = struct.unpack_from("<II", data, pos)
    pos += 8
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported weights version {version}")
    specs = []
    for _ in range(count):
        code = data[pos : pos + 2]
        (ndim,) = struct.unpack_from("<I", data, pos + 2)
        shape = struct.unpack_from(f"<{ndim}I", data, pos + 6)
        pos += 6 + 4 * ndim
        specs.append((np.dtype("<f4") if code == b"f4" else np.dtype("<f8"), shape))
    arrays = []
    for dtype, shape in specs:
        n = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        arr = np.frombuffer(data, dtype=dtype, count=n // dtype.itemsize, offset=pos).reshape(shape)
        arrays.append(arr.astype(dtype.newbyteorder("=")))
        pos += n
    return arrays
