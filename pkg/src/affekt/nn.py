"""From-scratch CNN on feature matrices: forward pass and exact gradients.

Architecture: the (channels x bins) matrix enters as a one-channel image and
passes through a stack of blocks, each 3x3 convolution (zero padding 1,
stride 1 or 2) -> bias -> ReLU -> optional residual addition of the block
input. A global average pool feeds a dense layer and softmax. Residual blocks
require stride 1 and matching widths, so a zero-initialized residual block is
exactly the identity.

Everything is float64 numpy. backward() returns analytic gradients of the
batch-mean cross-entropy; tests hold them to central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteActivation, NonFiniteGradient, ShapeMismatch

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class BlockSpec:
    out_width: int
    stride: int = 1
    residual: bool = False

    def __post_init__(self) -> None:
        if self.out_width < 1:
            raise ShapeMismatch(f"block width must be >= 1, got {self.out_width}")
        if self.stride not in (1, 2):
            raise ShapeMismatch(f"stride must be 1 or 2, got {self.stride}")
        if self.residual and self.stride != 1:
            raise ShapeMismatch("residual blocks require stride 1")


@dataclass(frozen=True)
class CnnConfig:
    input_channels: int
    input_bins: int
    blocks: tuple[BlockSpec, ...]
    n_classes: int
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "blocks",
            tuple(b if isinstance(b, BlockSpec) else BlockSpec(**b) for b in self.blocks),
        )
        if self.input_channels < 1 or self.input_bins < 1:
            raise ShapeMismatch("input dimensions must be >= 1")
        if self.n_classes < 2:
            raise ShapeMismatch(f"need at least 2 classes, got {self.n_classes}")
        width = 1
        for idx, block in enumerate(self.blocks):
            if block.residual and block.out_width != width:
                raise ShapeMismatch(
                    f"block {idx}: residual requires in_width == out_width "
                    f"({width} != {block.out_width})"
                )
            width = block.out_width

    @property
    def dense_in_width(self) -> int:
        return self.blocks[-1].out_width if self.blocks else 1


def init_params(cfg: CnnConfig) -> dict[str, np.ndarray]:
    """Kaiming-uniform fan-in weights, zero biases, fixed draw order."""
    rng = np.random.default_rng(cfg.seed)
    params: dict[str, np.ndarray] = {}
    width = 1
    for idx, block in enumerate(cfg.blocks):
        fan_in = width * 9
        bound = math.sqrt(6.0 / fan_in)
        params[f"conv{idx}.w"] = rng.uniform(-bound, bound, size=(block.out_width, width, 3, 3))
        params[f"conv{idx}.b"] = np.zeros(block.out_width)
        width = block.out_width
    bound = math.sqrt(6.0 / width)
    params["dense.w"] = rng.uniform(-bound, bound, size=(width, cfg.n_classes))
    params["dense.b"] = np.zeros(cfg.n_classes)
    return params


def _im2col(x: np.ndarray, stride: int):
    b, c, h, w = x.shape
    ho = (h + 2 - 3) // stride + 1
    wo = (w + 2 - 3) // stride + 1
    xp = np.zeros((b, c, h + 2, w + 2), dtype=x.dtype)
    xp[:, :, 1:h + 1, 1:w + 1] = x
    cols = np.empty((b, c, 3, 3, ho, wo), dtype=x.dtype)
    for u in range(3):
        for v in range(3):
            cols[:, :, u, v] = xp[:, :, u:u + stride * (ho - 1) + 1:stride,
                                  v:v + stride * (wo - 1) + 1:stride]
    return cols.reshape(b, c * 9, ho * wo), ho, wo


def _col2im(dcols: np.ndarray, x_shape, stride: int, ho: int, wo: int) -> np.ndarray:
    b, c, h, w = x_shape
    dxp = np.zeros((b, c, h + 2, w + 2), dtype=dcols.dtype)
    d6 = dcols.reshape(b, c, 3, 3, ho, wo)
    for u in range(3):
        for v in range(3):
            dxp[:, :, u:u + stride * (ho - 1) + 1:stride,
                v:v + stride * (wo - 1) + 1:stride] += d6[:, :, u, v]
    return dxp[:, :, 1:h + 1, 1:w + 1]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, onehot: np.ndarray) -> float:
    """Batch mean of -sum(y * log p), probabilities floored at 1e-12."""
    if probs.shape != onehot.shape:
        raise ShapeMismatch(f"probs {probs.shape} vs targets {onehot.shape}")
    logp = np.log(np.maximum(probs, PROB_FLOOR))
    return float(-(onehot * logp).sum(axis=1).mean())


def _as_images(cfg: CnnConfig, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3 or x.shape[1] != cfg.input_channels or x.shape[2] != cfg.input_bins:
        raise ShapeMismatch(
            f"expected (batch, {cfg.input_channels}, {cfg.input_bins}), got {x.shape}"
        )
    return x[:, None, :, :]


def forward_with_cache(params: dict, cfg: CnnConfig, x: np.ndarray):
    a = _as_images(cfg, x)
    cache = []
    for idx, block in enumerate(cfg.blocks):
        w = params[f"conv{idx}.w"]
        bias = params[f"conv{idx}.b"]
        cols, ho, wo = _im2col(a, block.stride)
        wmat = w.reshape(block.out_width, -1)
        pre = np.einsum("ok,bkp->bop", wmat, cols).reshape(a.shape[0], block.out_width, ho, wo)
        pre += bias[None, :, None, None]
        act = np.maximum(pre, 0.0)
        out = act + a if block.residual else act
        cache.append((a, cols, pre, ho, wo))
        a = out
    pooled = a.mean(axis=(2, 3))
    logits = pooled @ params["dense.w"] + params["dense.b"]
    probs = softmax(logits)
    if not np.all(np.isfinite(probs)):
        raise NonFiniteActivation("softmax output contains NaN or inf")
    return probs, (cache, a, pooled)


def forward(params: dict, cfg: CnnConfig, x: np.ndarray) -> np.ndarray:
    """Class probabilities, one row per sample."""
    probs, _ = forward_with_cache(params, cfg, x)
    return probs


def backward(params: dict, cfg: CnnConfig, x: np.ndarray, onehot: np.ndarray):
    """Loss and exact gradients of batch-mean cross-entropy for every tensor."""
    probs, (cache, last, pooled) = forward_with_cache(params, cfg, x)
    n = x.shape[0]
    loss = cross_entropy(probs, onehot)
    grads: dict[str, np.ndarray] = {}

    dlogits = (probs - onehot) / n
    grads["dense.w"] = pooled.T @ dlogits
    grads["dense.b"] = dlogits.sum(axis=0)
    dpooled = dlogits @ params["dense.w"].T
    _, _, hh, ww = last.shape
    da = np.broadcast_to(dpooled[:, :, None, None], last.shape) / (hh * ww)
    da = np.ascontiguousarray(da)

    for idx in range(len(cfg.blocks) - 1, -1, -1):
        block = cfg.blocks[idx]
        a_in, cols, pre, ho, wo = cache[idx]
        dact = da
        dpre = dact * (pre > 0.0)
        dpre_mat = dpre.reshape(dpre.shape[0], block.out_width, ho * wo)
        wmat = params[f"conv{idx}.w"].reshape(block.out_width, -1)
        grads[f"conv{idx}.w"] = np.einsum("bop,bkp->ok", dpre_mat, cols).reshape(
            params[f"conv{idx}.w"].shape
        )
        grads[f"conv{idx}.b"] = dpre.sum(axis=(0, 2, 3))
        dcols = np.einsum("ok,bop->bkp", wmat, dpre_mat)
        dx = _col2im(dcols, a_in.shape, block.stride, ho, wo)
        if block.residual:
            dx += da
        da = dx

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(f"gradient for {name} contains NaN or inf")
    return loss, grads
