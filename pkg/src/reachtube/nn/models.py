"""Operator network architectures.

Two architectures map a stack of input channels on a grid to an output
field on the same grid:

* ``fno``: pointwise affine lift, then blocks of
  ``f <- gelu(W f + SpectralConv(f))``, then a pointwise two-layer MLP
  projection.  Weights live on Fourier modes, so one trained model
  evaluates at any grid resolution.
* ``tno``: pointwise affine lift, then transformer blocks built on
  Galerkin-style attention ``Q (LN(K)^T LN(V)) / n`` with a residual MLP,
  then an affine projection.  Attention mixes the ``d x d`` feature
  covariance rather than an ``n x n`` node-pair matrix, so cost is linear
  in node count and the model is likewise resolution-independent.

Parameters are held in an insertion-ordered dict of named tensors, which
fixes both the optimizer update order and the checkpoint serialization
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .fourier import spectral_conv, spectral_weight_shape
from .tensor import Tensor

__all__ = [
    "FNOConfig",
    "TNOConfig",
    "OperatorModel",
    "galerkin_attention",
]


@dataclass(frozen=True)
class FNOConfig:
    in_channels: int
    out_channels: int = 1
    width: int = 32
    modes1: int = 12
    modes2: int = 12
    n_blocks: int = 4

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "width", "modes1", "modes2", "n_blocks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class TNOConfig:
    in_channels: int
    out_channels: int = 1
    width: int = 64
    n_blocks: int = 4
    mlp_hidden: int = 128

    def __post_init__(self):
        for name in ("in_channels", "out_channels", "width", "n_blocks", "mlp_hidden"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def galerkin_attention(x, w_q, w_k, w_v, ln_params=None) -> Tensor:
    """Linear-complexity attention ``Q (LN(K)^T LN(V)) / n``.

    ``x`` is ``(n, d)``; the three projections are ``(d, d)``.  Keys and
    values are layer-normalized instead of the usual softmax, and the
    ``K^T V`` product is taken first, so the cost is ``O(n d^2)``.
    ``ln_params`` optionally supplies learned ``(gain_k, bias_k, gain_v,
    bias_v)``; defaults are unit gain and zero bias.
    """
    x = T._as_tensor(x)
    n, d = x.data.shape
    if ln_params is None:
        ones = Tensor(np.ones(d, dtype=x.data.dtype))
        zeros = Tensor(np.zeros(d, dtype=x.data.dtype))
        gain_k, bias_k, gain_v, bias_v = ones, zeros, ones, zeros
    else:
        gain_k, bias_k, gain_v, bias_v = ln_params
    q = T.matmul(x, w_q)
    k = T.layernorm(T.matmul(x, w_k), gain_k, bias_k)
    v = T.layernorm(T.matmul(x, w_v), gain_v, bias_v)
    kv = T.matmul(T.transpose(k), v)
    return T.mul(T.matmul(q, kv), 1.0 / n)


def _affine(x, w, b) -> Tensor:
    return T.add(T.matmul(x, w), b)


class OperatorModel:
    """A named-parameter container plus the forward pass for one architecture."""

    def __init__(self, arch: str, config, params: dict):
        if arch not in ("fno", "tno"):
            raise ValueError(f"unknown architecture {arch!r}")
        self.arch = arch
        self.config = config
        self.params = params

    # -- construction ---------------------------------------------------

    @classmethod
    def build(cls, arch: str, config, seed: int = 0, dtype=np.float32) -> "OperatorModel":
        rng = np.random.default_rng(seed)
        params: dict[str, Tensor] = {}

        def linear(name, d_in, d_out, bias=True):
            bound = 1.0 / np.sqrt(d_in)
            params[f"{name}.weight"] = Tensor(
                rng.uniform(-bound, bound, size=(d_in, d_out)).astype(dtype), name=f"{name}.weight"
            )
            if bias:
                params[f"{name}.bias"] = Tensor(np.zeros(d_out, dtype=dtype), name=f"{name}.bias")

        def norm(name, d):
            params[f"{name}.gain"] = Tensor(np.ones(d, dtype=dtype), name=f"{name}.gain")
            params[f"{name}.bias"] = Tensor(np.zeros(d, dtype=dtype), name=f"{name}.bias")

        if arch == "fno":
            if not isinstance(config, FNOConfig):
                raise ValueError("fno requires an FNOConfig")
            w = config.width
            linear("lift", config.in_channels, w)
            scale = 1.0 / (w * w)
            for i in range(config.n_blocks):
                shape = spectral_weight_shape(config.modes1, config.modes2, w, w)
                params[f"block{i}.spectral.weight"] = Tensor(
                    rng.uniform(0.0, scale, size=shape).astype(dtype),
                    name=f"block{i}.spectral.weight",
                )
                linear(f"block{i}.local", w, w)
            linear("proj1", w, 2 * w)
            linear("proj2", 2 * w, config.out_channels)
        else:
            if not isinstance(config, TNOConfig):
                raise ValueError("tno requires a TNOConfig")
            w = config.width
            linear("lift", config.in_channels, w)
            for i in range(config.n_blocks):
                for proj in ("query", "key", "value"):
                    linear(f"block{i}.{proj}", w, w, bias=False)
                norm(f"block{i}.norm_k", w)
                norm(f"block{i}.norm_v", w)
                linear(f"block{i}.mlp1", w, config.mlp_hidden)
                linear(f"block{i}.mlp2", config.mlp_hidden, w)
            linear("proj", w, config.out_channels)
        return cls(arch, config, params)

    # -- forward --------------------------------------------------------

    def forward(self, x: np.ndarray) -> Tensor:
        """Map ``(n1, n2, in_channels)`` to a ``(n1, n2, out_channels)`` tensor."""
        x = np.asarray(x)
        if x.ndim != 3 or x.shape[2] != self.config.in_channels:
            raise ValueError(
                f"expected input (n1, n2, {self.config.in_channels}), got {x.shape}"
            )
        if self.arch == "fno":
            return self._forward_fno(x)
        return self._forward_tno(x)

    def _forward_fno(self, x: np.ndarray) -> Tensor:
        cfg = self.config
        p = self.params
        n1, n2, _ = x.shape
        flat = Tensor(x.reshape(n1 * n2, cfg.in_channels))
        f = _affine(flat, p["lift.weight"], p["lift.bias"])
        f = T.reshape(f, (n1, n2, cfg.width))
        for i in range(cfg.n_blocks):
            spec = spectral_conv(f, p[f"block{i}.spectral.weight"], cfg.modes1, cfg.modes2)
            local = _affine(
                T.reshape(f, (n1 * n2, cfg.width)),
                p[f"block{i}.local.weight"],
                p[f"block{i}.local.bias"],
            )
            f = T.gelu(T.add(spec, T.reshape(local, (n1, n2, cfg.width))))
        f = T.reshape(f, (n1 * n2, cfg.width))
        f = T.gelu(_affine(f, p["proj1.weight"], p["proj1.bias"]))
        f = _affine(f, p["proj2.weight"], p["proj2.bias"])
        return T.reshape(f, (n1, n2, cfg.out_channels))

    def _forward_tno(self, x: np.ndarray) -> Tensor:
        cfg = self.config
        p = self.params
        n1, n2, _ = x.shape
        f = _affine(Tensor(x.reshape(n1 * n2, cfg.in_channels)), p["lift.weight"], p["lift.bias"])
        for i in range(cfg.n_blocks):
            attn = galerkin_attention(
                f,
                p[f"block{i}.query.weight"],
                p[f"block{i}.key.weight"],
                p[f"block{i}.value.weight"],
                ln_params=(
                    p[f"block{i}.norm_k.gain"],
                    p[f"block{i}.norm_k.bias"],
                    p[f"block{i}.norm_v.gain"],
                    p[f"block{i}.norm_v.bias"],
                ),
            )
            f = T.add(f, attn)
            h = T.gelu(_affine(f, p[f"block{i}.mlp1.weight"], p[f"block{i}.mlp1.bias"]))
            f = T.add(f, _affine(h, p[f"block{i}.mlp2.weight"], p[f"block{i}.mlp2.bias"]))
        f = _affine(f, p["proj.weight"], p["proj.bias"])
        return T.reshape(f, (n1, n2, cfg.out_channels))

    # -- conveniences ---------------------------------------------------

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x).data

    @property
    def param_count(self) -> int:
        return sum(t.data.size for t in self.params.values())

    def zero_grad(self) -> None:
        for t in self.params.values():
            t.grad = None
