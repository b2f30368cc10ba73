"""Spectral convolution for operator networks.

The spectral convolution truncates the 2-d DFT of its input to a small
block of low-frequency modes, applies a learned per-mode channel mixing,
and inverse-transforms back to the grid.  Because weights live on modes
rather than grid nodes, the same weights evaluate at any resolution,
which is what makes super-resolution inference possible.

Retained modes and weight storage
---------------------------------

For mode counts ``(m1, m2)`` the layer retains wavenumbers
``k1 in (-m1, m1)`` and ``k2 in [0, m2)``; the ``k2 < 0`` half-plane is
reconstructed by conjugate symmetry so the output is real by
construction.  Nyquist rows and columns are never retained.  Weights are
stored as a real array of shape ``(2*m1 - 1, m2, d_in, d_out, 2)`` with a
trailing real/imaginary axis; storage row ``r`` holds wavenumber
``k1 = r`` for ``r < m1`` and ``k1 = r - (2*m1 - 1)`` for the rest,
mirroring FFT frequency ordering.

On the ``k2 = 0`` column the pair ``(k1, 0)`` and ``(-k1, 0)`` must be
complex conjugates for a real output, so the forward symmetrizes the
mixed coefficients across that pair.  The imaginary part of the DC
weight ``(k1=0, k2=0)`` consequently never influences the output; its
gradient is identically zero.

The backward pass is derived analytically rather than by taping the FFT:
with ``N = n1*n2`` grid nodes, the gradient of the loss with respect to
a retained mixed coefficient ``G[k]`` is ``(2/N) * Gbar[k]`` off the
``k2 = 0`` column and ``(1/N) * Gbar[k]`` on it, where ``Gbar`` is the
forward DFT of the incoming grid gradient.  The factor two accounts for
the conjugate copy in the ``k2 < 0`` half-plane; on the shared column
the symmetrization halves each of the two contributions.  Weight and
input gradients then follow by the chain rule through the per-mode
linear map, and the input gradient returns to the grid through one
inverse FFT.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor, _accumulate, _as_tensor

__all__ = ["fft2", "ifft2", "spectral_conv", "mode_index_rows", "spectral_weight_shape"]


def fft2(values: np.ndarray) -> np.ndarray:
    """Forward 2-d DFT over the first two axes, unnormalized."""
    return np.fft.fftn(values, axes=(0, 1), norm="backward")


def ifft2(values: np.ndarray) -> np.ndarray:
    """Inverse 2-d DFT over the first two axes, with the 1/N factor."""
    return np.fft.ifftn(values, axes=(0, 1), norm="backward")


def spectral_weight_shape(modes1: int, modes2: int, d_in: int, d_out: int) -> tuple:
    return (2 * modes1 - 1, modes2, d_in, d_out, 2)


def mode_index_rows(modes1: int, n1: int) -> np.ndarray:
    """FFT row index for each weight storage row."""
    k1 = np.concatenate([np.arange(modes1), np.arange(-(modes1 - 1), 0)])
    return k1 % n1


def _check_modes(modes1: int, modes2: int, n1: int, n2: int) -> None:
    if modes1 < 1 or modes2 < 1:
        raise ValueError("mode counts must be positive")
    if modes1 > n1 // 2 or modes2 > n2 // 2:
        raise ValueError(
            f"modes ({modes1}, {modes2}) exceed resolution ({n1}, {n2}); "
            f"need modes <= floor(resolution / 2)"
        )


def spectral_conv(x, weight, modes1: int, modes2: int) -> Tensor:
    """Apply a truncated-spectrum channel mixing to ``x``.

    ``x`` is ``(n1, n2, d_in)`` real, ``weight`` is the real storage
    described in the module docstring, and the result is
    ``(n1, n2, d_out)`` real.
    """
    x, weight = _as_tensor(x), _as_tensor(weight)
    xd = x.data
    if xd.ndim != 3:
        raise ValueError("spectral_conv input must be (n1, n2, channels)")
    n1, n2, d_in = xd.shape
    _check_modes(modes1, modes2, n1, n2)
    expected = spectral_weight_shape(modes1, modes2, d_in, weight.data.shape[3])
    if weight.data.shape != expected:
        raise ValueError(f"weight shape {weight.data.shape} does not match {expected}")
    d_out = weight.data.shape[3]

    rows = mode_index_rows(modes1, n1)
    neg = (-rows) % n1  # FFT row of the opposite wavenumber
    cols = np.arange(modes2)

    cdtype = np.result_type(xd.dtype, np.complex64)
    w_c = (weight.data[..., 0] + 1j * weight.data[..., 1]).astype(cdtype, copy=False)
    spectrum = fft2(xd)
    f_m = spectrum[rows[:, None], cols[None, :]]  # (2*m1-1, m2, d_in)
    mixed = np.einsum("rmc,rmco->rmo", f_m, w_c)

    full = np.zeros((n1, n2, d_out), dtype=cdtype)
    if modes2 > 1:
        full[rows[:, None], cols[None, 1:]] = mixed[:, 1:]
        full[neg[:, None], (n2 - cols[1:])[None, :]] = np.conj(mixed[:, 1:])
    # conjugate-pair the zero column so the inverse transform is real
    order = np.concatenate([[0], np.arange(2 * modes1 - 2, 0, -1)])  # storage row of -k1
    full[rows, 0] = 0.5 * (mixed[:, 0] + np.conj(mixed[order, 0]))
    out_data = ifft2(full).real

    out = Tensor(out_data, parents=(x, weight))
    n_total = n1 * n2

    def backward(grad):
        g_hat = fft2(grad)
        g_m = g_hat[rows[:, None], cols[None, :]]  # (2*m1-1, m2, d_out)
        scale = np.where(cols == 0, 1.0 / n_total, 2.0 / n_total)[None, :, None]
        grad_mixed = scale * g_m
        grad_w_c = np.einsum("rmc,rmo->rmco", np.conj(f_m), grad_mixed)
        grad_w = np.stack([grad_w_c.real, grad_w_c.imag], axis=-1)
        g_f = np.einsum("rmo,rmco->rmc", grad_mixed, np.conj(w_c))
        g_full = np.zeros((n1, n2, d_in), dtype=cdtype)
        g_full[rows[:, None], cols[None, :]] = g_f
        grad_x = n_total * ifft2(g_full).real
        _accumulate(x, grad_x)
        _accumulate(weight, grad_w)

    out.backward_fn = backward
    return out
