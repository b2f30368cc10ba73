"""Spectral layer checks: DFT-matrix oracle, circular-convolution oracle, gradients."""

import numpy as np
import pytest

from reachtube.nn import tensor as T
from reachtube.nn.fourier import fft2, ifft2, spectral_conv, spectral_weight_shape


# --- oracles ----------------------------------------------------------------


def dft_matrix(n):
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return np.exp(-2j * np.pi * j * k / n)


def dft2_oracle(x):
    """O(n^2) direct double DFT over the first two axes."""
    n1, n2 = x.shape[:2]
    m1, m2 = dft_matrix(n1), dft_matrix(n2)
    return np.einsum("ja,ab...,kb->jk...", m1, x, m2)


def full_spectrum_from_weight(weight, modes1, modes2, n1, n2):
    """Independently expand stored weights to a full (n1, n2, d_in, d_out) spectrum.

    Places each stored mode at its FFT position, conjugate-completes the
    k2 < 0 half-plane, and symmetrizes the k2 = 0 column the way a real
    output requires.
    """
    d_in, d_out = weight.shape[2], weight.shape[3]
    w_c = weight[..., 0] + 1j * weight[..., 1]
    full = np.zeros((n1, n2, d_in, d_out), dtype=complex)
    k1_list = list(range(modes1)) + list(range(-(modes1 - 1), 0))
    for row, k1 in enumerate(k1_list):
        # the row holding -k1 in the same storage convention
        neg_row = k1_list.index(-k1)
        full[k1 % n1, 0] = 0.5 * (w_c[row, 0] + np.conj(w_c[neg_row, 0]))
        for k2 in range(1, modes2):
            full[k1 % n1, k2] = w_c[row, k2]
            full[(-k1) % n1, (n2 - k2) % n2] = np.conj(w_c[row, k2])
    return full


def circular_conv_oracle(x, weight, modes1, modes2):
    """Spatial-domain circular convolution with the kernel ifft2(R_full)."""
    n1, n2, d_in = x.shape
    full = full_spectrum_from_weight(weight, modes1, modes2, n1, n2)
    kernel = np.fft.ifftn(full, axes=(0, 1))  # (n1, n2, d_in, d_out)
    assert np.abs(kernel.imag).max() < 1e-10  # conjugate symmetry makes it real
    kernel = kernel.real
    d_out = kernel.shape[3]
    out = np.zeros((n1, n2, d_out))
    # unnormalized forward DFT: DFT(x circ h) = DFT(x) * DFT(h) with no extra factor
    for j1 in range(n1):
        for j2 in range(n2):
            for s1 in range(n1):
                for s2 in range(n2):
                    out[j1, j2] += x[s1, s2] @ kernel[(j1 - s1) % n1, (j2 - s2) % n2]
    return out


def numeric_grad(fn, array, eps=1e-6):
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + eps
        up = fn()
        flat[i] = saved - eps
        down = fn()
        flat[i] = saved
        grad.reshape(-1)[i] = (up - down) / (2.0 * eps)
    return grad


def rel_err(analytic, numeric):
    return np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-10)


# --- fft2 / ifft2 -----------------------------------------------------------


class TestFFT:
    def test_constant_field_is_pure_dc(self):
        x = np.full((8, 8, 1), 3.25)
        spectrum = fft2(x)
        assert abs(spectrum[0, 0, 0] - 64 * 3.25) < 1e-10
        spectrum[0, 0, 0] = 0.0
        assert np.abs(spectrum).max() < 1e-10

    def test_round_trip_random(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((16, 16, 3))
        assert np.abs(ifft2(fft2(x)) - x).max() < 1e-10

    def test_round_trip_all_sizes_4_to_128(self):
        rng = np.random.default_rng(1)
        for n in range(4, 129):
            x = rng.standard_normal((n, 5))
            assert np.abs(ifft2(fft2(x)) - x).max() < 1e-10, f"size {n}"

    def test_matches_direct_dft_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((8, 8, 2))
        assert np.abs(fft2(x) - dft2_oracle(x)).max() < 1e-8

    def test_unnormalized_forward(self):
        # a single spike transforms to an all-ones spectrum without scaling
        x = np.zeros((4, 4, 1))
        x[0, 0, 0] = 1.0
        assert np.allclose(fft2(x), 1.0)


# --- spectral convolution ---------------------------------------------------


def identity_weight(modes1, modes2, d):
    w = np.zeros(spectral_weight_shape(modes1, modes2, d, d))
    w[:, :, np.arange(d), np.arange(d), 0] = 1.0
    return w


def band_limited_field(rng, n1, n2, modes1, modes2, d):
    """Real field whose spectrum lives entirely on the retained modes."""
    spec = np.zeros((n1, n2, d), dtype=complex)
    k1_list = list(range(modes1)) + list(range(-(modes1 - 1), 0))
    for k1 in k1_list:
        for k2 in range(modes2):
            z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            spec[k1 % n1, k2] = z
            spec[(-k1) % n1, (-k2) % n2] = np.conj(z)
    # rows sharing a cell with their own conjugate must be real
    spec[0, 0] = spec[0, 0].real
    out = np.fft.ifftn(spec, axes=(0, 1))
    assert np.abs(out.imag).max() < 1e-10
    return out.real


class TestSpectralConv:
    def test_zero_input_zero_output(self):
        w = T.Tensor(np.random.default_rng(0).standard_normal(spectral_weight_shape(3, 3, 2, 2)))
        out = spectral_conv(np.zeros((8, 8, 2)), w, 3, 3)
        assert np.abs(out.data).max() == 0.0

    def test_identity_weight_preserves_band_limited_input(self):
        rng = np.random.default_rng(3)
        m1 = m2 = 4
        x = band_limited_field(rng, 8, 8, m1, m2, 2)
        out = spectral_conv(x, T.Tensor(identity_weight(m1, m2, 2)), m1, m2)
        assert np.abs(out.data - x).max() < 1e-6

    def test_identity_weight_projects_to_band(self):
        # generic input: identity weights give exactly the retained-band projection
        rng = np.random.default_rng(4)
        n1 = n2 = 8
        m1 = m2 = 3
        x = rng.standard_normal((n1, n2, 2))
        out = spectral_conv(x, T.Tensor(identity_weight(m1, m2, 2)), m1, m2)
        spec = np.fft.fftn(x, axes=(0, 1))
        mask = np.zeros((n1, n2, 1))
        for k1 in list(range(m1)) + list(range(-(m1 - 1), 0)):
            for k2 in list(range(m2)) + list(range(-(m2 - 1), 0)):
                mask[k1 % n1, k2 % n2] = 1.0
        projected = np.fft.ifftn(spec * mask, axes=(0, 1)).real
        assert np.abs(out.data - projected).max() < 1e-10

    def test_matches_circular_convolution_oracle(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((8, 8, 3))
        w = rng.standard_normal(spectral_weight_shape(3, 2, 3, 2))
        out = spectral_conv(x, T.Tensor(w), 3, 2)
        oracle = circular_conv_oracle(x, w, 3, 2)
        assert np.abs(out.data - oracle).max() < 1e-5

    def test_output_is_real_by_construction(self):
        # the conjugate-completed spectrum must invert to a real field
        rng = np.random.default_rng(6)
        w = rng.standard_normal(spectral_weight_shape(4, 4, 2, 2))
        full = full_spectrum_from_weight(w, 4, 4, 12, 12)
        x_spec = np.fft.fftn(rng.standard_normal((12, 12, 2)), axes=(0, 1))
        mixed = np.einsum("jkc,jkco->jko", x_spec, full)
        assert np.abs(np.fft.ifftn(mixed, axes=(0, 1)).imag).max() < 1e-6

    def test_modes_exceeding_resolution_rejected(self):
        w = T.Tensor(np.zeros(spectral_weight_shape(5, 2, 1, 1)))
        with pytest.raises(ValueError, match="modes"):
            spectral_conv(np.zeros((8, 8, 1)), w, 5, 2)

    def test_weight_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="weight shape"):
            spectral_conv(np.zeros((8, 8, 2)), T.Tensor(np.zeros((3, 3, 2, 2, 2))), 3, 3)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((8, 8, 2))
        w = rng.standard_normal(spectral_weight_shape(2, 2, 2, 2))
        readout = rng.standard_normal((8, 8, 2))

        def loss_value():
            out = spectral_conv(x, T.Tensor(w), 2, 2)
            return T.mean(T.mul(out, T.Tensor(readout))).item()

        x_t, w_t = T.Tensor(x), T.Tensor(w)
        loss = T.mean(T.mul(spectral_conv(x_t, w_t, 2, 2), T.Tensor(readout)))
        loss.backward()
        assert rel_err(x_t.grad, numeric_grad(loss_value, x)) < 1e-7
        assert rel_err(w_t.grad, numeric_grad(loss_value, w)) < 1e-7

    def test_dc_imaginary_weight_is_inert(self):
        # imag part of the (0, 0) mode cannot influence a real output
        rng = np.random.default_rng(8)
        x = rng.standard_normal((8, 8, 1))
        w = rng.standard_normal(spectral_weight_shape(2, 2, 1, 1))
        base = spectral_conv(x, T.Tensor(w), 2, 2).data
        bumped = w.copy()
        bumped[0, 0, 0, 0, 1] += 10.0
        assert np.abs(spectral_conv(x, T.Tensor(bumped), 2, 2).data - base).max() < 1e-12
        w_t = T.Tensor(w)
        T.mean(spectral_conv(x, w_t, 2, 2)).backward()
        assert w_t.grad[0, 0, 0, 0, 1] == 0.0
