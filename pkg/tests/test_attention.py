import numpy as np
import pytest
import torch

from conftest import mlp_params, to_np
from oracles import cbam_oracle, eca_kernel_oracle, eca_oracle, se_oracle
from dfcrnet import (
    ConfigError,
    ConvBlockAttention,
    EfficientChannelAttention,
    SqueezeExcitation,
    build_attention,
    eca_kernel_size,
)
from dfcrnet.gradcheck import check_gradients


class TestSqueezeExcitation:
    def test_zero_weights_halve_input(self):
        m = SqueezeExcitation(4, reduction=2)
        with torch.no_grad():
            for p in m.parameters():
                p.zero_()
        f = torch.randn(2, 4, 3, 3)
        torch.testing.assert_close(m(f), 0.5 * f)

    def test_constant_channels_scale_uniformly(self):
        m = SqueezeExcitation(4, reduction=2).double()
        values = torch.randn(4, dtype=torch.float64)
        f = values[None, :, None, None].expand(1, 4, 5, 5).contiguous()
        with torch.no_grad():
            ratio = m(f) / f
        # Same scale at every pixel of a channel.
        assert float((ratio - ratio[:, :, :1, :1]).abs().max()) < 1e-12

    def test_bad_reduction_rejected(self):
        with pytest.raises(ConfigError):
            SqueezeExcitation(6, reduction=4)

    def test_matches_loop_oracle(self):
        m = SqueezeExcitation(4, reduction=2).double()
        f = torch.randn(4, 3, 2, dtype=torch.float64)
        np.testing.assert_allclose(
            to_np(m(f)), se_oracle(to_np(f), *mlp_params(m)), rtol=1e-10, atol=1e-12
        )


class TestEfficientChannelAttention:
    def test_default_kernel_for_64_channels_is_3(self):
        assert eca_kernel_size(64) == eca_kernel_oracle(64) == 3

    @pytest.mark.parametrize("channels", [8, 16, 32, 64, 128, 256, 512])
    def test_kernel_rule_matches_oracle_and_is_odd(self, channels):
        k = eca_kernel_size(channels)
        assert k == eca_kernel_oracle(channels)
        assert k % 2 == 1

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigError):
            EfficientChannelAttention(8, kernel_size=4)

    def test_zero_conv_weights_halve_input(self):
        m = EfficientChannelAttention(8, kernel_size=3)
        with torch.no_grad():
            m.conv.weight.zero_()
        f = torch.randn(2, 8, 3, 3)
        torch.testing.assert_close(m(f), 0.5 * f)

    def test_matches_loop_oracle(self):
        m = EfficientChannelAttention(6, kernel_size=3).double()
        f = torch.randn(6, 2, 3, dtype=torch.float64)
        kernel = to_np(m.conv.weight).reshape(-1)
        np.testing.assert_allclose(
            to_np(m(f)), eca_oracle(to_np(f), kernel), rtol=1e-10, atol=1e-12
        )


class TestConvBlockAttention:
    def test_zero_weights_quarter_input(self):
        m = ConvBlockAttention(4, reduction=2)
        with torch.no_grad():
            for p in m.parameters():
                p.zero_()
        f = torch.randn(2, 4, 5, 5)
        torch.testing.assert_close(m(f), 0.25 * f)

    @pytest.mark.parametrize("shape", [(1, 4, 3, 3), (2, 8, 7, 5), (4, 2, 2)])
    def test_shape_preserved(self, shape):
        channels = shape[1] if len(shape) == 4 else shape[0]
        m = ConvBlockAttention(channels, reduction=2)
        f = torch.randn(*shape)
        assert m(f).shape == f.shape

    def test_matches_loop_oracle(self):
        m = ConvBlockAttention(4, reduction=2, spatial_kernel=7).double()
        f = torch.randn(4, 3, 3, dtype=torch.float64)
        expected = cbam_oracle(
            to_np(f),
            *mlp_params(m.channel_gate),
            to_np(m.spatial_conv.weight),
            to_np(m.spatial_conv.bias),
        )
        np.testing.assert_allclose(to_np(m(f)), expected, rtol=1e-10, atol=1e-12)


def test_build_attention_dispatch():
    assert isinstance(build_attention("se", 16), SqueezeExcitation)
    assert isinstance(build_attention("eca", 16), EfficientChannelAttention)
    assert isinstance(build_attention("cbam", 16), ConvBlockAttention)
    with pytest.raises(ConfigError):
        build_attention("selfattn", 16)


def test_all_variants_shape_preserving_with_gates_in_unit_interval():
    f = torch.randn(2, 8, 4, 4) * 3
    for variant in ("se", "eca", "cbam"):
        m = build_attention(variant, 8, reduction=2)
        assert m(f).shape == f.shape


def test_variant_gradients_match_central_differences():
    f = torch.randn(1, 4, 3, 3, dtype=torch.float64, requires_grad=True)
    for variant in ("se", "eca", "cbam"):
        m = build_attention(variant, 4, reduction=2).double()
        tensors = [f] + list(m.parameters())
        result = check_gradients(lambda m=m: m(f).sum(), tensors, name=variant)
        assert result.passed, result.line()
