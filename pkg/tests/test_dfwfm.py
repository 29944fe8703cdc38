import numpy as np
import pytest
import torch

from conftest import to_np
from oracles import dfwfm_oracle, sigmoid
from dfcrnet import ConfigError, DeepFeatureWeightedFusion
from dfcrnet.gradcheck import check_gradients


def fusion_params(m: DeepFeatureWeightedFusion) -> dict:
    return {
        "dw1_w": to_np(m.conv_first.depthwise.weight),
        "dw1_b": to_np(m.conv_first.depthwise.bias),
        "pw1_w": to_np(m.conv_first.pointwise.weight),
        "pw1_b": to_np(m.conv_first.pointwise.bias),
        "dw2_w": to_np(m.conv_second.depthwise.weight),
        "dw2_b": to_np(m.conv_second.depthwise.bias),
        "pw2_w": to_np(m.conv_second.pointwise.weight),
        "pw2_b": to_np(m.conv_second.pointwise.bias),
        "dw3_w": to_np(m.conv_shared.depthwise.weight),
        "dw3_b": to_np(m.conv_shared.depthwise.bias),
        "pw3_w": to_np(m.conv_shared.pointwise.weight),
        "pw3_b": to_np(m.conv_shared.pointwise.bias),
        "out1_w": to_np(m.out_first.weight),
        "out1_b": to_np(m.out_first.bias),
        "out2_w": to_np(m.out_second.weight),
        "out2_b": to_np(m.out_second.bias),
    }


def test_output_doubles_channels():
    m = DeepFeatureWeightedFusion(5)
    out = m(torch.randn(2, 5, 4, 4), torch.randn(2, 5, 4, 4))
    assert out.shape == (2, 10, 4, 4)


def test_branch_shape_mismatch_rejected():
    m = DeepFeatureWeightedFusion(4)
    with pytest.raises(ConfigError):
        m(torch.randn(1, 4, 4, 4), torch.randn(1, 4, 2, 2))


def test_zero_inputs_with_zero_bias_convs_produce_zero():
    m = DeepFeatureWeightedFusion(3)
    with torch.no_grad():
        for p in m.parameters():
            p.zero_()
    out = m(torch.zeros(1, 3, 4, 4), torch.zeros(1, 3, 4, 4))
    torch.testing.assert_close(out, torch.zeros(1, 6, 4, 4))


def test_residual_identity_with_zero_convolutions():
    # With every convolution zeroed the branch outputs fall back to the gated
    # inputs (exactly, on non-negative inputs where the closing rectifier is
    # inactive).
    m = DeepFeatureWeightedFusion(3).double()
    with torch.no_grad():
        for p in m.parameters():
            p.zero_()
    ft = torch.rand(1, 3, 4, 4, dtype=torch.float64)
    fc = torch.rand(1, 3, 4, 4, dtype=torch.float64)
    gated_t = ft * torch.sigmoid(ft.mean(dim=(2, 3)))[:, :, None, None]
    gated_c = fc * torch.sigmoid(fc.amax(dim=(2, 3)))[:, :, None, None]
    torch.testing.assert_close(m(ft, fc), torch.cat([gated_t, gated_c], dim=1))


def test_gate_values_strictly_inside_unit_interval():
    for _ in range(10):
        ft = np.random.randn(3, 4, 4) * 3
        fc = np.random.randn(3, 4, 4) * 3
        g1 = sigmoid(ft.mean(axis=(1, 2)))
        g2 = sigmoid(fc.max(axis=(1, 2)))
        assert ((g1 > 0) & (g1 < 1)).all()
        assert ((g2 > 0) & (g2 < 1)).all()


def test_matches_scalar_loop_oracle():
    m = DeepFeatureWeightedFusion(2).double()
    ft = torch.randn(2, 3, 3, dtype=torch.float64)
    fc = torch.randn(2, 3, 3, dtype=torch.float64)
    out = m(ft, fc)
    expected = dfwfm_oracle(to_np(ft), to_np(fc), fusion_params(m))
    np.testing.assert_allclose(to_np(out), expected, rtol=1e-10, atol=1e-12)


def test_gradients_match_central_differences():
    m = DeepFeatureWeightedFusion(2).double()
    ft = torch.randn(1, 2, 3, 3, dtype=torch.float64, requires_grad=True)
    fc = torch.randn(1, 2, 3, 3, dtype=torch.float64, requires_grad=True)
    tensors = [ft, fc] + list(m.parameters())
    result = check_gradients(
        lambda: (m(ft, fc) * torch.linspace(-1, 1, 36, dtype=torch.float64).reshape(1, 4, 3, 3)).sum(),
        tensors,
        name="dfwfm",
    )
    assert result.passed, result.line()
