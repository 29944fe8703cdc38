import numpy as np
import pytest
import torch

from conftest import to_np
from oracles import lfem_oracle
from dfcrnet import ConfigError, LocalFeatureEnhancement
from dfcrnet.gradcheck import check_gradients


def make_module(c=3, d=5, proj=4) -> LocalFeatureEnhancement:
    return LocalFeatureEnhancement(c, d, proj).double()


def test_singleton_softmax_doubles_the_input():
    m = make_module()
    f = torch.randn(3, 1, 1, dtype=torch.float64)
    z = torch.randn(5, 2, dtype=torch.float64)
    out, attn = m(f, z)
    torch.testing.assert_close(out, 2.0 * f, atol=1e-9, rtol=0)
    torch.testing.assert_close(attn, torch.ones(1, dtype=torch.float64))


def test_spatially_constant_input_gets_uniform_attention():
    m = make_module()
    values = torch.randn(3, dtype=torch.float64)
    f = values[:, None, None].expand(3, 4, 2).contiguous()
    z = torch.randn(5, 2, dtype=torch.float64)
    out, attn = m(f, z)
    n = 8
    torch.testing.assert_close(attn, torch.full((n,), 1.0 / n, dtype=torch.float64))
    torch.testing.assert_close(out, f * (1.0 + 1.0 / n))


def test_matches_scalar_loop_oracle():
    m = make_module(c=3, d=5, proj=4)
    f = torch.randn(3, 2, 2, dtype=torch.float64)
    z = torch.randn(5, 2, dtype=torch.float64)
    out, attn = m(f, z)
    expected_out, expected_attn = lfem_oracle(
        to_np(f),
        to_np(z),
        to_np(m.fc_features.weight),
        to_np(m.fc_features.bias),
        to_np(m.fc_semantic.weight),
        to_np(m.fc_semantic.bias),
    )
    np.testing.assert_allclose(to_np(out), expected_out, rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(to_np(attn), expected_attn, rtol=1e-10, atol=1e-12)


def test_attention_normalization_fuzz():
    m = make_module(c=4, d=6, proj=5)
    rng = np.random.default_rng(5)
    with torch.no_grad():
        for _ in range(200):
            h = int(rng.integers(1, 5))
            w = int(rng.integers(1, 5))
            f = torch.from_numpy(rng.normal(size=(4, h, w)) * 3)
            z = torch.from_numpy(rng.normal(size=(6, 3)))
            _, attn = m(f, z)
            assert abs(float(attn.sum()) - 1.0) < 1e-6
            assert (attn > 0).all()


def test_zero_input_passes_through_unchanged():
    m = make_module()
    f = torch.zeros(3, 2, 3, dtype=torch.float64)
    z = torch.randn(5, 2, dtype=torch.float64)
    out, _ = m(f, z)
    torch.testing.assert_close(out, f)


def test_softmax_shift_invariance():
    # Adding a constant to every score entry leaves the output unchanged;
    # realized by shifting the feature-projection bias contribution through
    # a constant offset on the semantic projections.
    m = make_module(c=3, d=5, proj=4)
    f = torch.randn(3, 2, 2, dtype=torch.float64)
    z = torch.randn(5, 2, dtype=torch.float64)
    out_before, attn_before = m(f, z)

    fnp = to_np(f)
    znp = to_np(z)
    wf, bf = to_np(m.fc_features.weight), to_np(m.fc_features.bias)
    wz, bz = to_np(m.fc_semantic.weight), to_np(m.fc_semantic.bias)
    _, attn_shifted = lfem_oracle(fnp, znp, wf, bf, wz, bz)

    # Shift the score matrix by hand inside the oracle computation.
    n, k = 4, 2
    flat = fnp.reshape(3, 4).T
    proj_f = flat @ wf.T + bf
    proj_z = znp.T @ wz.T + bz
    scores = proj_f @ proj_z.T + 17.3  # constant shift on every entry
    contribution = scores.mean(axis=1)
    shifted = np.exp(contribution - contribution.max())
    attention = shifted / shifted.sum()
    np.testing.assert_allclose(attention, to_np(attn_before), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(attn_shifted, to_np(attn_before), rtol=1e-9, atol=1e-12)


def test_semantic_dimension_mismatch_rejected():
    m = make_module(c=3, d=5, proj=4)
    with pytest.raises(ConfigError):
        m(torch.randn(3, 2, 2, dtype=torch.float64), torch.randn(7, 2, dtype=torch.float64))


def test_gradients_match_central_differences_including_semantic_set():
    m = make_module(c=3, d=4, proj=3)
    f = torch.randn(1, 3, 2, 2, dtype=torch.float64, requires_grad=True)
    z = torch.randn(1, 4, 2, dtype=torch.float64, requires_grad=True)
    tensors = [f, z] + list(m.parameters())
    result = check_gradients(lambda: m(f, z)[0].sum(), tensors, name="lfem")
    assert result.passed, result.line()
