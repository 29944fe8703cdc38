import numpy as np
import pytest
import torch


@pytest.fixture(autouse=True)
def _fixed_seeds():
    torch.manual_seed(0)
    np.random.seed(0)


def to_np(t: torch.Tensor) -> np.ndarray:
    return t.detach().cpu().double().numpy()


def mlp_params(module) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Extract (w1, b1, w2, b2) from a module with fc1/fc2 linears."""
    return (
        to_np(module.fc1.weight),
        to_np(module.fc1.bias),
        to_np(module.fc2.weight),
        to_np(module.fc2.bias),
    )
