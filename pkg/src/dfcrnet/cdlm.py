"""Collaborative dictionary learning with a closed-form coefficient solve.

A learnable dictionary D (one atom per class) and a learnable transform W
represent a feature vector x through regularized least squares:

    s_hat = ((WD)^T (WD) + lambda I)^{-1} (WD)^T x

The reconstruction is y = (WD) s_hat, and its per-atom decomposition
z_k = s_hat_k * (W d_k) forms the key semantic set whose columns sum to y.
The dictionary is trained by the squared distance between direction-normalized
x and y; gradients flow into y but are blocked through x.
"""

import torch
import torch.nn as nn

from .errors import ConfigError, NumericError


def normalized_reconstruction_loss(
    x: torch.Tensor, y: torch.Tensor
) -> tuple[torch.Tensor, int]:
    """Squared L2 distance between x/|x| and y/|y|, per sample.

    x and y are [B, d] (or [d]). The value lies in [0, 4]. Gradient is blocked
    through x. Samples where either norm is zero are skipped: they contribute
    a loss of 0 and are counted in the returned skip count.

    Returns (per_sample_loss [B], skipped_count).
    """
    if x.dim() == 1:
        x = x.unsqueeze(0)
        y = y.unsqueeze(0)
    x = x.detach()
    nx = x.norm(dim=-1)
    ny = y.norm(dim=-1)
    valid = (nx > 0) & (ny > 0)
    # Safe denominators keep the backward pass NaN-free on skipped samples.
    safe_nx = torch.where(valid, nx, torch.ones_like(nx))
    safe_ny = torch.where(valid, ny, torch.ones_like(ny))
    diff = x / safe_nx[:, None] - y / safe_ny[:, None]
    per_sample = (diff * diff).sum(dim=-1)
    per_sample = torch.where(valid, per_sample, torch.zeros_like(per_sample))
    skipped = int((~valid).sum().item())
    return per_sample, skipped


class CollaborativeDictionary(nn.Module):
    """Shared dictionary, transform, and the closed-form coefficient solver.

    Args:
        feature_dim: dimension d of the represented vectors.
        num_atoms: number of dictionary atoms K (equals the class count).
        lam: regularization strength; must be > 0 for a guaranteed solve.

    The dictionary is initialized from a zero-mean Gaussian with unit-norm
    columns (re-drawn if an atom comes out zero); the transform starts at the
    identity plus small noise.
    """

    def __init__(self, feature_dim: int, num_atoms: int, lam: float = 0.01):
        super().__init__()
        if lam < 0:
            raise ConfigError(f"lambda must be non-negative, got {lam}")
        self.feature_dim = feature_dim
        self.num_atoms = num_atoms
        self.lam = float(lam)

        atoms = torch.randn(feature_dim, num_atoms)
        while bool((atoms.norm(dim=0) == 0).any()):
            atoms = torch.randn(feature_dim, num_atoms)
        atoms = atoms / atoms.norm(dim=0, keepdim=True)
        self.dictionary = nn.Parameter(atoms)
        self.transform = nn.Parameter(
            torch.eye(feature_dim) + 0.01 * torch.randn(feature_dim, feature_dim)
        )
        self.zero_norm_skips = 0

    def _basis(self) -> torch.Tensor:
        return self.transform @ self.dictionary  # [d, K]

    def solve(self, x: torch.Tensor) -> torch.Tensor:
        """Closed-form coefficients s_hat, shape [B, K] for x of shape [B, d]."""
        single = x.dim() == 1
        if single:
            x = x.unsqueeze(0)
        if x.shape[-1] != self.feature_dim:
            raise ConfigError(
                f"x has dimension {x.shape[-1]}, dictionary expects {self.feature_dim}"
            )
        basis = self._basis()
        gram = basis.T @ basis + self.lam * torch.eye(
            self.num_atoms, dtype=basis.dtype, device=basis.device
        )
        rhs = x @ basis  # [B, K]
        try:
            coeffs = torch.linalg.solve(gram, rhs.T).T
        except torch.linalg.LinAlgError as exc:
            raise NumericError(
                "regularized normal equations are singular; with lambda = "
                f"{self.lam} the system (WD)^T(WD) + lambda*I is not invertible"
            ) from exc
        return coeffs.squeeze(0) if single else coeffs

    def reconstruct(self, coeffs: torch.Tensor) -> torch.Tensor:
        """y = (WD) s_hat, shape [B, d]."""
        single = coeffs.dim() == 1
        if single:
            coeffs = coeffs.unsqueeze(0)
        y = coeffs @ self._basis().T
        return y.squeeze(0) if single else y

    def key_semantic_set(self, coeffs: torch.Tensor) -> torch.Tensor:
        """Per-atom reconstruction components, shape [B, d, K].

        Column k is s_hat_k * (W d_k); the columns sum to reconstruct(coeffs).
        """
        single = coeffs.dim() == 1
        if single:
            coeffs = coeffs.unsqueeze(0)
        z = self._basis().unsqueeze(0) * coeffs.unsqueeze(1)
        return z.squeeze(0) if single else z

    def forward(
        self, x: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
        """Solve, reconstruct, decompose, and score one batch.

        Returns (s_hat [B, K], y [B, d], z [B, d, K], loss [B]).
        """
        coeffs = self.solve(x)
        y = self.reconstruct(coeffs)
        z = self.key_semantic_set(coeffs)
        loss, skipped = normalized_reconstruction_loss(x, y)
        self.zero_norm_skips += skipped
        return coeffs, y, z, loss
