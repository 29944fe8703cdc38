"""Central-difference verification of autograd gradients.

Every check runs in float64: the scalar objective is a fixed random weighted
sum of the module output, the analytic gradients come from autograd, and the
numeric side perturbs each checked coordinate by +-eps and central-differences
the objective. Small tensors are differenced exhaustively; for large parameter
sets a seeded subset of coordinates per tensor keeps the runtime bounded while
still comparing the two independent routes coordinate by coordinate.
"""

from dataclasses import dataclass

import torch


@dataclass
class GradCheckResult:
    name: str
    max_rel_error: float
    checked_coords: int
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: max rel error {self.max_rel_error:.3e} "
            f"({self.checked_coords} coordinates)"
        )


def _coords_to_check(
    tensor: torch.Tensor, sample_per_tensor: int | None, rng: torch.Generator
) -> list[int]:
    n = tensor.numel()
    if sample_per_tensor is None or n <= sample_per_tensor:
        return list(range(n))
    idx = torch.randperm(n, generator=rng)[:sample_per_tensor]
    return idx.tolist()


def check_gradients(
    fn,
    tensors: list[torch.Tensor],
    name: str = "gradcheck",
    eps: float = 1e-6,
    tol: float = 1e-4,
    sample_per_tensor: int | None = None,
    seed: int = 0,
    corrupt: bool = False,
) -> GradCheckResult:
    """Compare autograd gradients of fn() against central differences.

    fn is a closure evaluating the scalar objective from the current values of
    `tensors` (all float64, requires_grad=True). The relative error is the
    largest |analytic - numeric| over max(1, |analytic|, |numeric|) across all
    checked coordinates. With corrupt=True one analytic gradient is perturbed
    before comparison; the check must then fail (negative control).
    """
    for t in tensors:
        if t.dtype != torch.float64:
            raise ValueError("gradient checks require float64 tensors")
        if not t.requires_grad:
            raise ValueError("all checked tensors must require grad")

    loss = fn()
    analytic = torch.autograd.grad(loss, tensors, allow_unused=True)
    analytic = [
        torch.zeros_like(t) if g is None else g.detach().clone()
        for t, g in zip(tensors, analytic)
    ]
    if corrupt:
        flat = analytic[0].reshape(-1)
        flat[0] = flat[0] + 10.0 * max(1.0, float(flat.abs().max()))

    rng = torch.Generator().manual_seed(seed)
    max_rel = 0.0
    checked = 0
    with torch.no_grad():
        for tensor, grad in zip(tensors, analytic):
            flat = tensor.reshape(-1)
            grad_flat = grad.reshape(-1)
            for i in _coords_to_check(tensor, sample_per_tensor, rng):
                original = flat[i].item()
                flat[i] = original + eps
                plus = float(fn())
                flat[i] = original - eps
                minus = float(fn())
                flat[i] = original
                numeric = (plus - minus) / (2 * eps)
                a = float(grad_flat[i])
                rel = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
                max_rel = max(max_rel, rel)
                checked += 1
    return GradCheckResult(name, max_rel, checked, max_rel < tol)


def weighted_sum_objective(output: torch.Tensor, seed: int = 0) -> torch.Tensor:
    """Scalar projection of an output tensor by a fixed random weight tensor."""
    gen = torch.Generator().manual_seed(seed)
    weights = torch.randn(output.shape, generator=gen, dtype=output.dtype)
    return (output * weights).sum()


STANDARD_MODULES = ("gcam", "cdlm", "lfem", "dfwfm", "model")


def standard_checks(
    tolerance: float = 1e-4,
    modules=None,
    negative_control: bool = True,
) -> list[GradCheckResult]:
    """The verification suite behind the gradcheck command.

    Small modules are differenced exhaustively; the full tiny model samples
    coordinates per tensor. Includes the stop-gradient zero on the dictionary
    loss's direct input and, optionally, a deliberately corrupted run that
    must fail (negative control).
    """
    from .cdlm import CollaborativeDictionary, normalized_reconstruction_loss
    from .cnn_branch import CnnConfig
    from .dfwfm import DeepFeatureWeightedFusion
    from .gcam import GlobalChannelAttention
    from .lfem import LocalFeatureEnhancement
    from .model import DFCRNet, ModelConfig, total_loss
    from .transformer import BackboneConfig

    selected = set(modules) if modules else set(STANDARD_MODULES)
    unknown = selected - set(STANDARD_MODULES)
    if unknown:
        raise ValueError(f"unknown gradcheck modules: {sorted(unknown)}")
    results = []
    torch.manual_seed(0)

    if "gcam" in selected:
        gate = GlobalChannelAttention(8, reduction=4).double()
        f = torch.randn(1, 8, 4, 4, dtype=torch.float64, requires_grad=True)
        results.append(
            check_gradients(
                lambda: weighted_sum_objective(gate(f), seed=1),
                [f] + list(gate.parameters()),
                name="gcam",
                tol=tolerance,
            )
        )

    if "cdlm" in selected:
        dico = CollaborativeDictionary(5, 3, lam=0.1).double()
        x0 = torch.randn(5, dtype=torch.float64)

        def chain():
            loss, _ = normalized_reconstruction_loss(
                x0, dico.reconstruct(dico.solve(x0))
            )
            return loss.sum()

        results.append(
            check_gradients(
                chain, [dico.dictionary, dico.transform],
                name="cdlm chain (W, D)", tol=tolerance,
            )
        )
        x_var = x0.clone().requires_grad_(True)

        def through_solve():
            loss, _ = normalized_reconstruction_loss(
                x0, dico.reconstruct(dico.solve(x_var))
            )
            return loss.sum()

        results.append(
            check_gradients(
                through_solve, [x_var], name="cdlm chain (x via solve)",
                tol=tolerance,
            )
        )
        # Blocked path: the analytic gradient through the loss's direct x
        # argument must be exactly zero.
        x_leaf = torch.randn(4, dtype=torch.float64, requires_grad=True)
        y_leaf = torch.randn(4, dtype=torch.float64, requires_grad=True)
        loss, _ = normalized_reconstruction_loss(x_leaf, y_leaf)
        (grad_x,) = torch.autograd.grad(loss.sum(), [x_leaf], allow_unused=True)
        blocked = grad_x is None or float(grad_x.abs().max()) == 0.0
        results.append(
            GradCheckResult(
                name="cdlm stop-gradient (x blocked)",
                max_rel_error=0.0 if blocked else float(grad_x.abs().max()),
                checked_coords=x_leaf.numel(),
                passed=blocked,
            )
        )

    if "lfem" in selected:
        enhancer = LocalFeatureEnhancement(3, 4, 3).double()
        f = torch.randn(1, 3, 2, 2, dtype=torch.float64, requires_grad=True)
        z = torch.randn(1, 4, 2, dtype=torch.float64, requires_grad=True)
        results.append(
            check_gradients(
                lambda: weighted_sum_objective(enhancer(f, z)[0], seed=2),
                [f, z] + list(enhancer.parameters()),
                name="lfem",
                tol=tolerance,
            )
        )

    if "dfwfm" in selected:
        fusion = DeepFeatureWeightedFusion(2).double()
        ft = torch.randn(1, 2, 3, 3, dtype=torch.float64, requires_grad=True)
        fc = torch.randn(1, 2, 3, 3, dtype=torch.float64, requires_grad=True)
        results.append(
            check_gradients(
                lambda: weighted_sum_objective(fusion(ft, fc), seed=3),
                [ft, fc] + list(fusion.parameters()),
                name="dfwfm",
                tol=tolerance,
            )
        )

    if "model" in selected:
        cfg = ModelConfig(
            backbone=BackboneConfig(
                patch_size=1, base_dim=4, depths=(1, 1, 1, 1),
                window_size=2, num_heads=(1, 1, 1, 1), mlp_ratio=1.0,
            ),
            cnn=CnnConfig(channels=(4, 8, 8), blocks=(1, 1, 1), stem_stride=1),
            num_classes=4, dict_dim=6, lfem_proj_dim=4,
            fusion_channels=8, gcam_reduction=4,
        )
        net = DFCRNet(cfg).double().eval()
        image = torch.randn(1, 9, 8, 8, dtype=torch.float64, requires_grad=True)
        labels = torch.tensor([1])
        named = [(n, p) for n, p in net.named_parameters() if p.requires_grad]
        # Parameters upstream of the dictionary input x carry the blocked
        # loss route; they are checked on the cross-entropy objective.
        results.append(
            check_gradients(
                lambda: total_loss(net(image), labels, alpha=0.0),
                [image] + [p for _, p in named],
                name="full tiny model (ce)",
                tol=tolerance,
                sample_per_tensor=3,
                seed=4,
            )
        )
        downstream = [
            p for n, p in named
            if not n.startswith(("transformer.", "feature_proj."))
        ]
        results.append(
            check_gradients(
                lambda: total_loss(net(image), labels, alpha=0.7),
                downstream,
                name="full tiny model (multi-loss)",
                tol=tolerance,
                sample_per_tensor=3,
                seed=5,
            )
        )

    if negative_control and "gcam" in selected:
        gate = GlobalChannelAttention(4, reduction=2).double()
        f = torch.randn(1, 4, 3, 3, dtype=torch.float64, requires_grad=True)
        corrupted = check_gradients(
            lambda: gate(f).sum(),
            [f] + list(gate.parameters()),
            name="corrupted run",
            tol=tolerance,
            corrupt=True,
        )
        results.append(
            GradCheckResult(
                name="negative control (corruption detected)",
                max_rel_error=corrupted.max_rel_error,
                checked_coords=corrupted.checked_coords,
                passed=not corrupted.passed,
            )
        )
    return results
