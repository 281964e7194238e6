"""Learnable spatial gating of feature maps.

A single trainable mask grid, one value per spatial cell of the final
feature map, multiplies every channel elementwise (values near 1 preserve a
region, values near 0 suppress it).  The mask is reparametrized through a
sigmoid of unconstrained logits, so entries stay strictly inside (0, 1) and
gradients never die at the boundary.  An L1 importance penalty over the mask
entries pushes uninformative regions toward 0; the training objective is
``prediction_loss + lam * regularization``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .tensor import Tensor, add, scale, sigmoid

# sigmoid(MASK_INIT_LOGIT) ~= 0.9: training starts near "keep everything"
# and the penalty prunes from there.
MASK_INIT_LOGIT = 2.1972246


@dataclass
class MaskParams:
    """Unconstrained logits whose sigmoid is the mask grid."""

    logits: Tensor

    @classmethod
    def initial(cls, rows: int, cols: int) -> "MaskParams":
        return cls(Tensor(np.full((rows, cols), MASK_INIT_LOGIT)))

    @property
    def grid_shape(self) -> tuple:
        return self.logits.shape


@dataclass
class MaskedLossBreakdown:
    """Objective terms: total = prediction_loss + lam * regularization_loss."""

    prediction_loss: Tensor
    regularization_loss: Tensor
    lam: float
    total: Tensor


def mask_from_logits(params: MaskParams) -> Tensor:
    """Mask grid in (0, 1), differentiable through the sigmoid."""
    return sigmoid(params.logits)


def apply_mask(features: Tensor, mask: Tensor) -> Tensor:
    """Gate a (c, d, k) feature map by a (d, k) mask shared across channels.

    The mask adjoint sums over channels; the feature adjoint is the usual
    elementwise product rule.
    """
    if features.data.ndim != 3:
        raise ShapeError(f"features must be rank 3, got {features.shape}")
    if mask.data.ndim != 2 or mask.shape != features.shape[1:]:
        raise ShapeError(
            f"mask grid {mask.shape} does not match feature spatial grid {features.shape[1:]}"
        )

    def _bw(g):
        features.grad += g * mask.data[None, :, :]
        mask.grad += (g * features.data).sum(axis=0)

    return Tensor(features.data * mask.data[None, :, :], (features, mask), _bw)


def l1_importance(mask: Tensor) -> Tensor:
    """Sum of absolute mask entries (the sparsity pressure term).

    Sigmoid-derived entries are strictly positive so this equals the plain
    sum, but the absolute value is applied faithfully; its subgradient at
    exactly 0 is 0.
    """
    value = np.float64(np.abs(mask.data).sum())

    def _bw(g):
        mask.grad += g * np.sign(mask.data)

    return Tensor(value, (mask,), _bw)


def total_loss(prediction_loss: Tensor, mask: Tensor, lam: float) -> MaskedLossBreakdown:
    """Combine prediction and importance terms into one scalar objective.

    With ``lam == 0`` the total *is* the prediction loss node (bitwise), so
    the penalty is excluded from the objective entirely; gradients still
    reach the mask logits through the prediction path.
    """
    if lam < 0:
        raise ConfigError(f"lam must be nonnegative, got {lam}")
    reg = l1_importance(mask)
    if lam == 0:
        total = prediction_loss
    else:
        total = add(prediction_loss, scale(reg, lam))
    return MaskedLossBreakdown(prediction_loss, reg, lam, total)
