"""
Training objective and optimiser.

The disparity loss is an L1 sequence loss over every upsampled iterate with
weights gamma^(T - t), plus an unweighted term on the context-adjusted
output.  The occlusion loss is binary cross-entropy averaged over all
occlusion predictions.  Both are combined with weights lambda1, lambda2.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from pyGOAT.exceptions import ConfigError, EmptyRegionError, ShapeMismatchError
from pyGOAT.Stereo_Matching import tensor as T
from pyGOAT.Stereo_Matching.constants import BCE_EPSILON

logger = logging.getLogger(__name__)


@dataclass
class LossConfig:
    gamma: float = 0.95
    iterations: int = 12
    lambda1: float = 1.0
    lambda2: float = 1.0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ConfigError(f"gamma must lie in (0, 1], got {self.gamma}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("loss weights lambda1 and lambda2 must be nonnegative")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be at least 1, got {self.iterations}")


@dataclass
class OptimizerConfig:
    lr: float = 4e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: Optional[float] = None
    decay_every: int = 0
    decay_rate: float = 0.5

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("Adam betas must lie in [0, 1)")
        if self.clip_norm is not None and self.clip_norm <= 0:
            self.clip_norm = None

    def learning_rate(self, step):
        """Step decay: lr * decay_rate^(step // decay_every)."""
        if self.decay_every <= 0:
            return self.lr
        return self.lr * self.decay_rate ** (step // self.decay_every)


def masked_l1(pred, target, valid):
    """Mean |target - pred| over `valid` pixels; invalid targets may be NaN."""
    valid = np.asarray(valid, dtype=bool)
    count = int(valid.sum())
    if count == 0:
        raise EmptyRegionError("the valid ground-truth mask")
    if pred.shape != valid.shape:
        raise ShapeMismatchError('masked_l1', [pred.shape, valid.shape])
    filled = np.where(valid, np.nan_to_num(np.asarray(target), nan=0.0, posinf=0.0,
                                           neginf=0.0), 0.0)
    error = T.abs_(pred - T.Tensor(filled.astype(pred.dtype))) * valid.astype(pred.dtype)
    return T.scalar_mul(T.sum_(error), 1.0 / count)


def sequence_loss(d_ups, d_final, d_gt, valid, gamma):
    """
    sum_{t=0}^{T} gamma^(T-t) |d_gt - d_up^t| + |d_gt - d_final|, each a mean over `valid`.

    Parameters
    ----------
    d_ups : list of Tensor
        T+1 upsampled disparities, oldest first.
    d_final : Tensor
    d_gt : ndarray
    valid : ndarray of bool
    gamma : float

    Returns
    -------
    Tensor
        Scalar loss.
    """
    last = len(d_ups) - 1
    loss = masked_l1(d_final, d_gt, valid)
    for t, d_up in enumerate(d_ups):
        loss = loss + T.scalar_mul(masked_l1(d_up, d_gt, valid), gamma ** (last - t))
    return loss


def occlusion_bce(preds, O_gt):
    """
    -(1/N) sum_i mean[O log O_i + (1 - O) log(1 - O_i)], O_i clipped to [eps, 1 - eps].
    """
    target = np.asarray(O_gt)
    total = None
    for pred in preds:
        if pred.shape != target.shape:
            raise ShapeMismatchError('occlusion_bce', [pred.shape, target.shape])
        p = T.clip(pred, BCE_EPSILON, 1.0 - BCE_EPSILON)
        o = T.Tensor(target.astype(pred.dtype))
        log_likelihood = o * T.log(p) + (1.0 - o) * T.log(1.0 - p)
        term = T.neg(T.mean(log_likelihood))
        total = term if total is None else total + term
    return T.scalar_mul(total, 1.0 / len(preds))


def total_loss(L_disp, L_occ, cfg):
    return T.scalar_mul(L_disp, cfg.lambda1) + T.scalar_mul(L_occ, cfg.lambda2)


@dataclass
class AdamState:
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def clip_gradients(grads, clip_norm):
    """Scale all gradients together so their global L2 norm is at most `clip_norm`."""
    norm = float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64)))
                             for g in grads.values())))
    if clip_norm is None or norm <= clip_norm:
        return grads, norm
    factor = clip_norm / (norm + 1e-12)
    return {name: g * g.dtype.type(factor) for name, g in grads.items()}, norm


def optimizer_step(weights, grads, state, cfg, step):
    """
    One bias-corrected adaptive-moment update.

    Parameters
    ----------
    weights, grads : dict of str to ndarray
    state : AdamState
        First and second moments; updated in place.
    cfg : OptimizerConfig
    step : int
        1-based step count.

    Returns
    -------
    dict of str to ndarray
        Updated weights; the input arrays are not modified.
    """
    lr = cfg.learning_rate(step - 1)
    updated = {}
    for name, w in weights.items():
        g = grads[name]
        if g.shape != w.shape:
            raise ShapeMismatchError('optimizer_step', [w.shape, g.shape])
        m = cfg.beta1 * state.m.get(name, 0.0) + (1 - cfg.beta1) * g
        v = cfg.beta2 * state.v.get(name, 0.0) + (1 - cfg.beta2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / (1 - cfg.beta1 ** step)
        v_hat = v / (1 - cfg.beta2 ** step)
        updated[name] = (w - lr * m_hat / (np.sqrt(v_hat) + cfg.eps)).astype(w.dtype)
    return updated


class Adam(object):
    """Adam over a ParameterStore, with optional global-norm clipping."""

    def __init__(self, store, cfg):
        self.store = store
        self.cfg = cfg
        self.state = AdamState()
        self.step_count = 0
        self.last_grad_norm = 0.0

    def step(self):
        self.step_count += 1
        weights = {name: t.data for name, t in self.store.items()}
        grads = {name: (t.grad if t.grad is not None else np.zeros_like(t.data))
                 for name, t in self.store.items()}
        grads, self.last_grad_norm = clip_gradients(grads, self.cfg.clip_norm)
        for name, value in optimizer_step(weights, grads, self.state, self.cfg,
                                          self.step_count).items():
            self.store[name].data = value
        return self.last_grad_norm

    def zero_grad(self):
        self.store.zero_grad()
