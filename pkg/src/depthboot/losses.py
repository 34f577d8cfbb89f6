"""Student training objective terms with analytic gradients.

Each loss returns ``(value, gradient)`` so the gradients can be checked
against finite differences without an autodiff framework.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

NUM_CLASSES = 6
LOG_VAR_BOUNDS = (-2.0, 2.0)
BERHU_FRACTION = 0.2
DEFAULT_LAMBDA_E = 0.1


def _mask(mask, shape) -> np.ndarray:
    m = np.ones(shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    if m.shape != shape:
        raise ConfigurationError(f"mask shape {m.shape} != {shape}")
    if not m.any():
        raise ValueError("loss mask selects no pixels")
    return m


def berhu_threshold(pred, target, mask=None) -> float:
    e = np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    m = _mask(mask, e.shape)
    return BERHU_FRACTION * float(np.max(np.abs(e[m])))


def berhu(pred, target, mask=None, threshold: float | None = None) -> tuple[float, np.ndarray]:
    """Reverse Huber loss averaged over ``mask``.

    ``|e|`` below the threshold ``c`` (default ``0.2 * max|e|``) and
    ``(e^2 + c^2) / 2c`` above it. The gradient holds ``c`` fixed; at
    ``|e| == c`` it takes the L1 branch.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ConfigurationError("pred and target shapes differ")
    m = _mask(mask, pred.shape)
    e = pred - target
    a = np.abs(e)
    c = berhu_threshold(pred, target, m) if threshold is None else float(threshold)
    n = m.sum()
    if c <= 0:
        # every error is zero (or a zero threshold was forced): pure L1
        return float(a[m].sum() / n), np.where(m, np.sign(e), 0.0) / n
    small = a <= c
    per_px = np.where(small, a, (e * e + c * c) / (2 * c))
    d_px = np.where(small, np.sign(e), e / c)
    return float(per_px[m].sum() / n), np.where(m, d_px, 0.0) / n


def cross_entropy(logits, labels, mask=None) -> tuple[float, np.ndarray]:
    """Mean negative log-softmax of the true class; ``logits`` has classes last."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.shape[-1] != NUM_CLASSES or logits.shape[:-1] != labels.shape:
        raise ConfigurationError(f"expected logits (..., {NUM_CLASSES}) matching labels {labels.shape}")
    if np.any(labels < 0) or np.any(labels >= NUM_CLASSES):
        raise ValueError(f"labels must lie in [0, {NUM_CLASSES})")
    m = _mask(mask, labels.shape)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_p = shifted - log_z
    onehot = np.eye(NUM_CLASSES)[labels]
    nll = -(log_p * onehot).sum(axis=-1)
    n = m.sum()
    grad = (np.exp(log_p) - onehot) * m[..., None] / n
    return float(nll[m].sum() / n), grad


def edge_aware_smoothness(depth, image) -> tuple[float, np.ndarray]:
    """``mean|dx d| e^{-|dx I|} + mean|dy d| e^{-|dy I|}`` with forward differences.

    Each directional term is averaged over its own difference grid, so a
    linear ramp of slope ``a`` on a flat image scores ``|a|``.
    """
    d = np.asarray(depth, dtype=np.float64)
    img = np.asarray(image, dtype=np.float64)
    if d.shape != img.shape:
        raise ConfigurationError("depth and guide image shapes differ")
    if np.isnan(img).any():
        raise ValueError("guide image contains NaN")
    total = 0.0
    grad = np.zeros_like(d)
    for axis in (1, 0):
        if d.shape[axis] < 2:
            continue
        dd = np.diff(d, axis=axis)
        with np.errstate(invalid="ignore"):
            di = np.abs(np.diff(img, axis=axis))
        # inf - inf: two equally saturated pixels, no contrast
        di[np.isnan(di)] = 0.0
        w = np.exp(-di)
        total += float(np.mean(np.abs(dd) * w))
        g = np.sign(dd) * w / dd.size
        # d(dd)/d(d[k+1]) = +1, d(dd)/d(d[k]) = -1
        lead = [slice(None)] * d.ndim
        trail = [slice(None)] * d.ndim
        lead[axis] = slice(1, None)
        trail[axis] = slice(None, -1)
        grad[tuple(lead)] += g
        grad[tuple(trail)] -= g
    return total, grad


@dataclass(frozen=True)
class LossTerms:
    l_depth: float
    l_seg: float
    l_smooth: float
    log_sigma_d2: float
    log_sigma_s2: float
    lambda_e: float
    total: float
    grad_log_sigma_d2: float
    grad_log_sigma_s2: float
    grad_l_depth: float = 0.0
    grad_l_seg: float = 0.0
    grad_l_smooth: float = 0.0


def kendall_combine(
    l_d: float,
    l_s: float,
    l_smooth: float,
    log_sigma_d2: float,
    log_sigma_s2: float,
    lambda_e: float = DEFAULT_LAMBDA_E,
) -> LossTerms:
    """Uncertainty-weighted sum of the depth, segmentation and smoothness losses.

    Log-variances are clamped to [-2, 2] first; the returned gradients are
    with respect to the raw inputs and vanish where the clamp is active.
    """
    vals = (l_d, l_s, l_smooth, log_sigma_d2, log_sigma_s2, lambda_e)
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("kendall_combine inputs must be finite")
    lo, hi = LOG_VAR_BOUNDS
    a = min(max(log_sigma_d2, lo), hi)
    b = min(max(log_sigma_s2, lo), hi)
    total = 0.5 * math.exp(-a) * l_d + math.exp(-b) * l_s + 0.5 * a + 0.5 * b + lambda_e * l_smooth
    ga = 0.5 - 0.5 * math.exp(-a) * l_d if lo <= log_sigma_d2 <= hi else 0.0
    gb = 0.5 - math.exp(-b) * l_s if lo <= log_sigma_s2 <= hi else 0.0
    return LossTerms(
        l_d, l_s, l_smooth, a, b, lambda_e, total, ga, gb, 0.5 * math.exp(-a), math.exp(-b), lambda_e
    )
