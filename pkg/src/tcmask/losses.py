"""Forward evaluation of the training objective on soft prediction triplets.

Per channel and frame, the loss combines plain binary cross-entropy, a
bootstrapped variant keeping only the top-k fraction of per-pixel
contributions, and a soft (min/max) Jaccard term. A per-frame weight scales
the two cross-entropy terms: the target channel emphasizes occluded frames
through 1 + (beta - 1) * o, while the occluder and container channels
down-weight frames without one by alpha. No gradients here; external
trainers differentiate their own implementations and use these values as an
oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

EPS_DEFAULT = 1e-7


@dataclass(frozen=True)
class LossConfig:
    lambda1: float = 0.2  # plain BCE term
    lambda2: float = 0.4  # bootstrapped BCE term
    lambda3: float = 0.4  # soft Jaccard term
    lambda_t: float = 1.0  # target channel
    lambda_o: float = 0.5  # occluder channel
    lambda_c: float = 0.5  # container channel
    beta: float = 5.0  # occlusion emphasis
    alpha: float = 0.02  # absent-channel frame weight
    k: float = 0.15  # bootstrap fraction
    eps: float = EPS_DEFAULT  # probability clamp

    def __post_init__(self):
        weights = (
            self.lambda1, self.lambda2, self.lambda3,
            self.lambda_t, self.lambda_o, self.lambda_c, self.beta,
        )
        if any(w < 0 for w in weights):
            raise ValueError("loss weights must be non-negative")
        if not (0.0 < self.k <= 1.0):
            raise ValueError("bootstrap fraction k must be in (0, 1]")
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")

    @classmethod
    def from_json(cls, data: dict) -> "LossConfig":
        unknown = set(data) - {f for f in cls.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown loss config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "LossConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _pixel_bce(pred: np.ndarray, gt: np.ndarray, eps: float) -> np.ndarray:
    p = np.clip(np.asarray(pred, dtype=np.float64), eps, 1.0 - eps)
    g = np.asarray(gt, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs gt {g.shape}")
    return -(g * np.log(p) + (1.0 - g) * np.log1p(-p))


def bce(pred: np.ndarray, gt: np.ndarray, weight: float = 1.0, eps: float = EPS_DEFAULT) -> float:
    """Mean per-pixel binary cross-entropy, scaled by a frame weight."""
    return weight * float(_pixel_bce(pred, gt, eps).mean())


def occlusion_weight(o: float | None, beta: float = 5.0) -> float:
    """Frame emphasis 1 + (beta - 1) * o; undefined occlusion counts as 0."""
    if o is None or (isinstance(o, float) and math.isnan(o)):
        o = 0.0
    return 1.0 + (beta - 1.0) * o


def bootstrapped_bce(
    pred: np.ndarray, gt: np.ndarray, k: float, weight: float = 1.0, eps: float = EPS_DEFAULT
) -> float:
    """Mean of the top ceil(k * P) per-pixel BCE contributions, scaled."""
    if not (0.0 < k <= 1.0):
        raise ValueError("bootstrap fraction k must be in (0, 1]")
    losses = _pixel_bce(pred, gt, eps).ravel()
    m = math.ceil(k * losses.size)
    top = np.partition(losses, losses.size - m)[losses.size - m :]
    return weight * float(top.mean())


def soft_jaccard(pred: np.ndarray, gt: np.ndarray) -> float:
    """1 - sum(min) / sum(max); zero when both masks are identically zero."""
    p = np.asarray(pred, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if p.shape != g.shape:
        raise ValueError(f"shape mismatch: pred {p.shape} vs gt {g.shape}")
    denom = float(np.maximum(p, g).sum())
    if denom == 0.0:
        return 0.0
    return 1.0 - float(np.minimum(p, g).sum()) / denom


def channel_terms(
    pred_seq: np.ndarray,
    gt_seq: np.ndarray,
    occlusion: np.ndarray | None,
    config: LossConfig,
    channel_present: np.ndarray | None,
) -> tuple[float, float, float]:
    """Frame-averaged (bce, bootstrapped, jaccard) terms for one channel.

    Pass `occlusion` (per-frame fractions, NaN allowed) for the target
    channel, or `channel_present` flags for the occluder/container channels.
    """
    t_count = pred_seq.shape[0]
    bce_sum = boot_sum = jac_sum = 0.0
    for t in range(t_count):
        if channel_present is not None:
            w = 1.0 if channel_present[t] else config.alpha
        elif occlusion is not None:
            w = occlusion_weight(float(occlusion[t]), config.beta)
        else:
            w = 1.0
        bce_sum += bce(pred_seq[t], gt_seq[t], weight=w, eps=config.eps)
        boot_sum += bootstrapped_bce(pred_seq[t], gt_seq[t], config.k, weight=w, eps=config.eps)
        jac_sum += soft_jaccard(pred_seq[t], gt_seq[t])
    return bce_sum / t_count, boot_sum / t_count, jac_sum / t_count


def channel_loss(
    pred_seq: np.ndarray,
    gt_seq: np.ndarray,
    occlusion: np.ndarray | None,
    config: LossConfig,
    channel_present: np.ndarray | None = None,
) -> float:
    b, bk, j = channel_terms(pred_seq, gt_seq, occlusion, config, channel_present)
    return config.lambda1 * b + config.lambda2 * bk + config.lambda3 * j


def total_loss(pred, gt, records, config: LossConfig) -> float:
    """Weighted sum of the three channel losses for a full triplet."""
    breakdown = loss_breakdown(pred, gt, records, config)
    return breakdown["total"]


def loss_breakdown(pred, gt, records, config: LossConfig) -> dict:
    """Per-channel per-term values plus the total, as written by the CLI."""
    occ = np.array(
        [np.nan if r.occlusion_fraction is None else r.occlusion_fraction for r in records]
    )
    occ_present = np.array([r.main_occluder is not None for r in records])
    cont_present = np.array([r.main_container is not None for r in records])

    channels = {
        "target": channel_terms(pred.m_t, gt.m_t, occ, config, None),
        "occluder": channel_terms(pred.m_o, gt.m_o, None, config, occ_present),
        "container": channel_terms(pred.m_c, gt.m_c, None, config, cont_present),
    }
    out = {}
    channel_totals = {}
    for name, (b, bk, j) in channels.items():
        out[name] = {"bce": b, "bootstrapped": bk, "jaccard": j}
        channel_totals[name] = config.lambda1 * b + config.lambda2 * bk + config.lambda3 * j
    out["total"] = (
        config.lambda_t * channel_totals["target"]
        + config.lambda_o * channel_totals["occluder"]
        + config.lambda_c * channel_totals["container"]
    )
    return out


def bootstrap_schedule(progress: float) -> float:
    """Bootstrap fraction over training: 1 down to 0.15 across the first 10%."""
    if not (0.0 <= progress <= 1.0):
        raise ValueError("progress must be in [0, 1]")
    if progress <= 0.1:
        return 1.0 - 8.5 * progress
    return 0.15
