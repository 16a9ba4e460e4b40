"""
AdaBFL server defense.

Stages, each a pure function of its inputs:

    filter_benign      peel the farthest outliers, then the similarity test against the leave-one-out mean
    clip_and_signal    robust centre of the benign set and the correction signal p1
    trust_scores       distance of each benign model to the coordinate extremes
    derive_fused       robust centre after appending copies of the best-scored model, signal p2
    update_weights_*   adapt (beta1, beta2, beta3) from (p1, p2)
    aggregate_parallel beta1 * mean + beta2 * clipped + beta3 * fused

defend() wires them together as the parallel variant (all three branches blended)
or one of the two serial variants (stages composed, blend bypassed). The weight
state is returned, never mutated; the caller threads it into the next round.
"""
import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from aggregators import foundation_scores
from errors import DefenseConfigError
from models import (
    AggWeights,
    DefenseSignals,
    DefenseVariant,
    FilterConfig,
    TrimConfig,
    VariantKind,
    WeightMode,
)
from params import (
    ParamVector,
    TrimLike,
    coordinate_median,
    coordinate_trimmed_mean,
    linear_combination,
    mean_vector,
    per_side_of,
    stack_vectors,
    winsorize,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DefenseOutcome:
    """Result of one defend() call"""
    global_params: ParamVector
    weights: AggWeights
    signals: DefenseSignals
    benign_indices: List[int]
    fallback: bool = False
    peeled: Tuple[int, ...] = ()


def _robust_centre(vectors: Sequence[ParamVector], trim: TrimLike, center: str) -> ParamVector:
    if center == "median":
        return coordinate_median(vectors)
    return coordinate_trimmed_mean(vectors, trim)


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------

class FilterResult(NamedTuple):
    indices: List[int]
    peeled: List[int]
    fallback: bool


def passing_indices(updates: Sequence[ParamVector], cfg: FilterConfig, t: int) -> List[int]:
    """Indices satisfying the similarity test, before any fallback"""
    matrix = stack_vectors(updates, minimum=2)
    count = matrix.shape[0]
    total = matrix.sum(axis=0)
    leave_one_out = (total[None, :] - matrix) / (count - 1)
    distance = np.linalg.norm(matrix - leave_one_out, axis=1)
    scale = cfg.gamma * math.exp(-cfg.kappa * cfg.lambda_at(t)) / 2.0
    bound = scale * np.linalg.norm(leave_one_out + matrix, axis=1)
    return [int(i) for i in np.flatnonzero(distance <= bound)]


def peel_outliers(updates: Sequence[ParamVector], count: int) -> List[int]:
    """Indices left after removing, one at a time, the update farthest from the mean of the rest

    Distance to the mean of the k survivors is k/(k-1) times the distance to the
    leave-one-out mean, so each step drops the worst left-hand side of the
    similarity test. At least two updates always remain.
    """
    matrix = stack_vectors(updates, minimum=2)
    survivors = list(range(matrix.shape[0]))
    for _ in range(min(max(count, 0), len(survivors) - 2)):
        rows = matrix[survivors]
        distance = np.linalg.norm(rows - rows.mean(axis=0), axis=1)
        survivors.pop(int(np.argmax(distance)))
    return survivors


def screen_benign(updates: Sequence[ParamVector], cfg: FilterConfig, t: int,
                  trim: TrimLike = 0, peel: int = 0) -> FilterResult:
    """Peel `peel` outliers, then keep the survivors passing the similarity test

    When fewer than 2 * per_side + 1 survivors pass, every survivor is kept.
    """
    survivors = peel_outliers(updates, peel)
    peeled = sorted(set(range(len(updates))) - set(survivors))
    kept = [updates[i] for i in survivors]
    passed = [survivors[i] for i in passing_indices(kept, cfg, t)]
    needed = 2 * per_side_of(trim) + 1
    if len(passed) < needed:
        logger.warning(
            f"Round {t}: only {len(passed)} of {len(survivors)} updates passed the benign filter "
            f"(need {needed}); keeping all {len(survivors)}"
        )
        return FilterResult(survivors, peeled, True)
    return FilterResult(passed, peeled, False)


def filter_benign(updates: Sequence[ParamVector], cfg: FilterConfig, t: int,
                  trim: TrimLike = 0, peel: int = 0) -> List[int]:
    """Benign set; with peel=0 every index when fewer than 2 * per_side + 1 updates pass"""
    return screen_benign(updates, cfg, t, trim, peel).indices


# ---------------------------------------------------------------------------
# Signals
# ---------------------------------------------------------------------------

def clip_and_signal(benign: Sequence[ParamVector], trim: TrimLike,
                    center: str = "trim_mean") -> Tuple[ParamVector, float]:
    """(clipped model, p1 = ||clipped - mean|| / d)"""
    clipped = _robust_centre(benign, trim, center)
    p1 = float(np.linalg.norm(clipped - mean_vector(benign))) / clipped.shape[0]
    return clipped, p1


def trust_scores(benign: Sequence[ParamVector]) -> np.ndarray:
    return foundation_scores(benign)


def select_best(scores: Sequence[float]) -> int:
    if len(scores) == 0:
        raise ValueError("cannot select from an empty score list")
    # argmax keeps the first maximum, so ties go to the smallest index
    return int(np.argmax(np.asarray(scores, dtype=np.float64)))


def derive_fused(benign: Sequence[ParamVector], i_star: int, m: int, trim: TrimLike,
                 center: str = "trim_mean") -> Tuple[ParamVector, float]:
    """(fused model, p2 = mean distance of the benign models to it)"""
    if not 0 <= i_star < len(benign):
        raise IndexError(f"best index {i_star} outside a benign set of {len(benign)}")
    if m < 0:
        raise DefenseConfigError(f"m_synthetic must be >= 0, got {m}")
    augmented = list(benign) + [benign[i_star]] * m
    fused = _robust_centre(augmented, trim, center)
    matrix = stack_vectors(benign)
    p2 = float(np.mean(np.linalg.norm(matrix - fused, axis=1)))
    return fused, p2


# ---------------------------------------------------------------------------
# Weight updates
# ---------------------------------------------------------------------------

def _normalised(w: AggWeights, betas: Sequence[float], **extra) -> AggWeights:
    clamped = [max(float(b), 0.0) for b in betas]
    total = sum(clamped)
    if not total > 0.0:
        raise DefenseConfigError(f"aggregation weights sum to {total} after the update")
    beta1, beta2, beta3 = (b / total for b in clamped)
    return w.model_copy(update={"beta1": beta1, "beta2": beta2, "beta3": beta3, **extra})


def _second_branch_fires(w: AggWeights, p2: float) -> bool:
    if w.p2_branch == "at_or_above":
        return p2 >= w.rho2
    return p2 < w.rho2


def update_weights_thresholded(w: AggWeights, s: DefenseSignals) -> AggWeights:
    beta1, beta2, beta3 = w.betas
    if s.p1 >= w.rho1:
        beta2 = min(beta2 + w.delta_high, w.beta2_max)
        beta1 = max(beta1 - w.delta_high, w.beta1_min)
    elif _second_branch_fires(w, s.p2):
        beta3 = max(beta3 - w.delta_low, w.beta3_min)
        beta2 = min(beta2 + w.delta_high, w.beta2_max)
    else:
        beta1 = w.beta1_base + w.kappa_w * (1.0 - s.p1)
    return _normalised(w, (beta1, beta2, beta3))


def update_weights_threshold_free(s: DefenseSignals, eps: float,
                                  w: Optional[AggWeights] = None) -> AggWeights:
    """beta proportional to (1, p1, 1 / (p2 + eps))"""
    if s.p2 + eps == 0:
        raise DefenseConfigError("threshold-free weights need p2 + epsilon > 0")
    inverse = 1.0 / (s.p2 + eps)
    base = 1.0 + s.p1 + inverse
    betas = {"beta1": 1.0 / base, "beta2": s.p1 / base, "beta3": inverse / base}
    if w is None:
        return AggWeights(epsilon=eps, **betas)
    return w.model_copy(update=betas)


def momentum_thresholds(w: AggWeights, s: DefenseSignals) -> AggWeights:
    """Move (rho1, rho2) toward the current signals, then apply the thresholded update"""
    alpha = w.alpha
    moved = w.model_copy(update={
        "rho1": alpha * w.rho1 + (1.0 - alpha) * s.p1,
        "rho2": alpha * w.rho2 + (1.0 - alpha) * s.p2,
    })
    return update_weights_thresholded(moved, s)


def updated_weights(w: AggWeights, s: DefenseSignals, mode: WeightMode) -> AggWeights:
    if mode == WeightMode.THRESHOLDED:
        return update_weights_thresholded(w, s)
    if mode == WeightMode.THRESHOLD_FREE:
        return update_weights_threshold_free(s, w.epsilon, w)
    if mode == WeightMode.MOMENTUM:
        return momentum_thresholds(w, s)
    raise DefenseConfigError(f"unknown weight mode '{mode}'")


def aggregate_parallel(benign: Sequence[ParamVector], clipped: ParamVector, fused: ParamVector,
                       w: AggWeights) -> ParamVector:
    return linear_combination(w.betas, [mean_vector(benign), clipped, fused])


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------

def stage_trim(requested: TrimLike, population: int) -> TrimConfig:
    """The requested trim, capped so a set of `population` updates keeps at least one value"""
    return TrimConfig(per_side=max(min(per_side_of(requested), (population - 1) // 2), 0))


def defend(updates: Sequence[ParamVector], variant: DefenseVariant, filter_cfg: FilterConfig,
           w: AggWeights, t: int) -> DefenseOutcome:
    """One round of server aggregation; unset trim / m_synthetic / peel count as zero"""
    count = len(updates)
    peel = min(variant.peel or 0, max(count - 2, 0))
    requested = variant.trim if variant.trim is not None else TrimConfig(per_side=0)
    trim = stage_trim(requested, count - peel)
    if trim.per_side < requested.per_side:
        logger.debug(f"Round {t}: trimming {trim.per_side} per side of {count - peel} instead of {requested.per_side}")
    m = variant.m_synthetic or 0

    screened = screen_benign(updates, filter_cfg, t, trim, peel)
    benign_indices = screened.indices
    benign = [np.asarray(updates[i], dtype=np.float64) for i in benign_indices]

    clipped, p1 = clip_and_signal(benign, trim, variant.center)
    if variant.kind == VariantKind.SERIAL_1:
        staged = winsorize(benign, trim)
    else:
        staged = benign
    i_star = select_best(trust_scores(staged))
    fused, p2 = derive_fused(staged, i_star, m, trim, variant.center)

    signals = DefenseSignals(p1=p1, p2=p2)
    weights = updated_weights(w, signals, variant.weight_mode)

    if variant.kind == VariantKind.PARALLEL_3:
        global_params = aggregate_parallel(benign, clipped, fused, weights)
    else:
        global_params = fused

    logger.debug(
        f"Round {t}: |benign|={len(benign)} best={benign_indices[i_star]} "
        f"p1={p1:.4g} p2={p2:.4g} betas=({weights.beta1:.3f}, {weights.beta2:.3f}, {weights.beta3:.3f})"
    )
    return DefenseOutcome(global_params, weights, signals, benign_indices, screened.fallback,
                          tuple(screened.peeled))
