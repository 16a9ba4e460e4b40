"""
Baseline server aggregation rules compared against AdaBFL.

    fedavg            plain mean
    trim_mean         coordinate trimmed mean
    median            coordinate median
    gau_trim/median   append m Gaussian synthetic updates, then trim/median
    foundation_*      append copies of the m best-scored updates, then mean/trim/median
    krum              the single update with the smallest neighbour distance sum
"""
import logging
from typing import List, Sequence

import numpy as np

from errors import ConfigError, InsufficientPopulationError
from models import BaselineKind, BaselineRule, TrimConfig
from params import (
    ParamVector,
    coordinate_extremes,
    coordinate_median,
    coordinate_trimmed_mean,
    mean_vector,
    stack_vectors,
)

logger = logging.getLogger(__name__)

GAUSSIAN_SYNTHETIC_SALT = 0x6A55


def fedavg(updates: Sequence[ParamVector]) -> ParamVector:
    return mean_vector(updates)


def krum_scores(updates: Sequence[ParamVector], num_malicious: int) -> np.ndarray:
    """Sum of squared distances from each update to its n - chi - 2 nearest neighbours"""
    matrix = stack_vectors(updates)
    count = matrix.shape[0]
    neighbours = count - num_malicious - 2
    if neighbours < 1:
        raise InsufficientPopulationError(
            f"krum needs n - chi - 2 >= 1 (n={count}, chi={num_malicious})"
        )
    diffs = matrix[:, None, :] - matrix[None, :, :]
    squared = np.sum(diffs * diffs, axis=2)
    scores = np.empty(count)
    for i in range(count):
        others = np.delete(squared[i], i)
        scores[i] = np.sum(np.sort(others)[:neighbours])
    return scores


def krum_select(updates: Sequence[ParamVector], num_malicious: int) -> int:
    # argmin keeps the first of equal scores, so ties go to the smallest index
    return int(np.argmin(krum_scores(updates, num_malicious)))


def gaussian_synthetic(updates: Sequence[ParamVector], m: int, seed: int,
                       round_number: int) -> List[ParamVector]:
    """m vectors drawn per coordinate from N(sample mean, sample std^2) of the updates"""
    if m == 0:
        return []
    matrix = stack_vectors(updates, minimum=2)
    mu = matrix.mean(axis=0)
    sigma = matrix.std(axis=0, ddof=1)
    rng = np.random.default_rng([seed, round_number, GAUSSIAN_SYNTHETIC_SALT])
    draws = mu + sigma * rng.standard_normal((m, matrix.shape[1]))
    return [row for row in draws]


def foundation_scores(updates: Sequence[ParamVector]) -> np.ndarray:
    """min(||g - g_max||, ||g - g_min||) per update"""
    matrix = stack_vectors(updates)
    top, bottom = coordinate_extremes(updates)
    to_top = np.linalg.norm(matrix - top, axis=1)
    to_bottom = np.linalg.norm(matrix - bottom, axis=1)
    return np.minimum(to_top, to_bottom)


def foundation_synthetic(updates: Sequence[ParamVector], m: int) -> List[ParamVector]:
    """Copies of the m highest-scoring updates (ties: smaller index first)"""
    if m > len(updates):
        raise ConfigError(f"cannot select {m} synthetic updates from {len(updates)} clients")
    if m == 0:
        return []
    scores = foundation_scores(updates)
    best = np.argsort(-scores, kind="stable")[:m]
    return [np.array(updates[i], dtype=np.float64, copy=True) for i in best]


def _trim_of(rule: BaselineRule) -> TrimConfig:
    return rule.trim if rule.trim is not None else TrimConfig(per_side=0)


def aggregate_baseline(rule: BaselineRule, updates: Sequence[ParamVector],
                       round_number: int, num_malicious: int = 0) -> ParamVector:
    """Dispatch on rule.kind; num_malicious is the chi Krum assumes"""
    kind = rule.kind
    m = rule.synthetic_count or 0
    if kind == BaselineKind.FEDAVG:
        return fedavg(updates)
    if kind == BaselineKind.TRIM_MEAN:
        return coordinate_trimmed_mean(updates, _trim_of(rule))
    if kind == BaselineKind.MEDIAN:
        return coordinate_median(updates)
    if kind in (BaselineKind.GAU_TRIM, BaselineKind.GAU_MEDIAN):
        augmented = list(updates) + gaussian_synthetic(updates, m, rule.seed, round_number)
        if kind == BaselineKind.GAU_TRIM:
            return coordinate_trimmed_mean(augmented, _trim_of(rule))
        return coordinate_median(augmented)
    if kind in (BaselineKind.FOUNDATION_MEAN, BaselineKind.FOUNDATION_TRIM,
                BaselineKind.FOUNDATION_MEDIAN):
        augmented = list(updates) + foundation_synthetic(updates, m)
        if kind == BaselineKind.FOUNDATION_MEAN:
            return mean_vector(augmented)
        if kind == BaselineKind.FOUNDATION_TRIM:
            return coordinate_trimmed_mean(augmented, _trim_of(rule))
        return coordinate_median(augmented)
    if kind == BaselineKind.KRUM:
        winner = krum_select(updates, num_malicious)
        logger.debug(f"Krum selected update {winner} of {len(updates)}")
        return np.array(updates[winner], dtype=np.float64, copy=True)
    raise ConfigError(f"unknown baseline rule '{kind}'")
