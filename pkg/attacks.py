"""
Model-poisoning attacks: craft the malicious clients' submissions for a round.

Attackers have full knowledge: they see every honest update of the current
round (AttackContext.benign_updates) and the previous global model. Every
attack is a pure function of (spec.seed, round, context).

Label flipping is a data-level attack (data.flip_labels); the Scaling attack
trains on trigger-stamped data upstream and only the amplification lives here.
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from aggregators import krum_select
from errors import ConfigError, DimensionError, InsufficientPopulationError
from models import AttackKind, AttackSpec
from params import ParamVector, as_param_vector, pairwise_distances, stack_vectors

logger = logging.getLogger(__name__)

GAUSSIAN_SALT = 0x6A
KRUM_LAMBDA_START = 1.0
KRUM_LAMBDA_FLOOR = 1e-5
MIN_MAX_ITERATIONS = 64


@dataclass(frozen=True)
class AttackContext:
    benign_updates: Sequence[ParamVector]
    previous_global: ParamVector
    round: int

    def __post_init__(self):
        object.__setattr__(self, "previous_global", as_param_vector(self.previous_global))
        matrix = stack_vectors(self.benign_updates)
        if matrix.shape[1] != self.previous_global.shape[0]:
            raise DimensionError(
                f"benign updates have dim {matrix.shape[1]}, previous global has {self.previous_global.shape[0]}"
            )

    @property
    def dim(self) -> int:
        return int(self.previous_global.shape[0])

    def benign_matrix(self) -> np.ndarray:
        return stack_vectors(self.benign_updates)


def _attack_rng(spec: AttackSpec, round_number: int) -> np.random.Generator:
    return np.random.default_rng([spec.seed, round_number, GAUSSIAN_SALT])


def _check_count(num_malicious: int) -> None:
    if num_malicious < 1:
        raise ConfigError(f"an attack needs at least one malicious client, got {num_malicious}")


def gaussian_attack(num_malicious: int, ctx: AttackContext, spec: AttackSpec) -> List[ParamVector]:
    """Each coordinate ~ N(0, gaussian_variance), independent across clients"""
    _check_count(num_malicious)
    std = np.sqrt(spec.gaussian_variance)
    draws = _attack_rng(spec, ctx.round).normal(0.0, std, size=(num_malicious, ctx.dim))
    return [row for row in draws]


def trim_attack(num_malicious: int, ctx: AttackContext, spec: AttackSpec) -> List[ParamVector]:
    """Push every coordinate past the benign range, against the benign direction of travel"""
    _check_count(num_malicious)
    matrix = ctx.benign_matrix()
    if matrix.shape[0] < 2:
        raise InsufficientPopulationError("trim attack needs at least 2 benign updates")
    mean = matrix.mean(axis=0)
    top, bottom = matrix.max(axis=0), matrix.min(axis=0)
    spread = top - bottom
    direction = np.sign(mean - ctx.previous_global)
    crafted = np.where(
        direction > 0, bottom - spec.trim_reach * spread,
        np.where(direction < 0, top + spec.trim_reach * spread, mean),
    )
    return [crafted.copy() for _ in range(num_malicious)]


def krum_attack(num_malicious: int, ctx: AttackContext, spec: AttackSpec) -> List[ParamVector]:
    """Identical submissions w = previous_global - lambda * sign(mean benign update), lambda halved until Krum picks one"""
    _check_count(num_malicious)
    benign = [as_param_vector(u) for u in ctx.benign_updates]
    count = len(benign) + num_malicious
    if count - num_malicious - 2 < 1:
        raise InsufficientPopulationError(
            f"krum attack needs n - chi - 2 >= 1 (n={count}, chi={num_malicious})"
        )
    direction = np.sign(ctx.benign_matrix().mean(axis=0) - ctx.previous_global)
    scale = KRUM_LAMBDA_START
    while True:
        candidate = ctx.previous_global - scale * direction
        union = benign + [candidate] * num_malicious
        if krum_select(union, num_malicious) >= len(benign):
            logger.debug(f"Krum attack selected at lambda={scale:.3g} (round {ctx.round})")
            break
        scale /= 2.0
        if scale < KRUM_LAMBDA_FLOOR:
            logger.debug(f"Krum attack gave up below lambda={KRUM_LAMBDA_FLOOR} (round {ctx.round})")
            break
    return [candidate.copy() for _ in range(num_malicious)]


def min_max_attack(num_malicious: int, ctx: AttackContext, spec: AttackSpec) -> List[ParamVector]:
    """mu + gamma * p with the largest gamma keeping every benign distance within the benign diameter"""
    _check_count(num_malicious)
    matrix = ctx.benign_matrix()
    if matrix.shape[0] < 2:
        raise InsufficientPopulationError("min-max attack needs at least 2 benign updates")
    mean = matrix.mean(axis=0)
    norm = np.linalg.norm(mean)
    if norm > 0:
        direction = -mean / norm
    else:
        direction = np.zeros_like(mean)
        direction[0] = 1.0
    budget = float(pairwise_distances(list(matrix)).max())

    def feasible(gamma: float) -> bool:
        distances = np.linalg.norm(matrix - (mean + gamma * direction), axis=1)
        return float(distances.max()) <= budget

    low, high = 0.0, 10.0 * budget
    if budget > 0:
        for _ in range(MIN_MAX_ITERATIONS):
            middle = 0.5 * (low + high)
            if feasible(middle):
                low = middle
            else:
                high = middle
    crafted = mean + low * direction
    return [crafted.copy() for _ in range(num_malicious)]


def scaling_attack(poisoned_local: ParamVector, ctx: AttackContext, spec: AttackSpec) -> ParamVector:
    """Model replacement: previous_global + scale_factor * (poisoned_local - previous_global)"""
    poisoned_local = as_param_vector(poisoned_local)
    if poisoned_local.shape[0] != ctx.dim:
        raise DimensionError(f"poisoned model has dim {poisoned_local.shape[0]}, expected {ctx.dim}")
    return ctx.previous_global + spec.scale_factor * (poisoned_local - ctx.previous_global)


def sybil_attack(num_malicious: int, ctx: AttackContext, spec: AttackSpec) -> List[ParamVector]:
    """One Gaussian draw per round, submitted identically by every malicious client"""
    shared = gaussian_attack(1, ctx, spec)[0]
    return [shared.copy() for _ in range(num_malicious)]


_CRAFTERS = {
    AttackKind.GAUSSIAN: gaussian_attack,
    AttackKind.TRIM: trim_attack,
    AttackKind.KRUM: krum_attack,
    AttackKind.MIN_MAX: min_max_attack,
    AttackKind.SYBIL: sybil_attack,
}


def craft_malicious(spec: AttackSpec, num_malicious: int, ctx: AttackContext) -> List[ParamVector]:
    """Dispatch for the attacks that replace submissions outright"""
    crafter = _CRAFTERS.get(spec.kind)
    if crafter is None:
        raise ConfigError(f"attack '{spec.kind.value}' does not craft submissions server-side")
    crafted = crafter(num_malicious, ctx, spec)
    return [as_param_vector(v) for v in crafted]
