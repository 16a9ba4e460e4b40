"""
PARAMETER VECTOR ALGEBRA
========================

Flat float64 parameter vectors and the coordinate-wise robust statistics every
aggregator is built from. All functions are pure: inputs are never mutated and
results are fresh arrays.

Boundary rule: every vector entering an operation is checked for finiteness and
a shared length; NaN/Inf raise NonFiniteValueError, length mismatches raise
DimensionError.
"""
from typing import List, Sequence, Tuple, Union

import numpy as np

from errors import DimensionError, InsufficientPopulationError, NonFiniteValueError
from models import TrimConfig

ParamVector = np.ndarray
TrimLike = Union[TrimConfig, int]


def as_param_vector(values) -> ParamVector:
    """Coerce to a 1-D float64 vector, rejecting non-finite entries"""
    vector = np.asarray(values, dtype=np.float64)
    if vector.ndim != 1:
        raise DimensionError(f"expected a flat vector, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise NonFiniteValueError("parameter vector contains NaN or Inf")
    return vector


def stack_vectors(vectors: Sequence[ParamVector], minimum: int = 1) -> np.ndarray:
    """Stack a set of vectors into an (n, d) matrix after the boundary checks"""
    if len(vectors) < minimum:
        raise InsufficientPopulationError(
            f"need at least {minimum} vectors, got {len(vectors)}"
        )
    lengths = {np.shape(v)[0] if np.ndim(v) == 1 else -1 for v in vectors}
    if len(lengths) != 1 or -1 in lengths:
        raise DimensionError(f"vectors must share one flat length, got lengths {sorted(lengths)}")
    matrix = np.asarray(np.stack(vectors), dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteValueError("parameter set contains NaN or Inf")
    return matrix


def per_side_of(trim: TrimLike) -> int:
    per_side = trim.per_side if isinstance(trim, TrimConfig) else int(trim)
    if per_side < 0:
        raise ValueError(f"per_side must be non-negative, got {per_side}")
    return per_side


def _check_trimmable(count: int, per_side: int) -> None:
    if count <= 2 * per_side:
        raise InsufficientPopulationError(
            f"trimming {per_side} per side needs more than {2 * per_side} vectors, got {count}"
        )


def l2_distance(a: ParamVector, b: ParamVector) -> float:
    a = as_param_vector(a)
    b = as_param_vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.linalg.norm(a - b))


def pairwise_distances(vectors: Sequence[ParamVector]) -> np.ndarray:
    """Symmetric (n, n) Euclidean distance matrix with an exact zero diagonal"""
    matrix = stack_vectors(vectors)
    diffs = matrix[:, None, :] - matrix[None, :, :]
    return np.sqrt(np.sum(diffs * diffs, axis=2))


def coordinate_trimmed_mean(vectors: Sequence[ParamVector], trim: TrimLike) -> ParamVector:
    per_side = per_side_of(trim)
    matrix = stack_vectors(vectors)
    _check_trimmable(matrix.shape[0], per_side)
    ordered = np.sort(matrix, axis=0, kind="stable")
    kept = ordered[per_side:matrix.shape[0] - per_side]
    return kept.mean(axis=0)


def coordinate_median(vectors: Sequence[ParamVector]) -> ParamVector:
    # np.median averages the two central values for even counts
    matrix = stack_vectors(vectors)
    return np.median(matrix, axis=0)


def coordinate_extremes(vectors: Sequence[ParamVector]) -> Tuple[ParamVector, ParamVector]:
    """(coordinate-wise max, coordinate-wise min)"""
    matrix = stack_vectors(vectors)
    return matrix.max(axis=0), matrix.min(axis=0)


def winsorize(vectors: Sequence[ParamVector], trim: TrimLike) -> List[ParamVector]:
    """Clamp every coordinate to the range kept by trimming; order and count preserved"""
    per_side = per_side_of(trim)
    matrix = stack_vectors(vectors)
    count = matrix.shape[0]
    _check_trimmable(count, per_side)
    if per_side == 0:
        return [row.copy() for row in matrix]
    ordered = np.sort(matrix, axis=0, kind="stable")
    low = ordered[per_side]
    high = ordered[count - 1 - per_side]
    clamped = np.clip(matrix, low, high)
    return [row for row in clamped]


def linear_combination(weights: Sequence[float], vectors: Sequence[ParamVector]) -> ParamVector:
    if len(weights) != len(vectors):
        raise DimensionError(f"{len(weights)} weights for {len(vectors)} vectors")
    matrix = stack_vectors(vectors)
    coefficients = np.asarray(weights, dtype=np.float64)
    if not np.all(np.isfinite(coefficients)):
        raise NonFiniteValueError("combination weights contain NaN or Inf")
    return coefficients @ matrix


def mean_vector(vectors: Sequence[ParamVector]) -> ParamVector:
    return stack_vectors(vectors).mean(axis=0)
