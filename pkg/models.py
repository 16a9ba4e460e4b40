"""
Data models for the AdaBFL simulator - Single Source of Truth
Every configuration and record type shared by the pipeline stages lives here.
Config files map 1:1 onto ExperimentConfig field names - DO NOT RENAME FIELDS
"""
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from errors import ConfigError


class AttackKind(str, Enum):
    """Poisoning attacks - no magic strings"""
    NONE = "none"
    LABEL_FLIP = "label_flip"
    GAUSSIAN = "gaussian"
    TRIM = "trim"
    KRUM = "krum"
    MIN_MAX = "min_max"
    SCALING = "scaling"
    SYBIL = "sybil"


# Attacks whose submissions are crafted server-side instead of trained
MODEL_POISONING_ATTACKS = {
    AttackKind.GAUSSIAN, AttackKind.TRIM, AttackKind.KRUM,
    AttackKind.MIN_MAX, AttackKind.SYBIL,
}


class BaselineKind(str, Enum):
    FEDAVG = "fedavg"
    TRIM_MEAN = "trim_mean"
    MEDIAN = "median"
    GAU_TRIM = "gau_trim"
    GAU_MEDIAN = "gau_median"
    FOUNDATION_MEAN = "foundation_mean"
    FOUNDATION_TRIM = "foundation_trim"
    FOUNDATION_MEDIAN = "foundation_median"
    KRUM = "krum"


SYNTHETIC_BASELINES = {
    BaselineKind.GAU_TRIM, BaselineKind.GAU_MEDIAN, BaselineKind.FOUNDATION_MEAN,
    BaselineKind.FOUNDATION_TRIM, BaselineKind.FOUNDATION_MEDIAN,
}
TRIMMING_BASELINES = {
    BaselineKind.TRIM_MEAN, BaselineKind.GAU_TRIM, BaselineKind.FOUNDATION_TRIM,
}


class VariantKind(str, Enum):
    """AdaBFL stage wiring: parallel (AdaBFL-3) or serial (AdaBFL-1/2)"""
    PARALLEL_3 = "parallel_3"
    SERIAL_1 = "serial_1"
    SERIAL_2 = "serial_2"


class WeightMode(str, Enum):
    THRESHOLDED = "thresholded"
    THRESHOLD_FREE = "threshold_free"
    MOMENTUM = "momentum"


class _StrictModel(BaseModel):
    # Unknown keys in a config file are errors
    model_config = ConfigDict(extra='forbid')


# ---------------------------------------------------------------------------
# params / data / model
# ---------------------------------------------------------------------------

class TrimConfig(_StrictModel):
    """Count of extreme values removed at each end of every coordinate"""
    per_side: int = Field(0, ge=0, description="Values dropped per side, per coordinate")

    model_config = ConfigDict(extra='forbid', frozen=True)


class PartitionConfig(_StrictModel):
    """Non-iid partitioning: a label-y sample lands in cluster y with probability `bias`"""
    num_clients: int = Field(..., ge=1)
    num_classes: int = Field(..., ge=1)
    bias: float = Field(0.5, le=1.0, description="Probability h of the home cluster")
    seed: int = 0

    @model_validator(mode='after')
    def _bias_is_a_distribution(self) -> 'PartitionConfig':
        if self.bias < 1.0 / self.num_classes - 1e-12:
            raise ValueError(
                f"bias {self.bias} is below 1/M = {1.0 / self.num_classes:.6g}"
            )
        return self


class ModelSpec(_StrictModel):
    """Classifier architecture; fixes the parameter dimension d"""
    kind: Literal["logistic", "mlp"] = "logistic"
    feature_dim: int = Field(20, ge=1)
    num_classes: int = Field(10, ge=2)
    hidden_dim: int = Field(32, ge=1, description="Hidden width (mlp only)")

    @property
    def param_dim(self) -> int:
        if self.kind == "logistic":
            return (self.feature_dim + 1) * self.num_classes
        return (self.feature_dim + 1) * self.hidden_dim + (self.hidden_dim + 1) * self.num_classes


class TrainConfig(_StrictModel):
    """Client-side SGD settings"""
    learning_rate: float = Field(0.05, gt=0)
    batch_size: int = Field(32, ge=1)
    local_steps: int = Field(1, ge=0)
    seed: int = 0


# ---------------------------------------------------------------------------
# attacks / aggregators
# ---------------------------------------------------------------------------

class AttackSpec(_StrictModel):
    kind: AttackKind = AttackKind.NONE
    gaussian_variance: float = Field(200.0, gt=0, description="Variance (not std) of the Gaussian attack")
    trim_reach: float = Field(0.5, ge=0)
    scale_factor: float = Field(10.0, ge=1)
    trigger_width: int = Field(4, ge=1)
    target_class: int = Field(0, ge=0)
    poison_fraction: float = Field(0.5, gt=0, le=1, description="Share of local samples stamped with the trigger")
    seed: int = 0


class BaselineRule(_StrictModel):
    kind: BaselineKind = BaselineKind.FEDAVG
    trim: Optional[TrimConfig] = Field(None, description="Defaults to the malicious count")
    synthetic_count: Optional[int] = Field(None, ge=0, description="m; defaults to 30% of n")
    seed: int = 0


# ---------------------------------------------------------------------------
# adabfl
# ---------------------------------------------------------------------------

class FilterConfig(_StrictModel):
    """Benign filter threshold gamma * exp(-kappa * lambda(t)) / 2"""
    gamma: float = Field(0.8, gt=0)
    kappa: float = Field(1.0, ge=0)
    lambda_schedule: Literal["constant_inv_T", "log_base"] = "constant_inv_T"
    log_base: float = Field(math.e, gt=1)
    total_rounds: int = Field(1, ge=1, description="T for the 1/T schedule; set by the simulator")

    def lambda_at(self, t: int) -> float:
        if self.lambda_schedule == "constant_inv_T":
            return 1.0 / self.total_rounds
        if t < 1:
            return 0.0
        return math.log(t) / math.log(self.log_base)


class AggWeights(_StrictModel):
    """Blend weights over (benign mean, clipped model, fused model) plus their update knobs"""
    beta1: float = Field(1.0 / 3.0, ge=0, le=1)
    beta2: float = Field(1.0 / 3.0, ge=0, le=1)
    beta3: float = Field(1.0 / 3.0, ge=0, le=1)
    beta1_min: float = Field(0.1, ge=0)
    beta2_max: float = Field(0.6, ge=0)
    beta3_min: float = Field(0.1, ge=0)
    beta1_base: float = Field(0.3, ge=0)
    delta_high: float = Field(0.1, gt=0)
    delta_low: float = Field(0.05, gt=0)
    rho1: float = Field(0.01, gt=0)
    rho2: float = Field(0.7, gt=0)
    kappa_w: float = Field(0.1, gt=0)
    alpha: float = Field(0.9, ge=0, le=1, description="Momentum factor for the thresholds")
    epsilon: float = Field(1e-8, ge=0)
    p2_branch: Literal["below", "at_or_above"] = Field(
        "below", description="Second branch fires on p2 < rho2 (pseudocode) or p2 >= rho2 (prose)"
    )

    @model_validator(mode='after')
    def _on_simplex(self) -> 'AggWeights':
        total = self.beta1 + self.beta2 + self.beta3
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"beta1 + beta2 + beta3 must be 1, got {total}")
        return self

    @property
    def betas(self) -> Tuple[float, float, float]:
        return (self.beta1, self.beta2, self.beta3)


class DefenseSignals(_StrictModel):
    p1: float = Field(0.0, ge=0)
    p2: float = Field(0.0, ge=0)

    model_config = ConfigDict(extra='forbid', frozen=True)


class DefenseVariant(_StrictModel):
    kind: VariantKind = VariantKind.PARALLEL_3
    m_synthetic: Optional[int] = Field(None, ge=0, description="Copies of the best client; defaults to 30% of n")
    trim: Optional[TrimConfig] = Field(
        None, description="Defaults to the malicious count, capped at (n - 1) // 2"
    )
    peel: Optional[int] = Field(
        None, ge=0, description="Outliers removed before the similarity test; defaults to the malicious count"
    )
    weight_mode: WeightMode = WeightMode.THRESHOLDED
    center: Literal["trim_mean", "median"] = Field(
        "trim_mean", description="Robust centre used by clipping and fusion"
    )


class DefenseConfig(_StrictModel):
    kind: Literal["baseline", "adabfl"] = "adabfl"
    baseline: BaselineRule = Field(default_factory=BaselineRule)
    variant: DefenseVariant = Field(default_factory=DefenseVariant)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    weights: AggWeights = Field(default_factory=AggWeights)

    @property
    def label(self) -> str:
        if self.kind == "baseline":
            return self.baseline.kind.value
        return f"adabfl-{self.variant.kind.value}"


# ---------------------------------------------------------------------------
# sim
# ---------------------------------------------------------------------------

class DataSourceConfig(_StrictModel):
    """Synthetic Gaussian classes or an IDX train/test pair (MNIST layout)"""
    kind: Literal["synthetic", "idx"] = "synthetic"
    num_samples: int = Field(20000, ge=1)
    class_separation: float = Field(6.0, ge=0)
    train_fraction: float = Field(0.8, gt=0, lt=1)
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    seed: int = 0


class PartitionSettings(_StrictModel):
    bias: float = Field(0.5, gt=0, le=1)
    seed: Optional[int] = Field(None, description="Defaults to the experiment seed")


class ExperimentConfig(_StrictModel):
    """Full declarative description of one run"""
    total_clients: int = Field(50, ge=1, description="N")
    participants_per_round: Optional[int] = Field(None, ge=1, description="n; defaults to N")
    rounds: int = Field(100, ge=1, description="T")
    malicious_fraction: float = Field(0.0, ge=0, lt=1)
    model: ModelSpec = Field(default_factory=ModelSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    data: DataSourceConfig = Field(default_factory=DataSourceConfig)
    partition: PartitionSettings = Field(default_factory=PartitionSettings)
    attack: AttackSpec = Field(default_factory=AttackSpec)
    defense: DefenseConfig = Field(default_factory=DefenseConfig)
    eval_every: int = Field(10, ge=1)
    init: Literal["auto", "zeros", "seeded"] = "auto"
    seed: int = 0

    @model_validator(mode='after')
    def _population_fits(self) -> 'ExperimentConfig':
        if self.participants_per_round is not None and self.participants_per_round > self.total_clients:
            raise ValueError(
                f"participants_per_round {self.participants_per_round} exceeds total_clients {self.total_clients}"
            )
        if self.total_clients > 1 and self.partition.bias < 1.0 / self.model.num_classes - 1e-12:
            raise ValueError(
                f"partition.bias {self.partition.bias} is below 1/num_classes = {1.0 / self.model.num_classes:.6g}"
            )
        return self

    @property
    def participants(self) -> int:
        return self.participants_per_round or self.total_clients

    @property
    def num_malicious(self) -> int:
        # floor(f * n) with slack for binary fractions such as 0.29 * 100
        return int(math.floor(self.malicious_fraction * self.participants + 1e-9))

    @property
    def malicious_pool_size(self) -> int:
        """Malicious identities among all N clients; every round samples num_malicious of them"""
        return int(math.floor(self.malicious_fraction * self.total_clients + 1e-9))

    def resolved_trim(self, trim: Optional[TrimConfig]) -> TrimConfig:
        return trim if trim is not None else TrimConfig(per_side=self.num_malicious)

    def resolved_adabfl_trim(self, trim: Optional[TrimConfig]) -> TrimConfig:
        if trim is not None:
            return trim
        # a malicious majority cannot be trimmed away in full
        return TrimConfig(per_side=min(self.num_malicious, (self.participants - 1) // 2))

    def resolved_peel(self, peel: Optional[int]) -> int:
        return peel if peel is not None else self.num_malicious

    def resolved_synthetic_count(self, m: Optional[int]) -> int:
        return m if m is not None else int(round(0.3 * self.participants))

    def partition_config(self) -> PartitionConfig:
        seed = self.partition.seed if self.partition.seed is not None else self.seed
        return PartitionConfig(
            num_clients=self.total_clients,
            num_classes=self.model.num_classes,
            bias=self.partition.bias,
            seed=seed,
        )


class RoundMetrics(BaseModel):
    """One record of the metrics stream; betas/signals are None for baseline rules"""
    round: int
    evaluated: bool = False
    test_error: Optional[float] = Field(None, ge=0, le=1)
    train_loss: Optional[float] = None
    benign_set_size: int = 0
    beta1: Optional[float] = None
    beta2: Optional[float] = None
    beta3: Optional[float] = None
    p1: Optional[float] = None
    p2: Optional[float] = None
    grad_norm_estimate: Optional[float] = None
    agg_error_norm: Optional[float] = None
    backdoor_success: Optional[float] = None

    model_config = ConfigDict(extra='forbid')


METRIC_FIELDS: List[str] = list(RoundMetrics.model_fields)


# ---------------------------------------------------------------------------
# Config loading helpers
# ---------------------------------------------------------------------------

def expand_dotted_keys(mapping: Dict[str, Any]) -> Dict[str, Any]:
    """Turn {"attack.kind": "gaussian"} into {"attack": {"kind": "gaussian"}}, merging nested sections"""
    expanded: Dict[str, Any] = {}
    for key, value in mapping.items():
        if isinstance(value, dict):
            value = expand_dotted_keys(value)
        parts = key.split(".")
        node = expanded
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"Key '{key}' conflicts with scalar value at '{part}'")
            node = child
        leaf = parts[-1]
        if isinstance(value, dict) and isinstance(node.get(leaf), dict):
            node[leaf] = merge_sections(node[leaf], value)
        else:
            node[leaf] = value
    return expanded


def merge_sections(base: Dict[str, Any], extra: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in extra.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge_sections(merged[key], value)
        else:
            merged[key] = value
    return merged


def format_validation_error(error: ValidationError) -> List[str]:
    lines = []
    for item in error.errors():
        field = " -> ".join(str(x) for x in item['loc']) or "<root>"
        lines.append(f"Field '{field}': {item['msg']}")
    return lines


def validate_experiment_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a (possibly dotted) mapping into an ExperimentConfig"""
    try:
        return ExperimentConfig.model_validate(expand_dotted_keys(raw))
    except ValidationError as e:
        raise ConfigError("; ".join(format_validation_error(e))) from e


def load_experiment_config(filepath: Union[str, Path]) -> ExperimentConfig:
    """Load and validate an experiment config file (JSON, nested or dotted keys)"""
    path = Path(filepath)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"Config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"Config file {path} must hold a JSON object")
    return validate_experiment_dict(raw)
