#!/usr/bin/env python3
"""
FEDERATED SIMULATION - ROUND ORCHESTRATION AND CLI
==================================================

PURPOSE:
--------
Runs the federated training loop end to end:
1. Build the train/test data and split the training set across N clients
2. Each round: sample participants, train them in parallel, inject the attack
3. Aggregate with the configured defense (a baseline rule or AdaBFL)
4. Evaluate on the held-out set and emit one RoundMetrics record per round

DETERMINISM:
------------
Every random draw is keyed on (seed, round, client or salt), never on worker
scheduling, so the metrics stream is byte-identical for any --workers value.
Wall-clock time only ever reaches the log banners.

USAGE:
------
    python sim.py run --config configs/reference.json --out runs/ref [--format csv|jsonl] [--workers k]
    python sim.py sweep --config configs/reference.json --axis malicious_fraction --values 0,0.1,0.2,0.3 --out runs/mf
    python sim.py validate --config configs/reference.json

EXIT CODES:
-----------
    0 success, 2 configuration error, 3 runtime error
"""
import argparse
import asyncio
import csv
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

import classifier
import simconfig
from adabfl import defend
from aggregators import aggregate_baseline
from attacks import AttackContext, craft_malicious, scaling_attack
from config_check import ExperimentHealthCheck, check_config_file
from data import (
    Dataset,
    flip_labels,
    generate_synthetic,
    load_idx,
    partition_noniid,
    poison_with_trigger,
    train_test_split,
    trigger_test_set,
)
from errors import ConfigError, EmptyClientDataError, RoundError, SimulationError
from models import (
    METRIC_FIELDS,
    MODEL_POISONING_ATTACKS,
    AggWeights,
    AttackKind,
    BaselineKind,
    DefenseConfig,
    ExperimentConfig,
    RoundMetrics,
    VariantKind,
    expand_dotted_keys,
    load_experiment_config,
    merge_sections,
    validate_experiment_dict,
)
from params import ParamVector, l2_distance, mean_vector
from sim_logger import setup_logger, write_banner

logger = logging.getLogger(__name__)

PARTICIPANT_SALT = 0x5A
MALICIOUS_SALT = 0x3A1


def component_seed(experiment_seed: int, seed: int) -> int:
    """Mix the experiment seed into a component's own seed"""
    return int(np.random.SeedSequence([experiment_seed, seed]).generate_state(1)[0])


def build_datasets(cfg: ExperimentConfig) -> Tuple[Dataset, Dataset]:
    data = cfg.data
    if data.kind == "idx":
        if None in (data.train_images, data.train_labels, data.test_images, data.test_labels):
            raise ConfigError("idx data needs train_images, train_labels, test_images and test_labels")
        train = load_idx(data.train_images, data.train_labels)
        test = load_idx(data.test_images, data.test_labels)
        if train.feature_dim != cfg.model.feature_dim:
            raise ConfigError(
                f"model.feature_dim is {cfg.model.feature_dim} but the IDX images have {train.feature_dim} pixels"
            )
        for name, part in (("train", train), ("test", test)):
            if len(part) and int(part.labels.max()) >= cfg.model.num_classes:
                raise ConfigError(
                    f"{name} labels reach {int(part.labels.max())} but model.num_classes is {cfg.model.num_classes}"
                )
        return train, test
    seed = component_seed(cfg.seed, data.seed)
    full = generate_synthetic(data.num_samples, cfg.model.feature_dim, cfg.model.num_classes,
                              data.class_separation, seed)
    return train_test_split(full, data.train_fraction, seed)


def partition_clients(train: Dataset, cfg: ExperimentConfig) -> List[Dataset]:
    if cfg.total_clients == 1:
        # No clusters to bias toward: the only client holds everything
        return [train]
    return partition_noniid(train, cfg.partition_config())


def _resolved_defense(cfg: ExperimentConfig) -> DefenseConfig:
    """Fill in the trim / peel / synthetic-count / T defaults that depend on the population"""
    defense = cfg.defense
    rule = defense.baseline.model_copy(update={
        "trim": cfg.resolved_trim(defense.baseline.trim),
        "synthetic_count": cfg.resolved_synthetic_count(defense.baseline.synthetic_count),
        "seed": component_seed(cfg.seed, defense.baseline.seed),
    })
    variant = defense.variant.model_copy(update={
        "trim": cfg.resolved_adabfl_trim(defense.variant.trim),
        "peel": cfg.resolved_peel(defense.variant.peel),
        "m_synthetic": cfg.resolved_synthetic_count(defense.variant.m_synthetic),
    })
    filter_cfg = defense.filter.model_copy(update={"total_rounds": cfg.rounds})
    return defense.model_copy(update={"baseline": rule, "variant": variant, "filter": filter_cfg})


@dataclass
class ClientResult:
    client_id: int
    params: Optional[ParamVector]
    loss: Optional[float]


class FederatedSimulation:
    """Mutable run state: the global model and AdaBFL weights thread through the rounds"""

    def __init__(self, cfg: ExperimentConfig, workers: int = 1):
        self.cfg = cfg
        self.workers = workers
        self.triggered_test: Optional[Dataset] = None
        self.defense = _resolved_defense(cfg)
        self.train_cfg = cfg.train.model_copy(update={"seed": component_seed(cfg.seed, cfg.train.seed)})
        self.attack = cfg.attack.model_copy(update={"seed": component_seed(cfg.seed, cfg.attack.seed)})

        train, self.test = build_datasets(cfg)
        self.client_data = partition_clients(train, cfg)

        order = np.random.default_rng([cfg.seed, MALICIOUS_SALT]).permutation(cfg.total_clients)
        self.malicious_ids = frozenset(int(i) for i in order[:cfg.malicious_pool_size])
        self._poison_malicious_data()

        self.global_params = classifier.initial_params(cfg.model, cfg.init, cfg.seed)
        self.weights = self.defense.weights
        self._executor = ThreadPoolExecutor(max_workers=self.workers)
        logger.info(
            f"Simulation ready: {cfg.total_clients} clients, {len(self.malicious_ids)} malicious, "
            f"{len(train)} train / {len(self.test)} test samples, d={cfg.model.param_dim}"
        )

    def _poison_malicious_data(self):
        attack, num_classes = self.attack, self.cfg.model.num_classes
        if attack.kind == AttackKind.LABEL_FLIP:
            for cid in self.malicious_ids:
                self.client_data[cid] = flip_labels(self.client_data[cid], num_classes)
        elif attack.kind == AttackKind.SCALING:
            for cid in self.malicious_ids:
                if len(self.client_data[cid]):
                    self.client_data[cid] = poison_with_trigger(
                        self.client_data[cid], attack.trigger_width, attack.target_class,
                        attack.poison_fraction, [attack.seed, cid],
                    )
            self.triggered_test = trigger_test_set(self.test, attack.trigger_width, attack.target_class)

    def close(self):
        self._executor.shutdown(wait=True)

    def __enter__(self) -> 'FederatedSimulation':
        return self

    def __exit__(self, *exc):
        self.close()

    # ------------------------------------------------------------------
    # Round pieces
    # ------------------------------------------------------------------

    def participants_for(self, t: int) -> List[int]:
        """Sorted ids of round t's participants: exactly num_malicious from the malicious pool, the rest honest"""
        cfg = self.cfg
        if cfg.participants == cfg.total_clients:
            return list(range(cfg.total_clients))
        rng = np.random.default_rng([cfg.seed, t, PARTICIPANT_SALT])
        pool = sorted(self.malicious_ids)
        honest = [cid for cid in range(cfg.total_clients) if cid not in self.malicious_ids]
        chosen: List[int] = []
        if cfg.num_malicious:
            chosen.extend(rng.choice(pool, size=cfg.num_malicious, replace=False).tolist())
        chosen.extend(rng.choice(honest, size=cfg.participants - cfg.num_malicious, replace=False).tolist())
        return sorted(int(i) for i in chosen)

    def _train_one(self, cid: int, t: int) -> ClientResult:
        try:
            params, loss = classifier.local_update_with_loss(
                self.cfg.model, self.global_params, self.client_data[cid], self.train_cfg, t, cid
            )
        except EmptyClientDataError:
            logger.warning(f"Round {t}: client {cid} holds no samples; skipped")
            return ClientResult(cid, None, None)
        return ClientResult(cid, params, loss)

    async def _train_async(self, client_ids: Sequence[int], t: int) -> List[ClientResult]:
        loop = asyncio.get_running_loop()
        tasks = [loop.run_in_executor(self._executor, self._train_one, cid, t) for cid in client_ids]
        # gather keeps submission order, whatever order the workers finish in
        return list(await asyncio.gather(*tasks))

    def train_clients(self, client_ids: Sequence[int], t: int) -> List[ClientResult]:
        return asyncio.run(self._train_async(client_ids, t))

    def _aggregate(self, updates: List[ParamVector], t: int):
        if self.defense.kind == "baseline":
            return aggregate_baseline(self.defense.baseline, updates, t, self.cfg.num_malicious), None
        outcome = defend(updates, self.defense.variant, self.defense.filter, self.weights, t)
        return outcome.global_params, outcome

    def _should_evaluate(self, t: int) -> bool:
        return t % self.cfg.eval_every == 0 or t == self.cfg.rounds

    # ------------------------------------------------------------------
    # One round
    # ------------------------------------------------------------------

    def run_round(self, t: int) -> RoundMetrics:
        cfg = self.cfg
        previous = self.global_params
        participants = self.participants_for(t)
        malicious = [cid for cid in participants if cid in self.malicious_ids]
        honest = [cid for cid in participants if cid not in self.malicious_ids]
        crafts_submissions = self.attack.kind in MODEL_POISONING_ATTACKS and bool(malicious)

        stage = "train"
        try:
            trainees = honest if crafts_submissions else participants
            trained = {r.client_id: r for r in self.train_clients(trainees, t) if r.params is not None}
            honest_results = [trained[cid] for cid in honest if cid in trained]
            if not honest_results:
                raise SimulationError("no honest participant produced an update")
            honest_updates = [r.params for r in honest_results]

            stage = "attack"
            submissions: Dict[int, ParamVector] = {cid: trained[cid].params for cid in honest if cid in trained}
            ctx = AttackContext(honest_updates, previous, t)
            if crafts_submissions:
                for cid, vector in zip(malicious, craft_malicious(self.attack, len(malicious), ctx)):
                    submissions[cid] = vector
            elif self.attack.kind == AttackKind.SCALING:
                for cid in malicious:
                    if cid in trained:
                        submissions[cid] = scaling_attack(trained[cid].params, ctx, self.attack)
            else:
                for cid in malicious:
                    if cid in trained:
                        submissions[cid] = trained[cid].params
            updates = [submissions[cid] for cid in participants if cid in submissions]

            stage = "aggregate"
            new_global, outcome = self._aggregate(updates, t)
            honest_mean = mean_vector(honest_updates)
            losses = [r.loss for r in honest_results if r.loss is not None]
            metrics: Dict[str, Any] = {
                "round": t,
                "train_loss": float(np.mean(losses)) if losses else None,
                "benign_set_size": len(updates),
                "grad_norm_estimate": l2_distance(honest_mean, previous) / self.train_cfg.learning_rate,
                "agg_error_norm": l2_distance(new_global, honest_mean),
            }
            if outcome is not None:
                self.weights = outcome.weights
                metrics.update(
                    benign_set_size=len(outcome.benign_indices),
                    beta1=outcome.weights.beta1, beta2=outcome.weights.beta2, beta3=outcome.weights.beta3,
                    p1=outcome.signals.p1, p2=outcome.signals.p2,
                )
            self.global_params = new_global

            stage = "evaluate"
            if self._should_evaluate(t):
                metrics["evaluated"] = True
                metrics["test_error"] = classifier.test_error(cfg.model, new_global, self.test)
                if self.triggered_test is not None:
                    metrics["backdoor_success"] = classifier.target_hit_rate(
                        cfg.model, new_global, self.triggered_test
                    )
            record = RoundMetrics(**metrics)
        except RoundError:
            raise
        except (SimulationError, ValueError, OSError) as e:
            raise RoundError(t, stage, e) from e

        self._log_round(record)
        return record

    def _log_round(self, record: RoundMetrics):
        parts = [f"Round {record.round:>4}", f"|benign|={record.benign_set_size}"]
        if record.beta1 is not None:
            parts.append(f"betas=({record.beta1:.3f}, {record.beta2:.3f}, {record.beta3:.3f})")
            parts.append(f"p1={record.p1:.4g} p2={record.p2:.4g}")
        if record.train_loss is not None:
            parts.append(f"loss={record.train_loss:.4f}")
        if record.evaluated:
            parts.append(f"test_error={record.test_error:.4f}")
            if record.backdoor_success is not None:
                parts.append(f"backdoor={record.backdoor_success:.4f}")
        logger.info(" | ".join(parts))

    def run(self) -> List[RoundMetrics]:
        return [self.run_round(t) for t in range(1, self.cfg.rounds + 1)]


# ---------------------------------------------------------------------------
# Experiments and sweeps
# ---------------------------------------------------------------------------

def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> List[RoundMetrics]:
    workers = simconfig.resolve_workers(workers)
    started = time.perf_counter()
    write_banner(logger, "ADABFL SIMULATION STARTED", [
        f"Defense: {cfg.defense.label} | Attack: {cfg.attack.kind.value} | "
        f"Malicious fraction: {cfg.malicious_fraction} | Rounds: {cfg.rounds} | Workers: {workers}",
    ])
    with FederatedSimulation(cfg, workers) as simulation:
        history = simulation.run()
    final = next((r.test_error for r in reversed(history) if r.evaluated), None)
    write_banner(logger, "ADABFL SIMULATION FINISHED", [
        f"Final test error: {final:.4f}" if final is not None else "Final test error: n/a",
        f"Elapsed: {time.perf_counter() - started:.1f}s | RSS: {simconfig.resident_memory_mb():.1f} MB",
    ])
    return history


SWEEP_AXES = {
    "malicious_fraction": ("malicious_fraction", float),
    "bias_h": ("partition.bias", float),
    "total_clients": ("total_clients", int),
    "synthetic_fraction": (None, float),
    "attack": ("attack.kind", str),
    "defense": (None, str),
    "rho1": ("defense.weights.rho1", float),
    "rho2": ("defense.weights.rho2", float),
    "beta_min": (None, float),
    "beta_max": ("defense.weights.beta2_max", float),
    "weight_mode": ("defense.variant.weight_mode", str),
}


def defense_from_label(label: str, base: DefenseConfig) -> DefenseConfig:
    """'fedavg', 'krum', ... select a baseline; 'adabfl' or 'adabfl-<variant>' select AdaBFL"""
    if label == "adabfl" or label.startswith("adabfl-"):
        variant = base.variant
        if label != "adabfl":
            try:
                variant = variant.model_copy(update={"kind": VariantKind(label[len("adabfl-"):])})
            except ValueError as e:
                raise ConfigError(f"unknown AdaBFL variant in '{label}'") from e
        return base.model_copy(update={"kind": "adabfl", "variant": variant})
    try:
        kind = BaselineKind(label)
    except ValueError as e:
        raise ConfigError(f"unknown defense '{label}'") from e
    return base.model_copy(update={"kind": "baseline", "baseline": base.baseline.model_copy(update={"kind": kind})})


def _with_updates(base: ExperimentConfig, dotted: Dict[str, Any]) -> ExperimentConfig:
    raw = merge_sections(base.model_dump(mode="json"), expand_dotted_keys(dotted))
    return validate_experiment_dict(raw)


def apply_axis(base: ExperimentConfig, axis: str, value: Any) -> ExperimentConfig:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis '{axis}'; choose from {sorted(SWEEP_AXES)}")
    key, _ = SWEEP_AXES[axis]
    if axis == "defense":
        defense = defense_from_label(str(value), base.defense)
        return _with_updates(base, {"defense": defense.model_dump(mode="json")})
    if axis == "synthetic_fraction":
        if not 0.0 <= float(value) <= 1.0:
            raise ConfigError(f"synthetic_fraction must lie in [0, 1], got {value}")
        m = int(round(float(value) * base.participants))
        return _with_updates(base, {"defense.variant.m_synthetic": m, "defense.baseline.synthetic_count": m})
    if axis == "beta_min":
        # beta1_min and beta3_min move together
        return _with_updates(base, {"defense.weights.beta1_min": value, "defense.weights.beta3_min": value})
    return _with_updates(base, {key: value})


def parse_axis_values(axis: str, text: str) -> List[Any]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis '{axis}'; choose from {sorted(SWEEP_AXES)}")
    _, cast = SWEEP_AXES[axis]
    try:
        return [cast(item.strip()) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigError(f"values for axis '{axis}' must be {cast.__name__}s: {text}") from e


@dataclass
class SweepResult:
    axis: str
    value: Any
    defense: str
    attack: str
    history: List[RoundMetrics]

    @property
    def final_test_error(self) -> Optional[float]:
        return next((r.test_error for r in reversed(self.history) if r.evaluated), None)


def run_sweep(base: ExperimentConfig, axis: str, values: Sequence[Any],
              defenses: Optional[Sequence[str]] = None,
              workers: Optional[int] = None) -> List[SweepResult]:
    """One run per (value, defense); the base defense alone when `defenses` is empty

    Every configuration is health-checked before the first run starts.
    """
    configs = []
    for value in values:
        at_value = apply_axis(base, axis, value)
        for label in (defenses or [None]):
            cfg = at_value if label is None else _with_updates(
                at_value, {"defense": defense_from_label(label, at_value.defense).model_dump(mode="json")}
            )
            configs.append((value, cfg))

    issues = []
    for value, cfg in configs:
        checker = ExperimentHealthCheck(cfg)
        if not checker.collect():
            issues.extend(f"{axis}={value} ({cfg.defense.label}): {issue}" for issue in checker.issues)
    if issues:
        raise ConfigError("; ".join(issues))
    logger.info(f"Sweep over {axis}: {len(configs)} runs")

    results = []
    for value, cfg in configs:
        history = run_experiment(cfg, workers)
        results.append(SweepResult(axis, value, cfg.defense.label, cfg.attack.kind.value, history))
    return results


# ---------------------------------------------------------------------------
# Metric files
# ---------------------------------------------------------------------------

def _format_cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _json_cell(value: Any) -> str:
    if isinstance(value, float) and np.isfinite(value):
        return format(value, ".17g")
    return json.dumps(value)


def _json_line(row: Dict[str, Any]) -> str:
    # floats carry 17 significant digits, as in the CSV
    return "{" + ", ".join(f"{json.dumps(name)}: {_json_cell(row[name])}" for name in METRIC_FIELDS) + "}"


def _normalise_format(fmt: str) -> str:
    if fmt in ("json_lines", "jsonl"):
        return "json_lines"
    if fmt == "csv":
        return "csv"
    raise ConfigError(f"unknown metrics format '{fmt}' (csv or json_lines)")


def write_metrics(history: Sequence[RoundMetrics], path: Union[str, Path], fmt: str = "csv") -> None:
    path = Path(path)
    fmt = _normalise_format(fmt)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            if fmt == "csv":
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(METRIC_FIELDS)
                for record in history:
                    row = record.model_dump()
                    writer.writerow([_format_cell(row[name]) for name in METRIC_FIELDS])
            else:
                for record in history:
                    f.write(_json_line(record.model_dump()) + "\n")
    except OSError as e:
        raise SimulationError(f"cannot write metrics to {path}: {e}") from e


def read_metrics(path: Union[str, Path], fmt: str = "csv") -> List[RoundMetrics]:
    path = Path(path)
    fmt = _normalise_format(fmt)
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            if fmt == "json_lines":
                return [RoundMetrics.model_validate_json(line) for line in f if line.strip()]
            rows = list(csv.DictReader(f))
    except OSError as e:
        raise SimulationError(f"cannot read metrics from {path}: {e}") from e
    return [RoundMetrics.model_validate({k: (v if v != "" else None) for k, v in row.items()}) for row in rows]


def write_sweep_table(results: Sequence[SweepResult], path: Union[str, Path]) -> None:
    """One row per (axis value, defense, attack) with the final evaluated test error"""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["axis", "value", "defense", "attack", "final_test_error"])
            for result in results:
                writer.writerow([result.axis, _format_cell(result.value), result.defense,
                                 result.attack, _format_cell(result.final_test_error)])
    except OSError as e:
        raise SimulationError(f"cannot write sweep table to {path}: {e}") from e


def _metrics_name(fmt: str) -> str:
    return "metrics.csv" if _normalise_format(fmt) == "csv" else "metrics.jsonl"


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="AdaBFL federated learning simulator")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one experiment")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    run.add_argument("--workers", type=int, default=None)

    sweep = commands.add_parser("sweep", help="Run one experiment per axis value")
    sweep.add_argument("--config", required=True)
    sweep.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    sweep.add_argument("--values", required=True, help="Comma-separated axis values")
    sweep.add_argument("--defenses", default=None, help="Comma-separated defense labels (default: the config's)")
    sweep.add_argument("--out", required=True)
    sweep.add_argument("--format", choices=["csv", "jsonl"], default="csv")
    sweep.add_argument("--workers", type=int, default=None)

    validate = commands.add_parser("validate", help="Parse the config and check it without running")
    validate.add_argument("--config", required=True)
    return parser


def _checked_config(path: str) -> ExperimentConfig:
    cfg = load_experiment_config(path)
    checker = ExperimentHealthCheck(cfg)
    if not checker.collect():
        checker.report()
        raise ConfigError(f"{len(checker.issues)} configuration issue(s) in {path}")
    for warning in checker.warnings:
        logger.warning(warning)
    return cfg


def _command_run(args) -> None:
    cfg = _checked_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    history = run_experiment(cfg, args.workers)
    target = out / _metrics_name(args.format)
    write_metrics(history, target, args.format)
    logger.info(f"Metrics written to {target}")


def _command_sweep(args) -> None:
    base = _checked_config(args.config)
    values = parse_axis_values(args.axis, args.values)
    defenses = [d.strip() for d in args.defenses.split(",")] if args.defenses else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = run_sweep(base, args.axis, values, defenses, args.workers)
    for result in results:
        name = f"{args.axis}={_format_cell(result.value)}__{result.defense}__{result.attack}"
        write_metrics(result.history, out / f"{name}.{'csv' if args.format == 'csv' else 'jsonl'}", args.format)
    write_sweep_table(results, out / "sweep_summary.csv")
    logger.info(f"Sweep summary written to {out / 'sweep_summary.csv'}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            setup_logger(level=simconfig.log_level())
            return check_config_file(args.config)
        setup_logger(simconfig.log_dir(Path(args.out)), simconfig.log_level())
        if args.command == "run":
            _command_run(args)
        else:
            _command_sweep(args)
        return 0
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return e.exit_code
    except SimulationError as e:
        logger.error(f"Simulation failed: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        return SimulationError.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted manually.")
        return SimulationError.exit_code


if __name__ == "__main__":
    sys.exit(main())
