#!/usr/bin/env python3
"""
Experiment Health Check
=======================
Catches configurations that would fail, or quietly mean nothing, before any
compute starts:
- Population sizes the chosen defense or attack cannot work with
- Missing IDX files
- Evaluation schedules that skip most rounds
- Attack settings that do not fit the model

Issues are fatal (the `validate` command exits 2); warnings are advisory.
"""
import sys
from pathlib import Path
from typing import List

from errors import ConfigError
from models import (
    SYNTHETIC_BASELINES,
    TRIMMING_BASELINES,
    AttackKind,
    BaselineKind,
    ExperimentConfig,
    load_experiment_config,
)


class ExperimentHealthCheck:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.issues: List[str] = []
        self.warnings: List[str] = []

    def check_population(self):
        cfg = self.cfg
        n, chi = cfg.participants, cfg.num_malicious
        if 1 < cfg.total_clients < cfg.model.num_classes:
            self.issues.append(
                f"total_clients {cfg.total_clients} is below num_classes {cfg.model.num_classes}; "
                "some partition clusters would have no clients"
            )
        if cfg.attack.kind != AttackKind.NONE and chi == 0:
            self.warnings.append(
                f"attack '{cfg.attack.kind.value}' configured but floor({cfg.malicious_fraction} * {n}) = 0 malicious clients"
            )
        if cfg.attack.kind == AttackKind.NONE and chi > 0:
            self.warnings.append(f"{chi} malicious clients configured with attack 'none'; they train honestly")
        if cfg.attack.kind in (AttackKind.TRIM, AttackKind.MIN_MAX) and chi > 0 and n - chi < 2:
            self.issues.append(f"attack '{cfg.attack.kind.value}' needs at least 2 honest participants, got {n - chi}")
        if cfg.attack.kind == AttackKind.KRUM and chi > 0 and n - chi - 2 < 1:
            self.issues.append(f"krum attack needs n - chi - 2 >= 1 (n={n}, chi={chi})")

    def check_defense(self):
        cfg = self.cfg
        defense = cfg.defense
        n = cfg.participants
        if defense.kind == "adabfl":
            trim = cfg.resolved_adabfl_trim(defense.variant.trim)
            if n < 2:
                self.issues.append("adabfl's benign filter needs at least 2 participants")
            if n < 2 * trim.per_side + 1:
                self.issues.append(
                    f"adabfl trims {trim.per_side} per side but only {n} participants take part (need {2 * trim.per_side + 1})"
                )
            return

        rule = defense.baseline
        if rule.kind in TRIMMING_BASELINES:
            trim = cfg.resolved_trim(rule.trim)
            m = cfg.resolved_synthetic_count(rule.synthetic_count) if rule.kind in SYNTHETIC_BASELINES else 0
            if n + m <= 2 * trim.per_side:
                self.issues.append(
                    f"{rule.kind.value} trims {trim.per_side} per side from {n + m} updates; nothing would remain"
                )
        if rule.kind in (BaselineKind.GAU_TRIM, BaselineKind.GAU_MEDIAN) and n < 2:
            self.issues.append(f"{rule.kind.value} estimates a spread and needs at least 2 participants")
        if rule.kind in SYNTHETIC_BASELINES and rule.kind not in (BaselineKind.GAU_TRIM, BaselineKind.GAU_MEDIAN):
            m = cfg.resolved_synthetic_count(rule.synthetic_count)
            if m > n:
                self.issues.append(f"{rule.kind.value} copies {m} updates from only {n} participants")
        if rule.kind == BaselineKind.KRUM and n - cfg.num_malicious - 2 < 1:
            self.issues.append(f"krum needs n - chi - 2 >= 1 (n={n}, chi={cfg.num_malicious})")

    def check_data(self):
        cfg = self.cfg
        data = cfg.data
        if data.kind == "idx":
            for name in ("train_images", "train_labels", "test_images", "test_labels"):
                value = getattr(data, name)
                if value is None:
                    self.issues.append(f"data.{name} is required for idx data")
                elif not Path(value).exists():
                    self.issues.append(f"data.{name} not found: {value}")
        else:
            train_size = int(data.num_samples * data.train_fraction)
            if train_size < cfg.total_clients:
                self.warnings.append(
                    f"{train_size} training samples for {cfg.total_clients} clients; some clients will hold no data"
                )
            if train_size == data.num_samples:
                self.issues.append("train_fraction leaves no test samples")

    def check_model(self):
        cfg = self.cfg
        if cfg.model.kind == "mlp" and cfg.init == "zeros":
            self.warnings.append("mlp with zero initialisation: hidden units stay identical and never break symmetry")
        if cfg.attack.kind == AttackKind.SCALING:
            if cfg.attack.target_class >= cfg.model.num_classes:
                self.issues.append(
                    f"attack.target_class {cfg.attack.target_class} is not a class of a {cfg.model.num_classes}-class model"
                )
            if cfg.data.kind == "synthetic" and cfg.attack.trigger_width >= cfg.model.feature_dim:
                self.issues.append(
                    f"attack.trigger_width {cfg.attack.trigger_width} must be below feature_dim {cfg.model.feature_dim}"
                )

    def check_schedule(self):
        cfg = self.cfg
        if cfg.eval_every > cfg.rounds:
            self.warnings.append(f"eval_every {cfg.eval_every} exceeds rounds {cfg.rounds}; only the final round is evaluated")

    def collect(self) -> bool:
        """Run every check; True when there are no issues"""
        self.check_population()
        self.check_defense()
        self.check_data()
        self.check_model()
        self.check_schedule()
        return not self.issues

    def report(self) -> None:
        print("=" * 60)
        print("EXPERIMENT HEALTH CHECK")
        print("=" * 60)
        cfg = self.cfg
        print(f"Clients: {cfg.total_clients} (n={cfg.participants}, malicious={cfg.num_malicious})")
        print(f"Rounds: {cfg.rounds}, evaluate every {cfg.eval_every}")
        print(f"Attack: {cfg.attack.kind.value}, defense: {cfg.defense.label}")
        print("-" * 60)
        if not self.issues and not self.warnings:
            print("✅ All checks passed! Configuration is runnable.")
        if self.issues:
            print(f"❌ Critical Issues ({len(self.issues)}):")
            for issue in self.issues:
                print(f"  - {issue}")
        if self.warnings:
            print(f"⚠️  Warnings ({len(self.warnings)}):")
            for warning in self.warnings:
                print(f"  - {warning}")
        print("=" * 60)


def check_config_file(path: str) -> int:
    """Exit status for `validate`: 0 healthy, 2 on any config problem"""
    try:
        cfg = load_experiment_config(path)
    except ConfigError as e:
        print(f"❌ {e}")
        return e.exit_code
    checker = ExperimentHealthCheck(cfg)
    healthy = checker.collect()
    checker.report()
    return 0 if healthy else ConfigError.exit_code


if __name__ == "__main__":
    if len(sys.argv) != 2:
        print("usage: config_check.py <config.json>")
        sys.exit(2)
    sys.exit(check_config_file(sys.argv[1]))
