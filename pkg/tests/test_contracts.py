#!/usr/bin/env python3
"""
Contract tests: experiment config files, the health check and runtime settings
"""
import json
import logging
import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path
from unittest import mock

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import simconfig
from config_check import ExperimentHealthCheck, check_config_file
from errors import ConfigError
from models import (
    AttackKind,
    BaselineKind,
    expand_dotted_keys,
    load_experiment_config,
    validate_experiment_dict,
)
from sim_logger import LOG_FILE_NAME, setup_logger, write_banner

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


class TestConfigFiles(unittest.TestCase):
    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def _write(self, payload) -> Path:
        path = self.test_dir / "config.json"
        path.write_text(payload if isinstance(payload, str) else json.dumps(payload))
        return path

    def test_reference_config(self):
        cfg = load_experiment_config(CONFIG_DIR / "reference.json")
        self.assertEqual(cfg.total_clients, 50)
        self.assertEqual(cfg.participants, 50)
        self.assertEqual(cfg.num_malicious, 15)
        self.assertEqual(cfg.attack.kind, AttackKind.GAUSSIAN)
        self.assertEqual(cfg.defense.label, "adabfl-parallel_3")
        self.assertEqual(cfg.model.param_dim, 210)

    def test_dotted_config(self):
        cfg = load_experiment_config(CONFIG_DIR / "fedavg_label_flip.json")
        self.assertEqual(cfg.attack.kind, AttackKind.LABEL_FLIP)
        self.assertEqual(cfg.defense.kind, "baseline")
        self.assertEqual(cfg.defense.baseline.kind, BaselineKind.FEDAVG)

    def test_idx_config_parses(self):
        cfg = load_experiment_config(CONFIG_DIR / "mnist_scaling.json")
        self.assertEqual(cfg.model.kind, "mlp")
        self.assertEqual(cfg.model.param_dim, 785 * 64 + 65 * 10)

    def test_dotted_and_nested_keys_merge(self):
        expanded = expand_dotted_keys({"attack.kind": "trim", "attack": {"seed": 4}, "rounds": 3})
        self.assertEqual(expanded, {"attack": {"kind": "trim", "seed": 4}, "rounds": 3})

    def test_dotted_key_over_scalar(self):
        with self.assertRaises(ConfigError):
            expand_dotted_keys({"rounds": 3, "rounds.max": 4})

    def test_unknown_keys_rejected(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_experiment_dict({"attack.strength": 2.0})
        self.assertIn("attack", str(ctx.exception))
        with self.assertRaises(ConfigError):
            load_experiment_config(self._write({"learning_rate": 0.1}))

    def test_out_of_range_values(self):
        with self.assertRaises(ConfigError):
            validate_experiment_dict({"malicious_fraction": 1.0})
        with self.assertRaises(ConfigError):
            validate_experiment_dict({"total_clients": 10, "participants_per_round": 11})
        with self.assertRaises(ConfigError):
            validate_experiment_dict({"rounds": 0})
        with self.assertRaises(ConfigError):
            validate_experiment_dict({"defense.weights.beta1": 0.5})

    def test_malicious_count_floors(self):
        cfg = validate_experiment_dict({"total_clients": 100, "malicious_fraction": 0.29})
        self.assertEqual(cfg.num_malicious, 29)
        cfg = validate_experiment_dict({"total_clients": 7, "malicious_fraction": 0.3})
        self.assertEqual(cfg.num_malicious, 2)

    def test_bias_below_one_over_classes(self):
        with self.assertRaises(ConfigError) as ctx:
            validate_experiment_dict({"model.num_classes": 3, "partition.bias": 0.2})
        self.assertIn("1/num_classes", str(ctx.exception))
        cfg = validate_experiment_dict({"model.num_classes": 3, "partition.bias": 0.34})
        self.assertEqual(cfg.partition.bias, 0.34)
        self.assertEqual(check_config_file(str(self._write({"model.num_classes": 3, "partition.bias": 0.2}))), 2)

    def test_adabfl_defaults_follow_population(self):
        cfg = validate_experiment_dict({"total_clients": 20, "malicious_fraction": 0.55})
        self.assertEqual(cfg.resolved_adabfl_trim(None).per_side, 9)
        self.assertEqual(cfg.resolved_trim(None).per_side, 11)
        self.assertEqual(cfg.resolved_peel(None), 11)
        self.assertEqual(cfg.resolved_peel(0), 0)
        cfg = validate_experiment_dict({"total_clients": 50, "malicious_fraction": 0.3})
        self.assertEqual(cfg.resolved_adabfl_trim(None).per_side, 15)

    def test_malicious_pool(self):
        cfg = validate_experiment_dict({"total_clients": 30, "participants_per_round": 10, "malicious_fraction": 0.3})
        self.assertEqual(cfg.malicious_pool_size, 9)
        self.assertEqual(cfg.num_malicious, 3)

    def test_unreadable_files(self):
        with self.assertRaises(ConfigError):
            load_experiment_config(self.test_dir / "missing.json")
        with self.assertRaises(ConfigError):
            load_experiment_config(self._write("{not json"))
        with self.assertRaises(ConfigError):
            load_experiment_config(self._write([1, 2, 3]))

    def test_config_errors_exit_two(self):
        self.assertEqual(ConfigError.exit_code, 2)


class TestHealthCheck(unittest.TestCase):
    def _check(self, **raw):
        checker = ExperimentHealthCheck(validate_experiment_dict(raw))
        return checker.collect(), checker

    def test_reference_is_healthy(self):
        checker = ExperimentHealthCheck(load_experiment_config(CONFIG_DIR / "reference.json"))
        self.assertTrue(checker.collect())
        self.assertEqual(checker.warnings, [])

    def test_fewer_clients_than_classes(self):
        healthy, checker = self._check(total_clients=5)
        self.assertFalse(healthy)
        self.assertTrue(any("num_classes" in issue for issue in checker.issues))

    def test_single_client_is_allowed(self):
        healthy, _ = self._check(total_clients=1, **{"defense.kind": "baseline"})
        self.assertTrue(healthy)

    def test_krum_population(self):
        healthy, checker = self._check(**{
            "total_clients": 10, "malicious_fraction": 0.8,
            "defense.kind": "baseline", "defense.baseline.kind": "krum",
        })
        self.assertFalse(healthy)
        self.assertTrue(any("krum" in issue for issue in checker.issues))

    def test_adabfl_trims_too_much(self):
        healthy, _ = self._check(**{"total_clients": 20, "defense.variant.trim.per_side": 10})
        self.assertFalse(healthy)

    def test_adabfl_majority_is_runnable(self):
        healthy, checker = self._check(**{"total_clients": 20, "malicious_fraction": 0.55, "attack.kind": "gaussian"})
        self.assertTrue(healthy, checker.issues)

    def test_backdoor_target_outside_model(self):
        healthy, _ = self._check(**{"malicious_fraction": 0.1, "attack.kind": "scaling", "attack.target_class": 12})
        self.assertFalse(healthy)

    def test_missing_idx_files(self):
        checker = ExperimentHealthCheck(load_experiment_config(CONFIG_DIR / "mnist_scaling.json"))
        if all(Path(p).exists() for p in (checker.cfg.data.train_images, checker.cfg.data.test_images)):
            self.skipTest("MNIST files present")
        self.assertFalse(checker.collect())

    def test_advisories_are_not_fatal(self):
        healthy, checker = self._check(rounds=5, eval_every=10, **{"attack.kind": "gaussian"})
        self.assertTrue(healthy)
        self.assertEqual(len(checker.warnings), 2)

    def test_check_config_file(self):
        self.assertEqual(check_config_file(str(CONFIG_DIR / "reference.json")), 0)
        self.assertEqual(check_config_file(str(CONFIG_DIR / "missing.json")), 2)


class TestRuntimeSettings(unittest.TestCase):
    def test_worker_flag_wins(self):
        with mock.patch.dict(os.environ, {"ADABFL_WORKERS": "3"}), \
                mock.patch.object(simconfig, "available_cores", return_value=8):
            self.assertEqual(simconfig.resolve_workers(2), 2)
            self.assertEqual(simconfig.resolve_workers(), 3)

    def test_workers_default_to_one(self):
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(simconfig.resolve_workers(), 1)

    def test_workers_capped_at_cores(self):
        with mock.patch.object(simconfig, "available_cores", return_value=2):
            with self.assertLogs('simconfig', level='WARNING'):
                self.assertEqual(simconfig.resolve_workers(16), 2)

    def test_bad_worker_settings(self):
        with self.assertRaises(ConfigError):
            simconfig.resolve_workers(0)
        with mock.patch.dict(os.environ, {"ADABFL_WORKERS": "many"}):
            with self.assertRaises(ConfigError):
                simconfig.resolve_workers()

    def test_log_level(self):
        with mock.patch.dict(os.environ, {"ADABFL_LOG_LEVEL": "debug"}):
            self.assertEqual(simconfig.log_level(), logging.DEBUG)
        with mock.patch.dict(os.environ, {"ADABFL_LOG_LEVEL": "LOUD"}):
            with self.assertRaises(ConfigError):
                simconfig.log_level()

    def test_log_dir(self):
        with mock.patch.dict(os.environ, {}, clear=True):
            self.assertEqual(simconfig.log_dir(Path("runs/a")), Path("runs/a"))
        with mock.patch.dict(os.environ, {"ADABFL_LOG_DIR": "/tmp/adabfl-logs"}):
            self.assertEqual(simconfig.log_dir(Path("runs/a")), Path("/tmp/adabfl-logs"))

    def test_memory_reading(self):
        self.assertGreater(simconfig.resident_memory_mb(), 0.0)


class TestLogger(unittest.TestCase):
    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())

    def tearDown(self):
        root = logging.getLogger()
        for handler in list(root.handlers):
            root.removeHandler(handler)
            handler.close()
        shutil.rmtree(self.test_dir)

    def test_banner_reaches_log_file(self):
        root = setup_logger(self.test_dir / "logs")
        write_banner(logging.getLogger("sim"), "RUN STARTED", ["Rounds: 3"])
        for handler in root.handlers:
            handler.flush()
        text = (self.test_dir / "logs" / LOG_FILE_NAME).read_text()
        self.assertIn("=" * 80, text)
        self.assertIn("RUN STARTED", text)
        self.assertIn("Rounds: 3", text)

    def test_console_only_without_directory(self):
        root = setup_logger()
        self.assertEqual(len(root.handlers), 1)
        setup_logger()
        self.assertEqual(len(root.handlers), 1)


if __name__ == '__main__':
    unittest.main()
