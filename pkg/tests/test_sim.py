#!/usr/bin/env python3
"""
Tests for sim.py: round orchestration, determinism, metric files, sweeps and the CLI
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

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import adabfl
import classifier
import sim
from config_check import ExperimentHealthCheck
from data import write_idx_pair
from errors import ConfigError, RoundError, SimulationError
from generate_schema import build_metrics_schema
from models import METRIC_FIELDS, RoundMetrics, validate_experiment_dict

SMALL = {
    "total_clients": 10,
    "rounds": 4,
    "eval_every": 2,
    "seed": 1,
    "model.feature_dim": 5,
    "model.num_classes": 3,
    "data.num_samples": 600,
    "data.class_separation": 6.0,
    "train.learning_rate": 0.1,
    "train.batch_size": 16,
    "defense.kind": "baseline",
    "defense.baseline.kind": "fedavg",
}

# 20 clients, 30% of them malicious, under AdaBFL
POISONED = {
    "total_clients": 20,
    "rounds": 1,
    "malicious_fraction": 0.3,
    "model.feature_dim": 20,
    "model.num_classes": 10,
    "data.num_samples": 2000,
    "attack.kind": "gaussian",
    "defense.kind": "adabfl",
}


def small_config(**overrides):
    raw = dict(SMALL)
    raw.update(overrides)
    return validate_experiment_dict(raw)


def run_simulation(cfg, workers=1):
    with sim.FederatedSimulation(cfg, workers) as simulation:
        return simulation.run()


def reset_root_logger():
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
        handler.close()


class TestRounds(unittest.TestCase):
    def test_single_round(self):
        history = run_simulation(small_config(rounds=1))
        self.assertEqual(len(history), 1)
        self.assertTrue(history[0].evaluated)
        self.assertEqual(history[0].round, 1)

    def test_evaluation_schedule(self):
        history = run_simulation(small_config(rounds=50, eval_every=10))
        self.assertEqual(len(history), 50)
        self.assertEqual([r.round for r in history if r.evaluated], [10, 20, 30, 40, 50])
        for record in history:
            self.assertEqual(record.test_error is not None, record.evaluated)

    def test_final_round_always_evaluated(self):
        history = run_simulation(small_config(rounds=5, eval_every=2))
        self.assertEqual([r.round for r in history if r.evaluated], [2, 4, 5])

    def test_single_client_is_plain_sgd(self):
        cfg = small_config(total_clients=1, rounds=3)
        with sim.FederatedSimulation(cfg) as simulation:
            expected = classifier.initial_params(cfg.model, cfg.init, cfg.seed)
            data = simulation.client_data[0]
            simulation.run()
            for t in range(1, 4):
                expected = classifier.local_update(cfg.model, expected, data, simulation.train_cfg, t, 0)
            np.testing.assert_array_equal(simulation.global_params, expected)

    def test_fedavg_without_attack_has_no_aggregation_error(self):
        history = run_simulation(small_config())
        for record in history:
            self.assertEqual(record.agg_error_norm, 0.0)
            self.assertEqual(record.benign_set_size, 10)
            self.assertIsNone(record.beta1)

    def test_gaussian_attack_breaks_fedavg(self):
        cfg = small_config(**{
            "total_clients": 20, "rounds": 5, "malicious_fraction": 0.3,
            "model.feature_dim": 20, "model.num_classes": 10, "data.num_samples": 2000,
            "attack.kind": "gaussian",
        })
        history = run_simulation(cfg)
        self.assertGreaterEqual(history[-1].test_error, 0.5)

    def test_adabfl_reports_weights_on_simplex(self):
        cfg = small_config(**{"defense.kind": "adabfl", "malicious_fraction": 0.2, "attack.kind": "trim"})
        for record in run_simulation(cfg):
            total = record.beta1 + record.beta2 + record.beta3
            self.assertAlmostEqual(total, 1.0, delta=1e-12)
            self.assertIsNotNone(record.p1)
            self.assertIsNotNone(record.p2)
            self.assertGreaterEqual(record.benign_set_size, 1)

    def test_scaling_attack_reports_backdoor(self):
        cfg = small_config(**{"malicious_fraction": 0.2, "attack.kind": "scaling", "attack.trigger_width": 2})
        history = run_simulation(cfg)
        for record in history:
            self.assertEqual(record.backdoor_success is not None, record.evaluated)

    def test_partial_participation(self):
        cfg = small_config(participants_per_round=4)
        with sim.FederatedSimulation(cfg) as simulation:
            chosen = simulation.participants_for(3)
            self.assertEqual(chosen, simulation.participants_for(3))
            self.assertEqual(len(chosen), 4)
            self.assertEqual(chosen, sorted(chosen))
            record = simulation.run_round(1)
        self.assertEqual(record.benign_set_size, 4)

    def test_malicious_identities(self):
        cfg = small_config(malicious_fraction=0.3)
        with sim.FederatedSimulation(cfg) as simulation:
            self.assertEqual(len(simulation.malicious_ids), 3)
            self.assertTrue(all(0 <= cid < 10 for cid in simulation.malicious_ids))

    def test_malicious_count_is_exact_every_round(self):
        cfg = small_config(**{
            "total_clients": 30, "participants_per_round": 10, "malicious_fraction": 0.3,
            "data.num_samples": 1200,
        })
        with sim.FederatedSimulation(cfg) as simulation:
            self.assertEqual(len(simulation.malicious_ids), 9)
            seen = set()
            for t in range(1, 21):
                chosen = simulation.participants_for(t)
                self.assertEqual(len(chosen), 10, t)
                self.assertEqual(len(set(chosen)), 10, t)
                self.assertEqual(sum(cid in simulation.malicious_ids for cid in chosen), 3, t)
                seen.update(chosen)
        # the sampling still reaches beyond a fixed subset
        self.assertGreater(len(seen), 10)

    def test_malicious_majority_round(self):
        cfg = small_config(**dict(POISONED, **{"malicious_fraction": 0.55}))
        self.assertTrue(ExperimentHealthCheck(cfg).collect())
        with sim.FederatedSimulation(cfg) as simulation:
            self.assertEqual(len(simulation.malicious_ids), 11)
            self.assertEqual(simulation.defense.variant.trim.per_side, 9)
            self.assertEqual(simulation.defense.variant.peel, 11)
            record = simulation.run_round(1)
        self.assertGreaterEqual(record.benign_set_size, 1)
        self.assertLessEqual(record.benign_set_size, 9)

    def test_honest_majority_keeps_attackers_out(self):
        for attack in ("gaussian", "sybil"):
            cfg = small_config(**dict(POISONED, **{"rounds": 3, "attack.kind": attack}))
            captured = []

            def recording_defend(updates, *args):
                outcome = adabfl.defend(updates, *args)
                captured.append(([np.array(u) for u in updates], outcome))
                return outcome

            with mock.patch.object(sim, "defend", side_effect=recording_defend):
                with sim.FederatedSimulation(cfg) as simulation:
                    malicious = set(simulation.malicious_ids)
                    simulation.run()
            self.assertEqual(len(captured), 3, attack)
            for updates, outcome in captured:
                # full participation: update index is the client id
                self.assertEqual(len(updates), 20, attack)
                self.assertFalse(malicious & set(outcome.benign_indices), attack)
                honest = np.stack([u for i, u in enumerate(updates) if i not in malicious])
                self.assertTrue(np.all(outcome.global_params >= honest.min(axis=0) - 1e-12), attack)
                self.assertTrue(np.all(outcome.global_params <= honest.max(axis=0) + 1e-12), attack)

    def test_label_flip_poisons_only_malicious_clients(self):
        clean = small_config()
        flipped = small_config(**{"malicious_fraction": 0.3, "attack.kind": "label_flip"})
        with sim.FederatedSimulation(clean) as a, sim.FederatedSimulation(flipped) as b:
            for cid in range(10):
                expected = 2 - a.client_data[cid].labels if cid in b.malicious_ids else a.client_data[cid].labels
                np.testing.assert_array_equal(b.client_data[cid].labels, expected)

    def test_component_failure_names_round_and_stage(self):
        cfg = small_config(**{"total_clients": 4, "malicious_fraction": 0.5, "attack.kind": "krum"})
        with sim.FederatedSimulation(cfg) as simulation:
            with self.assertRaises(RoundError) as ctx:
                simulation.run_round(1)
        self.assertEqual(ctx.exception.round_number, 1)
        self.assertEqual(ctx.exception.stage, "attack")
        self.assertEqual(ctx.exception.exit_code, 3)


class TestDeterminism(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.cfg = small_config(**{"defense.kind": "adabfl", "malicious_fraction": 0.3, "attack.kind": "gaussian"})

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def _metrics_bytes(self, workers, name):
        path = Path(self.test_dir) / name
        sim.write_metrics(run_simulation(self.cfg, workers), path)
        return path.read_bytes()

    def test_repeat_runs_are_identical(self):
        self.assertEqual(self._metrics_bytes(1, "a.csv"), self._metrics_bytes(1, "b.csv"))

    def test_worker_count_does_not_matter(self):
        self.assertEqual(self._metrics_bytes(1, "one.csv"), self._metrics_bytes(4, "four.csv"))

    def test_component_seed_mixes_experiment_seed(self):
        self.assertEqual(sim.component_seed(1, 0), sim.component_seed(1, 0))
        self.assertNotEqual(sim.component_seed(1, 0), sim.component_seed(2, 0))


class TestMetricFiles(unittest.TestCase):
    def setUp(self):
        self.test_dir = tempfile.mkdtemp()
        self.records = [
            RoundMetrics(round=1, train_loss=1.0 / 3.0, benign_set_size=7, agg_error_norm=0.1),
            RoundMetrics(round=2, evaluated=True, test_error=0.125, beta1=0.2, beta2=0.3, beta3=0.5,
                         p1=1e-17, p2=2.0 / 7.0, grad_norm_estimate=123456.789),
        ]

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def test_empty_history_writes_header(self):
        path = Path(self.test_dir) / "empty.csv"
        sim.write_metrics([], path)
        self.assertEqual(path.read_text(), ",".join(METRIC_FIELDS) + "\n")

    def test_one_line_per_record(self):
        path = Path(self.test_dir) / "fifty.csv"
        sim.write_metrics([RoundMetrics(round=t) for t in range(1, 51)], path)
        self.assertEqual(len(path.read_text().splitlines()), 51)

    def test_csv_round_trip(self):
        path = Path(self.test_dir) / "metrics.csv"
        sim.write_metrics(self.records, path, "csv")
        self.assertEqual(sim.read_metrics(path, "csv"), self.records)

    def test_json_lines_round_trip(self):
        path = Path(self.test_dir) / "metrics.jsonl"
        sim.write_metrics(self.records, path, "jsonl")
        lines = path.read_text().splitlines()
        self.assertEqual(list(json.loads(lines[0])), METRIC_FIELDS)
        self.assertEqual(sim.read_metrics(path, "json_lines"), self.records)

    def test_json_lines_keep_full_precision(self):
        path = Path(self.test_dir) / "metrics.jsonl"
        sim.write_metrics(self.records, path, "jsonl")
        text = path.read_text()
        self.assertIn(format(1.0 / 3.0, ".17g"), text)
        self.assertIn(format(2.0 / 7.0, ".17g"), text)
        self.assertEqual(json.loads(text.splitlines()[0])["train_loss"], 1.0 / 3.0)

    def test_unknown_format(self):
        with self.assertRaises(ConfigError):
            sim.write_metrics(self.records, Path(self.test_dir) / "x.txt", "xml")

    def test_schema_from_records(self):
        schema = build_metrics_schema(self.records)
        self.assertEqual(set(schema["properties"]), set(METRIC_FIELDS))
        self.assertEqual(schema["required"], sorted(METRIC_FIELDS))
        self.assertEqual(schema["title"], "Round Metrics")

    def test_unwritable_path(self):
        missing = Path(self.test_dir) / "no" / "such" / "dir" / "metrics.csv"
        with self.assertRaises(SimulationError) as ctx:
            sim.write_metrics(self.records, missing)
        self.assertIn(str(missing), str(ctx.exception))


class TestSweeps(unittest.TestCase):
    def test_one_run_per_value_and_defense(self):
        base = small_config(rounds=1, **{"attack.kind": "gaussian"})
        results = sim.run_sweep(base, "malicious_fraction", [0.0, 0.1, 0.2, 0.3], ["fedavg", "adabfl"])
        self.assertEqual(len(results), 8)
        keys = {(r.value, r.defense, r.attack) for r in results}
        self.assertEqual(len(keys), 8)
        self.assertIn((0.3, "adabfl-parallel_3", "gaussian"), keys)

    def test_synthetic_fraction_keeps_simplex(self):
        base = small_config(rounds=2, **{"defense.kind": "adabfl"})
        for result in sim.run_sweep(base, "synthetic_fraction", [0.0, 0.5, 1.0]):
            for record in result.history:
                self.assertAlmostEqual(record.beta1 + record.beta2 + record.beta3, 1.0, delta=1e-12)

    def test_apply_axis(self):
        base = small_config()
        self.assertEqual(sim.apply_axis(base, "bias_h", 0.7).partition.bias, 0.7)
        self.assertEqual(sim.apply_axis(base, "synthetic_fraction", 0.5).defense.variant.m_synthetic, 5)
        self.assertEqual(sim.apply_axis(base, "defense", "krum").defense.label, "krum")
        self.assertEqual(sim.apply_axis(base, "defense", "adabfl-serial_2").defense.label, "adabfl-serial_2")
        self.assertEqual(sim.apply_axis(base, "rho1", 0.05).defense.weights.rho1, 0.05)

    def test_sweep_checks_every_value_before_running(self):
        base = small_config(**{"defense.kind": "adabfl", "defense.variant.trim.per_side": 4})
        with mock.patch.object(sim, "run_experiment") as run:
            with self.assertRaises(ConfigError) as ctx:
                sim.run_sweep(base, "total_clients", [10, 5])
        run.assert_not_called()
        self.assertIn("total_clients=5", str(ctx.exception))
        self.assertNotIn("total_clients=10", str(ctx.exception))

    def test_weight_axes(self):
        base = small_config(**{"defense.kind": "adabfl"})
        weights = sim.apply_axis(base, "beta_min", 0.05).defense.weights
        self.assertEqual((weights.beta1_min, weights.beta3_min), (0.05, 0.05))
        self.assertEqual(sim.apply_axis(base, "beta_max", 0.7).defense.weights.beta2_max, 0.7)
        self.assertEqual(sim.apply_axis(base, "weight_mode", "threshold_free").defense.variant.weight_mode.value,
                         "threshold_free")
        self.assertEqual(sim.parse_axis_values("beta_min", "0.05,0.1"), [0.05, 0.1])

    def test_bad_axis_inputs(self):
        base = small_config()
        with self.assertRaises(ConfigError):
            sim.apply_axis(base, "learning_rate", 0.1)
        with self.assertRaises(ConfigError):
            sim.apply_axis(base, "defense", "adabfl-serial_9")
        with self.assertRaises(ConfigError):
            sim.apply_axis(base, "synthetic_fraction", 1.5)
        with self.assertRaises(ConfigError):
            sim.parse_axis_values("total_clients", "10,abc")

    def test_parse_axis_values(self):
        self.assertEqual(sim.parse_axis_values("malicious_fraction", "0, 0.1,0.2"), [0.0, 0.1, 0.2])
        self.assertEqual(sim.parse_axis_values("attack", "gaussian,trim"), ["gaussian", "trim"])


class TestCommandLine(unittest.TestCase):
    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())
        self.config_path = self.test_dir / "config.json"
        self.config_path.write_text(json.dumps(dict(SMALL, rounds=3)))

    def tearDown(self):
        reset_root_logger()
        shutil.rmtree(self.test_dir)

    def test_run_writes_metrics(self):
        out = self.test_dir / "out"
        code = sim.main(["run", "--config", str(self.config_path), "--out", str(out)])
        self.assertEqual(code, 0)
        self.assertEqual(len((out / "metrics.csv").read_text().splitlines()), 4)

    def test_run_json_lines(self):
        out = self.test_dir / "out"
        code = sim.main(["run", "--config", str(self.config_path), "--out", str(out), "--format", "jsonl"])
        self.assertEqual(code, 0)
        self.assertEqual(len(sim.read_metrics(out / "metrics.jsonl", "jsonl")), 3)

    def test_sweep_writes_summary(self):
        out = self.test_dir / "sweep"
        code = sim.main(["sweep", "--config", str(self.config_path), "--axis", "bias_h",
                         "--values", "0.5,0.7", "--out", str(out)])
        self.assertEqual(code, 0)
        self.assertEqual(len((out / "sweep_summary.csv").read_text().splitlines()), 3)

    def test_validate(self):
        self.assertEqual(sim.main(["validate", "--config", str(self.config_path)]), 0)

    def test_unknown_key_is_config_error(self):
        self.config_path.write_text(json.dumps(dict(SMALL, learning_rate=0.1)))
        self.assertEqual(sim.main(["validate", "--config", str(self.config_path)]), 2)
        out = self.test_dir / "out"
        self.assertEqual(sim.main(["run", "--config", str(self.config_path), "--out", str(out)]), 2)

    def test_missing_config(self):
        out = self.test_dir / "out"
        self.assertEqual(sim.main(["run", "--config", str(self.test_dir / "nope.json"), "--out", str(out)]), 2)

    def test_idx_labels_beyond_num_classes(self):
        images, labels = self.test_dir / "images.idx", self.test_dir / "labels.idx"
        write_idx_pair(np.zeros((6, 4, 3), dtype=np.uint8), np.array([0, 1, 2, 5, 1, 0]), images, labels)
        raw = dict(SMALL, **{
            "model.feature_dim": 12,
            "data.kind": "idx", "data.train_images": str(images), "data.train_labels": str(labels),
            "data.test_images": str(images), "data.test_labels": str(labels),
        })
        with self.assertRaises(ConfigError) as ctx:
            sim.build_datasets(validate_experiment_dict(raw))
        self.assertIn("num_classes", str(ctx.exception))
        self.config_path.write_text(json.dumps(raw))
        out = self.test_dir / "out"
        self.assertEqual(sim.main(["run", "--config", str(self.config_path), "--out", str(out)]), 2)

    def test_bias_below_one_over_classes(self):
        self.config_path.write_text(json.dumps(dict(SMALL, **{"partition.bias": 0.2})))
        self.assertEqual(sim.main(["validate", "--config", str(self.config_path)]), 2)

    def test_runtime_failure_exit_code(self):
        images, labels = self.test_dir / "images.idx", self.test_dir / "labels.idx"
        images.write_bytes(b"\x00" * 16)
        labels.write_bytes(b"\x00" * 8)
        raw = dict(SMALL, **{
            "data.kind": "idx", "data.train_images": str(images), "data.train_labels": str(labels),
            "data.test_images": str(images), "data.test_labels": str(labels),
        })
        self.config_path.write_text(json.dumps(raw))
        out = self.test_dir / "out"
        self.assertEqual(sim.main(["run", "--config", str(self.config_path), "--out", str(out)]), 3)


if __name__ == '__main__':
    unittest.main()
