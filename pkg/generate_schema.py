#!/usr/bin/env python3
"""
Generate a JSON Schema for the metrics stream from an existing metrics file
"""
import json
import sys
from pathlib import Path
from typing import Any, Dict, Sequence

from genson import SchemaBuilder

from models import METRIC_FIELDS, RoundMetrics
from sim import read_metrics

SCHEMA_PATH = Path("schemas/round-metrics.schema.json")


def build_metrics_schema(history: Sequence[RoundMetrics]) -> Dict[str, Any]:
    builder = SchemaBuilder()
    builder.add_schema({"type": "object", "required": METRIC_FIELDS})
    for record in history:
        builder.add_object(record.model_dump())

    schema = builder.to_schema()
    schema['$schema'] = "http://json-schema.org/draft-07/schema#"
    schema['title'] = "Round Metrics"
    schema['description'] = "One record per federated round, as written by sim.py"
    return schema


def generate_schema(metrics_path: str, fmt: str = "csv") -> Path:
    history = read_metrics(metrics_path, fmt)
    schema = build_metrics_schema(history)

    SCHEMA_PATH.parent.mkdir(exist_ok=True)
    with open(SCHEMA_PATH, 'w') as f:
        json.dump(schema, f, indent=2)

    print(f"✅ Generated schema from {len(history)} records: {SCHEMA_PATH}")
    return SCHEMA_PATH


if __name__ == "__main__":
    if len(sys.argv) not in (2, 3):
        print("usage: generate_schema.py <metrics file> [csv|json_lines]")
        sys.exit(2)
    generate_schema(sys.argv[1], *sys.argv[2:])
