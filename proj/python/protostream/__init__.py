"""Python bindings for the protostream C++ core."""

import json

from . import _protostream
from ._protostream import (
    ProtostreamError,
    hungarian_assign,
    log_uniform_density,
    optimize_balanced_threshold,
    vmf_concentration,
)

__all__ = [
    "ProtostreamError",
    "calibrate",
    "evaluate",
    "generate_benchmark",
    "hungarian_assign",
    "log_uniform_density",
    "optimize_balanced_threshold",
    "run_stream",
    "vmf_concentration",
]


def generate_benchmark(**spec):
    return _protostream.generate_benchmark(json.dumps(spec))


def calibrate(features, labels, **options):
    """Calibrate on labeled support features; returns the artifact as a dict."""
    return json.loads(_protostream.calibrate(features, labels, **options))


def run_stream(artifact, features):
    """Returns (list of per-sample trace dicts, final snapshot dict)."""
    lines, snapshot = _protostream.run_stream(json.dumps(artifact), features)
    return [json.loads(line) for line in lines.splitlines()], json.loads(snapshot)


def evaluate(predictions, truths, base_labels, num_total_labels=0):
    return json.loads(_protostream.evaluate(predictions, truths, base_labels, num_total_labels))
