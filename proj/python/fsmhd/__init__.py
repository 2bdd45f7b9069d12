"""Free-surface MHD inviscid-limit toolkit."""

import json
import os

from ._core import (
    FitResult,
    FsmhdError,
    Grid,
    LayerCoefficients,
    LayerProfile,
    ScanRow,
    ScanTable,
    Symbols,
    __version__,
    classify_layer,
    config_schema_version,
    decay_rate,
    fit_rate,
    layer_profile,
    layer_symbols,
    run_json,
    scaling_scan,
)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_CHECK = 0, 2, 3, 4


def _load(config):
    if isinstance(config, (str, os.PathLike)):
        with open(config) as f:
            return json.load(f)
    return dict(config)


def run(verb, config, output_dir=None):
    """Run a command on a config dict or path; returns (exit_code, summary)."""
    cfg = _load(config)
    cfg.setdefault("schema_version", config_schema_version)
    if output_dir is not None:
        cfg.setdefault("output", {})["directory"] = str(output_dir)
    code, summary = run_json(verb, json.dumps(cfg))
    return code, json.loads(summary)


def simulate(config, output_dir=None):
    return run("simulate", config, output_dir)


def sweep(config, output_dir=None):
    return run("sweep", config, output_dir)


def layer(config, output_dir=None):
    return run("layer", config, output_dir)


def check_algebra(config, output_dir=None):
    return run("check-algebra", config, output_dir)
