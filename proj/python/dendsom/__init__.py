"""Dendritic self-organizing maps with a pointwise-mutual-information readout."""

from ._core import (
    DendsomError,
    Model,
    auto_sigma0,
    bmu,
    config_hash,
    extract_receptive_fields,
    iter_crit,
    load_dataset,
    resolve_config,
    run_experiment,
    run_experiment_arrays,
    tile_count,
)

__all__ = [
    "DendsomError",
    "Model",
    "auto_sigma0",
    "bmu",
    "config_hash",
    "extract_receptive_fields",
    "iter_crit",
    "load_dataset",
    "resolve_config",
    "run_experiment",
    "run_experiment_arrays",
    "tile_count",
]
