"""Superimposed multi-layer OOK over a discrete Poisson channel."""

import json

from ._superpose import (  # noqa: F401
    BudgetError,
    ChannelConfig,
    ConfigError,
    DegenerateLikelihood,
    InfeasibleError,
    InitError,
    LdpcCode,
    __version__,
    bcjr_posteriors,
    binary_entropy,
    em_estimate,
    log_likelihood,
    m_sequence,
    ook_mutual_information,
    ppm_mutual_information,
    sample_observations,
    sample_symbols,
    sequence_entropy,
    single_layer_rate,
    sum_rate_mc,
    viterbi_detect,
)
from . import _superpose


def channel(**fields):
    """ChannelConfig from the same keys a JSON config uses."""
    return ChannelConfig._from_json(json.dumps(fields))


def channel_to_dict(config):
    return json.loads(config._to_json())


def run_experiment(config, seed=None, workers=None, scale="desk"):
    """Run an experiment config (dict). Returns (kind, csv_text, manifest)."""
    kind, csv, manifest = _superpose._run_experiment(json.dumps(config), seed, workers, scale)
    return kind, csv, json.loads(manifest)
