# -*- coding: utf-8 -*-

"""
Run configuration of the command-line tools.

A run is described by a flat set of keys (``RunConfig``). Values come from the defaults, a YAML file and the
command-line flags, in increasing order of precedence.
"""

__author__ = 'Overlayembed developers'

# Native Python packages
import os
import dataclasses
from dataclasses import dataclass
from typing import Optional, List

# 3rd party packages
import yaml

# Project imports
from overlayembed.exceptions import ConfigurationError, DataError
from overlayembed.losses.objectives import LossSpec, LOSS_KINDS, CONVERSIONS, READINGS, DISTORTION, PROXY, \
    DEFAULT_D0
from overlayembed.optimizer.adam import DEFAULT_INIT_SCALE
from overlayembed.spaces.signature import SPHERE_CONVENTIONS, STORED_CONVENTION

BUILTIN_DATASETS = ('usca312', 'csphd', 'power', 'facebook', 'wla6')
WEIGHTED_DATASETS = ('usca312',)

PROTOCOL_LEARNING_RATES = {
    DISTORTION: {'default': (0.1,), 'usca312': (0.1, 0.01)},
    PROXY: {'default': (0.1,), 'usca312': (0.01, 0.05), 'csphd': (0.01, 0.05)},
    'bipartite': {'default': (0.1, 0.05, 0.01, 0.001)},
}

BIPARTITE_SIGNATURES = ('E10', 'H10', 'S9', 'H5xS4', 'H5xE5', 'S4xE5', 'OL0:t=1', 'OL1:t=1', 'OL2:t=1', 'DOT')


@dataclass
class RunConfig:
    """
    Flat run configuration; every field is a key of the YAML file and a command-line flag
    """
    dataset: Optional[str] = None
    signature: str = 'E10'
    signatures: Optional[List[str]] = None
    dim: int = 10
    loss: str = DISTORTION
    conversion: Optional[str] = None
    conversion_reading: str = 'default'
    d0: float = DEFAULT_D0
    lr: Optional[float] = None
    lr_sweep: Optional[List[float]] = None
    iterations: int = 2000
    iterations_proxy: int = 1000
    seed: int = 0
    output: str = 'results'
    threads: int = 1
    weighted: Optional[bool] = None
    raw_weights: bool = False
    sphere_convention: str = STORED_CONVENTION
    init_scale: float = DEFAULT_INIT_SCALE
    exclude_self: bool = False
    pair_sample: Optional[int] = None
    denominator_sample: Optional[int] = None
    eval_every: int = 0
    log_every: int = 100
    restarts: int = 1
    manifest: Optional[str] = None
    n_small: int = 20
    n_large: int = 700
    p: float = 0.05
    embedding: Optional[str] = None

    def validate(self):
        """
        Checks the keys for mutual consistency

        :return: The config itself
        """
        if self.loss not in LOSS_KINDS:
            raise ConfigurationError("Unknown loss '%s', expected one of %s" % (self.loss, LOSS_KINDS))
        if self.conversion is not None:
            if self.conversion not in CONVERSIONS:
                raise ConfigurationError("Unknown conversion '%s', expected one of %s" % (
                    self.conversion, CONVERSIONS))
            if self.loss != PROXY:
                raise ConfigurationError("A conversion is only meaningful with the proxy loss")
        if self.conversion_reading not in READINGS:
            raise ConfigurationError("Unknown conversion reading '%s', expected one of %s" % (
                self.conversion_reading, READINGS))
        if self.sphere_convention not in SPHERE_CONVENTIONS:
            raise ConfigurationError("Unknown sphere convention '%s', expected one of %s" % (
                self.sphere_convention, SPHERE_CONVENTIONS))
        for name in ('dim', 'threads', 'restarts'):
            if getattr(self, name) < 1:
                raise ConfigurationError("%s must be at least 1, got %s" % (name, getattr(self, name)))
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative, got %s" % self.seed)
        for name in ('iterations', 'iterations_proxy'):
            if getattr(self, name) < 0:
                raise ConfigurationError("%s must be non-negative, got %s" % (name, getattr(self, name)))
        if self.lr is not None and self.lr_sweep:
            raise ConfigurationError("Give either lr or lr_sweep, not both")
        for rate in ([self.lr] if self.lr is not None else []) + list(self.lr_sweep or []):
            if not rate > 0:
                raise ConfigurationError("Learning rates must be positive, got %s" % rate)
        if self.signatures is not None and len(self.signatures) == 0:
            raise ConfigurationError("The signature list is empty")
        return self

    def signature_list(self):
        return list(self.signatures) if self.signatures else [self.signature]

    def loss_spec(self, loss=None):
        """
        LossSpec for the configured (or the given) loss kind
        """
        kind = loss or self.loss
        return LossSpec(kind=kind, conversion=self.conversion or 't1', d0=self.d0, reading=self.conversion_reading,
                        pair_sample=self.pair_sample, denominator_sample=self.denominator_sample,
                        exclude_self=self.exclude_self)

    def learning_rates(self, dataset_name=None, protocol=None):
        """
        Learning rates of a run: ``lr_sweep``, then ``lr``, then the protocol defaults of the dataset

        :param dataset_name: Name of the dataset, used for the protocol defaults
        :param protocol: Protocol key (``distortion``, ``proxy`` or ``bipartite``), defaults to the loss
        :return: Tuple of rates
        """
        if self.lr_sweep:
            return tuple(float(rate) for rate in self.lr_sweep)
        if self.lr is not None:
            return (float(self.lr),)
        rates = PROTOCOL_LEARNING_RATES[protocol or self.loss]
        return rates.get(dataset_name, rates['default'])


CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(RunConfig))


def load_config_file(path):
    """
    Reads a flat YAML mapping of ``RunConfig`` keys

    :param path: Path of the YAML file
    :return: Dictionary of the given keys
    """
    if not os.path.exists(path):
        raise ConfigurationError("Config file %s not found" % path)
    with open(path) as f:
        values = yaml.safe_load(f)
    if values is None:
        return {}
    if not isinstance(values, dict):
        raise ConfigurationError("Config file %s must hold a flat mapping of keys" % path)
    normalized = {str(key).replace('-', '_'): value for key, value in values.items()}
    unknown = sorted(set(normalized) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigurationError("Unknown config keys in %s: %s" % (path, ", ".join(unknown)))
    for key, value in normalized.items():
        if isinstance(value, dict):
            raise ConfigurationError("Config key '%s' must hold a plain value or list" % key)
    return normalized


def build_run_config(file_values=None, flag_values=None):
    """
    Merges defaults, file values and flag values (flags take precedence) into a validated RunConfig

    :param file_values: Dictionary from ``load_config_file`` or None
    :param flag_values: Dictionary of the flags given on the command line (absent flags omitted)
    :return: RunConfig
    """
    merged = {}
    file_values = dict(file_values or {})
    flag_values = flag_values or {}
    # a rate given on the command line replaces both rate keys of the file
    if 'lr' in flag_values or 'lr_sweep' in flag_values:
        file_values.pop('lr', None)
        file_values.pop('lr_sweep', None)
    for source in (file_values, flag_values):
        for key, value in source.items():
            if key not in CONFIG_KEYS:
                raise ConfigurationError("Unknown config key '%s'" % key)
            merged[key] = value
    if isinstance(merged.get('signatures'), str):
        merged['signatures'] = [merged['signatures']]
    if isinstance(merged.get('lr_sweep'), (int, float)):
        merged['lr_sweep'] = [merged['lr_sweep']]
    return RunConfig(**merged).validate()


def load_manifest(path):
    """
    Reads the dataset manifest mapping builtin names to local edge-list files

    Entries are either ``name: path`` or ``name: {path: ..., weighted: bool}``; relative paths are resolved
    against the directory of the manifest.

    :param path: Path of the YAML manifest
    :return: Dictionary ``name -> {'path': str, 'weighted': bool}``
    """
    if not os.path.exists(path):
        raise ConfigurationError("Dataset manifest %s not found" % path)
    with open(path) as f:
        entries = yaml.safe_load(f) or {}
    if not isinstance(entries, dict):
        raise ConfigurationError("Dataset manifest %s must hold a mapping of names" % path)
    base = os.path.dirname(os.path.abspath(path))
    registry = {}
    for name, entry in entries.items():
        name = str(name).lower()
        if isinstance(entry, str):
            entry = {'path': entry}
        if not isinstance(entry, dict) or 'path' not in entry:
            raise ConfigurationError("Manifest entry '%s' needs a path" % name)
        registry[name] = {
            'path': os.path.join(base, os.path.expanduser(entry['path'])),
            'weighted': bool(entry.get('weighted', name in WEIGHTED_DATASETS))
        }
    return registry


def resolve_dataset(config):
    """
    Resolves the dataset key to a name, a local path and the weighted flag

    :param config: RunConfig
    :return: Dictionary with keys 'name', 'path' and 'weighted'
    """
    if not config.dataset:
        raise ConfigurationError("No dataset given")
    key = config.dataset
    registry = load_manifest(config.manifest) if config.manifest else {}
    if key.lower() in registry:
        entry = registry[key.lower()]
        name, path, weighted = key.lower(), entry['path'], entry['weighted']
    elif key.lower() in BUILTIN_DATASETS and not os.path.exists(key):
        raise ConfigurationError("Dataset '%s' needs a manifest entry pointing to a local copy" % key)
    else:
        path = key
        name = os.path.splitext(os.path.basename(key))[0]
        weighted = name.lower() in WEIGHTED_DATASETS
    if config.weighted is not None:
        weighted = config.weighted
    if not os.path.exists(path):
        raise DataError("Dataset file %s not found" % path)
    return {'name': name, 'path': path, 'weighted': weighted}
