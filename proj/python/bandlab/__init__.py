"""Random band matrix laboratory: resolvents, self-consistent kernels, and
fluctuation-averaging experiments backed by the C++ core."""

import json as _json

from ._bandlab import *  # noqa: F401,F403
from ._bandlab import __all__ as _core_all
from ._bandlab import run_experiment_json as _run_experiment_json
from ._bandlab import summarize_json as _summarize_json
from ._bandlab import default_config_json as _default_config_json

__version__ = "0.1.0"


def default_config(experiment):
    """Built-in defaults for one of the named experiments."""
    return _json.loads(_default_config_json(experiment))


def run_experiment(config):
    """Run an experiment from a config dict; returns the manifest dict."""
    return _json.loads(_run_experiment_json(_json.dumps(config)))


def summarize(manifest_paths):
    """Merge manifests of identical runs and recompute their checks."""
    return _json.loads(_summarize_json(list(manifest_paths)))


__all__ = list(_core_all) + [
    "default_config",
    "run_experiment",
    "summarize",
    "__version__",
]
