"""Heterogeneous recipe-graph embedding engine.

Thin wrapper over the C++ core: synthetic graph generation, graph IO,
meta-path neighbor sampling, joint supervised + adversarial training,
evaluation and embedding export.
"""

import json as _json

from ._core import (  # noqa: F401
    DataError,
    DimensionError,
    Graph,
    NumericError,
    default_config,
    load_graph,
    make_split,
    sample_neighbors,
    save_graph,
)
from . import _core as _c

__version__ = _c.__version__


def _stringify(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    return str(value)


def synthesize(**options):
    """Generate a planted-signal synthetic graph.

    Accepts the generator options as keyword arguments, e.g.
    ``synthesize(recipes=300, classes=3, signal=1.0, seed=7)``.
    """
    return _c.synthesize({k: _stringify(v) for k, v in options.items()})


def train(graph, checkpoint=None, verbose=False, **config):
    """Train on a graph and return the metrics report as a dict.

    Keyword arguments override config keys (``epochs=50``, ``lambda_=0.1`` or
    ``lam=...`` are not needed -- the key is literally ``lambda``, pass it via
    ``**{"lambda": 0.2}`` or use ``lam`` alias below).
    """
    overrides = {}
    for key, value in config.items():
        if key == "lam":
            key = "lambda"
        overrides[key] = _stringify(value)
    return _json.loads(_c.train_json(graph, overrides, checkpoint or "", verbose))


def evaluate(checkpoint, graph, which="test"):
    """Evaluate a saved checkpoint; returns the metrics report as a dict."""
    return _json.loads(_c.evaluate_json(checkpoint, graph, which))


def export_embeddings(checkpoint, graph, ids, out):
    """Write a TSV of embeddings for the given node ids."""
    _c.export_embeddings(checkpoint, graph, list(ids), str(out))
