"""Dense-connectivity architecture search toolkit.

Core pieces: meta-graph model and analytics (graphs), canonical forms and
augmentation (isomorphism), random sampling and dataset assembly (sampling),
persistent stores (store), surrogate predictor (predictor), score oracles
(oracles), search strategies (search), exact-chain verification (mcmc), and
reproduction studies (experiments).
"""

from . import errors, experiments, graphs, isomorphism, mcmc, oracles, predictor, sampling, search, store

__version__ = "0.1.0"

__all__ = [
    "errors",
    "experiments",
    "graphs",
    "isomorphism",
    "mcmc",
    "oracles",
    "predictor",
    "sampling",
    "search",
    "store",
    "__version__",
]
