"""Evolutionary and quantum games: replicator dynamics in vector and Lax form,
density-matrix evolution and entropies, quantum game protocols, Gibbs ensembles."""

from .errors import IntegrationUnstable, ValidationError

__version__ = "0.1.0"

__all__ = ["IntegrationUnstable", "ValidationError", "__version__"]
