"""Social network generation with persona-driven chat models, plus baselines and analysis."""

from .graph import Graph, load_edge_list, save_edge_list
from .persona import DemographicConfig, Persona, PersonaSet, sample_personas
from .generators import GenerationSpec, generate, generate_batch
from .metrics import MetricVector, metric_vector

__all__ = [
    "Graph",
    "load_edge_list",
    "save_edge_list",
    "DemographicConfig",
    "Persona",
    "PersonaSet",
    "sample_personas",
    "GenerationSpec",
    "generate",
    "generate_batch",
    "MetricVector",
    "metric_vector",
]

__version__ = "0.1.0"
