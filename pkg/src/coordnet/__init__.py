"""Detection of coordinated user groups from synchronized actions in post streams."""

from coordnet.actions import ACTION_TYPES, ActionEvent, extract_actions
from coordnet.community import CommunityPartition, louvain, modularity_of
from coordnet.ingest import EventDataset, PostRecord, UserProfile, load_dataset, load_profiles
from coordnet.kernels import BACKEND
from coordnet.network import (
    CoordinationGraph,
    GraphStageStats,
    build_graph,
    graph_stats,
    threshold_graph,
)

__version__ = "0.1.0"

__all__ = [
    "ACTION_TYPES",
    "ActionEvent",
    "BACKEND",
    "CommunityPartition",
    "CoordinationGraph",
    "EventDataset",
    "GraphStageStats",
    "PostRecord",
    "UserProfile",
    "build_graph",
    "extract_actions",
    "graph_stats",
    "load_dataset",
    "load_profiles",
    "louvain",
    "modularity_of",
    "threshold_graph",
]
