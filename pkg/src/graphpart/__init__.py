"""Partition-based one-shot active learning for node classification."""

from .graph import (AttributedGraph, aggregate_features, homophily_ratio, ingest_cora_content, load_dataset,
                    load_generic, normalized_adjacency, write_generic)
from .partition import (Partition, build_partition, cnm_dendrogram, cost_curve, elbow_k, modularity_score,
                        partition_at_k)
from .selection import (GraphContext, featprop_select, graphpart_select, graphpartfar_select, objective_eval,
                        select_nodes)

__version__ = "0.1.0"
