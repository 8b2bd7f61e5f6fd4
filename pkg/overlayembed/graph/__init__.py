from overlayembed.graph.io import Graph, DistanceMatrix, load_edge_list, save_edge_list
from overlayembed.graph.paths import shortest_paths
from overlayembed.graph.synthetic import generate_bipartite
