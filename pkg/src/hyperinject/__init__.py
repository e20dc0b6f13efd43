"""Node-injection attacks on pivotal hyperedges of hypergraph neural networks."""

__version__ = "0.1.0"
