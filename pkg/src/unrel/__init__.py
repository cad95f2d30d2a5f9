"""Network unreliability estimation: exact oracles, tree-packing importance
sampling and recursive contraction for the probability that a multigraph
disconnects under independent edge failures."""

__version__ = "0.1.0"
