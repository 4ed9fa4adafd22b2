"""Small hand-built graphs shared across test modules."""

from cycadjust.graph import DirectedGraph


def health_graph():
    """Covariate feedback loop SE -> LS -> HI -> SE feeding treatment X and outcome Y."""
    labels = ["SE", "LS", "HI", "X", "Y"]
    edges = [("SE", "LS"), ("LS", "HI"), ("HI", "SE"), ("SE", "X"), ("HI", "X"), ("LS", "Y"), ("SE", "Y"), ("X", "Y")]
    return DirectedGraph.from_labels(labels, edges)


def chain():
    return DirectedGraph.from_labels(["A", "B", "C"], [("A", "B"), ("B", "C")])


def collider():
    return DirectedGraph.from_labels(["A", "B", "C"], [("A", "C"), ("B", "C")])


def confounded(observed_u=True):
    """U -> X, U -> Y, X -> Y, W -> X."""
    labels = ["U", "W", "X", "Y"]
    obs = None if observed_u else ["W", "X", "Y"]
    return DirectedGraph.from_labels(labels, [("U", "X"), ("U", "Y"), ("X", "Y"), ("W", "X")], obs)
