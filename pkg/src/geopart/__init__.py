"""Equal-area, minimal-perimeter partitions of closed triangulated surfaces."""

__version__ = "0.1.0"
