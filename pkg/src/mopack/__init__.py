"""Semi-online 3D bin packing with item reorientation, per-face operational
time costs, and preference-conditioned multi-objective policies."""

__version__ = "0.1.0"
