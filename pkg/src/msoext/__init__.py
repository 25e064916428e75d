"""Model checking MSO with global and local cardinality constraints."""

__version__ = "0.1.0"
