"""irelab: sampling and verification of invariant random equivalence relations."""

__version__ = "0.1.0"
