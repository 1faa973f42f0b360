"""Bounded rewriting induction prover for constrained higher-order rewriting."""

__version__ = "0.1.0"
