"""Flame-war mediation toolkit.

Ingests discussion threads, triages likely flame wars, generates judgment
and steering mediations through pluggable chat-model backends, evaluates
them with principle-based judging and user simulation, and compares model
output against human reference text with a deterministic metric suite.
"""

__version__ = "0.1.0"
