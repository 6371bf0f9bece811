"""Adversarial scenario generation for planners under test."""

__version__ = "0.1.0"
