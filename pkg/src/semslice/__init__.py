"""Semantic-aware GAN-DDPG bandwidth allocation for RAN network slicing."""

__version__ = "0.1.0"
