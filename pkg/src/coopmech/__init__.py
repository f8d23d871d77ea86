"""Game-theoretic cooperation mechanisms for agent populations."""

__version__ = "0.1.0"
