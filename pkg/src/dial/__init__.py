"""Domain-invariant reward models: Bradley-Terry reward learning with a Wasserstein domain critic."""

__version__ = "0.1.0"
