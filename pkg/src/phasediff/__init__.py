"""Phase estimation under phase diffusion: quantum and homodyne Fisher information."""

__version__ = "0.1.0"
